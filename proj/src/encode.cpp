#include "degrade/encode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "degrade/units.hpp"

namespace degrade {

int MilpModel::add_variable(std::string name, VarType type, double lower, double upper) {
  variables.push_back(Variable{std::move(name), type, lower, upper});
  objective.push_back(0.0);
  return static_cast<int>(variables.size()) - 1;
}

int MilpModel::find_variable(std::string_view name) const {
  for (std::size_t k = 0; k < variables.size(); ++k)
    if (variables[k].name == name) return static_cast<int>(k);
  return -1;
}

std::size_t MilpModel::binary_count() const {
  return static_cast<std::size_t>(std::count_if(
      variables.begin(), variables.end(),
      [](const Variable& v) { return v.type == VarType::Binary; }));
}

std::size_t MilpModel::continuous_count() const { return variables.size() - binary_count(); }

void EncodeParams::validate() const {
  if (!(max_deviation > 0.0) || !(max_deviation <= kPi))
    throw std::invalid_argument("max_deviation must lie in (0, pi]");
  if (!(eps > 0.0) || !(eps < 0.1)) throw std::invalid_argument("eps must lie in (0, 0.1)");
  if (!(big_m > 4.0 * kPi)) throw std::invalid_argument("big_m must exceed 4 pi");
}

double choose_frame_rotation(const std::vector<double>& headings) {
  if (headings.empty()) return 0.0;
  std::vector<double> h;
  h.reserve(headings.size());
  for (double a : headings) h.push_back(wrap_angle(a));
  std::sort(h.begin(), h.end());
  double best_gap = -1.0;
  double best_centre = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double from = h[k];
    const double to = (k + 1 < h.size()) ? h[k + 1] : h.front() + kTwoPi;
    if (to - from > best_gap + 1e-12) {
      best_gap = to - from;
      best_centre = 0.5 * (from + to);
    }
  }
  return wrap_angle(best_centre + kPi);
}

double affine_theta_ij(double theta_i, double theta_j, int b_diff_pos, int b_case1,
                       int b_case4) {
  return 0.5 * (theta_i + theta_j) + (b_diff_pos - 0.5) * kPi +
         kTwoPi * (b_case1 - b_case4);
}

CaseBits case_bits(double theta_i, double theta_j) {
  CaseBits b;
  const double s = theta_i + theta_j;
  b.diff_pos = (theta_i - theta_j >= 0.0) ? 1 : 0;
  b.sum_inf = (s < -kPi) ? 1 : 0;
  b.sum_sup = (s >= kPi) ? 1 : 0;
  b.case1 = (b.diff_pos == 0 && b.sum_inf == 1) ? 1 : 0;
  b.case4 = (b.diff_pos == 1 && b.sum_sup == 1) ? 1 : 0;
  return b;
}

std::vector<double> scenario_headings(const MilpModel& m, const std::vector<double>& values) {
  std::vector<double> out;
  out.reserve(m.map.heading_var.size());
  for (int v : m.map.heading_var) out.push_back(wrap_angle(values.at(v) + m.map.frame_rotation));
  return out;
}

namespace {

// A row under construction: rhs = constant + m_multiple * M. The constant
// part is tracked separately to check the big-M margin.
struct RowBuilder {
  std::vector<Term> terms;
  double constant = 0.0;

  RowBuilder& add(int var, double coef) {
    for (auto& t : terms) {
      if (t.var == var) {
        t.coef += coef;
        return *this;
      }
    }
    terms.push_back(Term{var, coef});
    return *this;
  }
};

std::string pair_suffix(std::size_t a, std::size_t b) {
  return "_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
}

}  // namespace

MilpModel build_milp(const TrafficScenario& s, const PwlFit& fit, const EncodeParams& params) {
  params.validate();
  s.uncertainty.validate();
  const std::size_t n = s.aircraft.size();
  if (n < 2) throw std::invalid_argument("scenario needs at least two aircraft");
  const double speed = s.aircraft.front().speed;
  for (const auto& a : s.aircraft) {
    if (!(a.speed > 0.0)) throw std::invalid_argument("aircraft speed must be > 0");
    if (std::abs(a.speed - speed) > 1e-12 * speed)
      throw UnsupportedMixedSpeeds("identical-speed encoding: all aircraft must share one speed");
  }
  if (std::abs(fit.speed - speed) > 1e-12 * speed ||
      fit.uncertainty.delta_theta != s.uncertainty.delta_theta ||
      fit.uncertainty.delta_v != s.uncertainty.delta_v)
    throw std::invalid_argument("alpha fit was built for a different speed or uncertainty");

  const double M = params.big_m;
  const double eps = params.eps;

  MilpModel m;
  m.big_m = M;

  std::vector<double> headings;
  for (const auto& a : s.aircraft) headings.push_back(a.heading);
  const double rho = params.align_frame ? choose_frame_rotation(headings) : 0.0;
  m.map.frame_rotation = rho;

  std::vector<AircraftState> frame = s.aircraft;
  const double cr = std::cos(rho);
  const double sr = std::sin(rho);
  for (auto& a : frame) {
    const double x = a.x * cr + a.y * sr;
    const double y = -a.x * sr + a.y * cr;
    a.x = x;
    a.y = y;
    a.heading = wrap_angle(a.heading - rho);
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double h0 = frame[k].heading;
    const double lo = std::max(-kPi, h0 - params.max_deviation);
    const double hi = std::min(kPi, h0 + params.max_deviation);
    const std::string idx = std::to_string(k + 1);
    m.map.heading_var.push_back(m.add_variable("theta_" + idx, VarType::Continuous, lo, hi));
    m.map.deviation_var.push_back(m.add_variable("d_" + idx, VarType::Continuous, 0.0, INFINITY));
    m.map.initial_heading.push_back(h0);
    m.objective[m.map.deviation_var.back()] = 1.0;
  }

  double max_constant = 0.0;
  auto emit = [&](const std::string& name, const RowBuilder& r, Sense sense, double m_multiple,
                  bool track = true) {
    Constraint c;
    c.name = name;
    c.terms = r.terms;
    c.sense = sense;
    c.rhs = r.constant + m_multiple * M;
    if (track) max_constant = std::max(max_constant, std::abs(r.constant));
    m.rows.push_back(std::move(c));
  };

  for (std::size_t k = 0; k < n; ++k) {
    const int th = m.map.heading_var[k];
    const int d = m.map.deviation_var[k];
    const double h0 = m.map.initial_heading[k];
    const std::string idx = std::to_string(k + 1);
    RowBuilder up;
    up.add(d, 1.0).add(th, -1.0).constant = -h0;
    emit("dev_pos_" + idx, up, Sense::GreaterEqual, 0.0);
    RowBuilder dn;
    dn.add(d, 1.0).add(th, 1.0).constant = h0;
    emit("dev_neg_" + idx, dn, Sense::GreaterEqual, 0.0);
  }

  const UncertaintyModel& u = s.uncertainty;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool a_leads = precedes(frame[a], frame[b]);
      const std::size_t li = a_leads ? a : b;
      const std::size_t tj = a_leads ? b : a;
      const PairGeometry g = pair_geometry_lenient(frame[li], frame[tj], u);
      const std::string sfx = pair_suffix(a, b);

      PairVars pv;
      pv.lead = static_cast<int>(li);
      pv.trail = static_cast<int>(tj);
      // The fitted band never exceeds pi/2 and the rows that need more are
      // relaxed, so pi/2 is a valid upper bound.
      pv.alpha = m.add_variable("alpha" + sfx, VarType::Continuous, 0.0, kPi / 2.0);
      pv.b_diff_pos = m.add_variable("bdiffpos" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_sum_inf = m.add_variable("bsuminf" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_sum_sup = m.add_variable("bsumsup" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_case1 = m.add_variable("bcase1" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_case4 = m.add_variable("bcase4" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_alpha_pos = m.add_variable("balphapos" + sfx, VarType::Binary, 0.0, 1.0);
      pv.b_ineq_pos = m.add_variable("bineqpos" + sfx, VarType::Binary, 0.0, 1.0);
      const std::optional<double> family_gamma[3] = {g.gamma_tilde, g.gamma_hat, g.gamma_star};
      for (int f = 0; f < 3; ++f) {
        // A family whose tangent does not exist is permanently relaxed.
        const double lo = family_gamma[f] ? 0.0 : 1.0;
        pv.b_family[f] =
            m.add_variable("b" + std::to_string(f + 1) + sfx, VarType::Binary, lo, 1.0);
      }

      const int ti = m.map.heading_var[li];
      const int tjv = m.map.heading_var[tj];
      const int al = pv.alpha;
      const int bd = pv.b_diff_pos, bi = pv.b_sum_inf, bs = pv.b_sum_sup;
      const int c1 = pv.b_case1, c4 = pv.b_case4, ba = pv.b_alpha_pos, bq = pv.b_ineq_pos;
      const int f1 = pv.b_family[0], f2 = pv.b_family[1], f3 = pv.b_family[2];

      // Sign of theta_i - theta_j.
      {
        RowBuilder r;
        r.add(ti, 1.0).add(tjv, -1.0).add(bd, -M).constant = -eps;
        emit("diffpos_a" + sfx, r, Sense::LessEqual, 0.0);
        RowBuilder q;
        q.add(ti, -1.0).add(tjv, 1.0).add(bd, M);
        emit("diffpos_b" + sfx, q, Sense::LessEqual, 1.0);
      }
      // theta_i + theta_j < -pi.
      {
        RowBuilder r;
        r.add(ti, 1.0).add(tjv, 1.0).add(bi, M).constant = -kPi - eps;
        emit("suminf_a" + sfx, r, Sense::LessEqual, 1.0);
        RowBuilder q;
        q.add(ti, -1.0).add(tjv, -1.0).add(bi, -M).constant = kPi;
        emit("suminf_b" + sfx, q, Sense::LessEqual, 0.0);
      }
      // theta_i + theta_j >= pi.
      {
        RowBuilder r;
        r.add(ti, -1.0).add(tjv, -1.0).add(bs, M).constant = -kPi;
        emit("sumsup_a" + sfx, r, Sense::LessEqual, 1.0);
        RowBuilder q;
        q.add(ti, 1.0).add(tjv, 1.0).add(bs, -M).constant = kPi - eps;
        emit("sumsup_b" + sfx, q, Sense::LessEqual, 0.0);
      }
      // bCase1 = (1 - bDiffPos) * bSumInf, bCase4 = bDiffPos * bSumSup.
      {
        RowBuilder r;
        r.add(bd, 1.0).add(bi, -1.0).add(c1, 2.0).constant = 1.5;
        emit("case1_a" + sfx, r, Sense::LessEqual, 0.0);
        RowBuilder q;
        q.add(bd, -2.0).add(bi, 1.0).add(c1, -1.0).constant = 0.5;
        emit("case1_b" + sfx, q, Sense::LessEqual, 0.0);
        RowBuilder r4;
        r4.add(bd, -1.0).add(bs, -1.0).add(c4, 2.0).constant = 0.5;
        emit("case4_a" + sfx, r4, Sense::LessEqual, 0.0);
        RowBuilder q4;
        q4.add(bd, 1.0).add(bs, 1.0).add(c4, -1.0).constant = 1.5;
        emit("case4_b" + sfx, q4, Sense::LessEqual, 0.0);
      }

      // Heading-difference range reachable within the variable bounds.
      const Variable& vi = m.variables[ti];
      const Variable& vj = m.variables[tjv];
      const double delta_lo = vi.lower - vj.upper;
      const double delta_hi = vi.upper - vj.lower;

      // Epigraph of alpha. Active only when family 2 or 3 is enforced.
      for (std::size_t k = 0; k < fit.segments.size(); ++k) {
        const double slope = fit.segments[k].slope;
        const double icpt = fit.segments[k].intercept;
        const std::string ks = "_" + std::to_string(k + 1);
        const double pos_peak =
            std::max(slope * delta_lo + icpt, slope * delta_hi + icpt);
        const double neg_peak =
            std::max(-slope * delta_lo + icpt, -slope * delta_hi + icpt);
        const double mk = std::max(M, std::max(pos_peak, neg_peak) + 1.0);
        Constraint pos;
        pos.name = "alphapos" + ks + sfx;
        pos.terms = {{ti, slope}, {tjv, -slope}, {al, -1.0}, {ba, mk}, {f2, -mk}, {f3, -mk}};
        pos.sense = Sense::LessEqual;
        pos.rhs = -icpt;
        m.rows.push_back(pos);
        Constraint neg;
        neg.name = "alphaneg" + ks + sfx;
        neg.terms = {{ti, -slope}, {tjv, slope}, {al, -1.0}, {ba, -mk}, {f2, -mk}, {f3, -mk}};
        neg.sense = Sense::LessEqual;
        neg.rhs = -icpt - mk;
        m.rows.push_back(neg);
      }
      // alpha is symmetric about |delta| = pi. When the bounds let |delta|
      // pass pi, the secants are mirrored so they are not extrapolated.
      const bool wraps_pos = delta_hi > kPi;
      const bool wraps_neg = delta_lo < -kPi;
      for (std::size_t k = 0; k < fit.segments.size() && (wraps_pos || wraps_neg); ++k) {
        const double slope = fit.segments[k].slope;
        const double icpt = fit.segments[k].intercept;
        const std::string ks = "_" + std::to_string(k + 1);
        const double peak = std::max({slope * (kTwoPi - delta_lo) + icpt,
                                      slope * (kTwoPi - delta_hi) + icpt,
                                      slope * (kTwoPi + delta_lo) + icpt,
                                      slope * (kTwoPi + delta_hi) + icpt});
        const double mk = std::max(M, peak + 1.0);
        if (wraps_pos) {
          // bAlphaPos = 1: alpha >= s_k(2pi - delta).
          Constraint c;
          c.name = "alphawpos" + ks + sfx;
          c.terms = {{ti, -slope}, {tjv, slope}, {al, -1.0}, {ba, mk}, {f2, -mk}, {f3, -mk}};
          c.sense = Sense::LessEqual;
          c.rhs = -icpt - kTwoPi * slope;
          m.rows.push_back(c);
        }
        if (wraps_neg) {
          // bAlphaPos = 0: alpha >= s_k(2pi + delta).
          Constraint c;
          c.name = "alphawneg" + ks + sfx;
          c.terms = {{ti, slope}, {tjv, -slope}, {al, -1.0}, {ba, -mk}, {f2, -mk}, {f3, -mk}};
          c.sense = Sense::LessEqual;
          c.rhs = -icpt - kTwoPi * slope - mk;
          m.rows.push_back(c);
        }
      }
      // Outside delta_min <= |delta| <= 2pi - delta_min the cone covers the
      // plane: families 2 and 3 are unavailable there.
      if (wraps_pos) {
        RowBuilder r;
        r.add(ti, 1.0).add(tjv, -1.0).add(ba, M).add(f2, -M).add(f3, -M).constant =
            kTwoPi - fit.delta_min;
        emit("coneavail_wpos" + sfx, r, Sense::LessEqual, 0.0);
      }
      if (wraps_neg) {
        RowBuilder q;
        q.add(ti, -1.0).add(tjv, 1.0).add(ba, -M).add(f2, -M).add(f3, -M).constant =
            kTwoPi - fit.delta_min;
        emit("coneavail_wneg" + sfx, q, Sense::LessEqual, -1.0);
      }
      {
        RowBuilder r;
        r.add(ti, -1.0).add(tjv, 1.0).add(ba, M).add(f2, -M).add(f3, -M).constant =
            -fit.delta_min;
        emit("coneavail_pos" + sfx, r, Sense::LessEqual, 0.0);
        RowBuilder q;
        q.add(ti, 1.0).add(tjv, -1.0).add(ba, -M).add(f2, -M).add(f3, -M).constant =
            -fit.delta_min;
        emit("coneavail_neg" + sfx, q, Sense::LessEqual, -1.0);
      }

      // x = theta_ij - omega = 0.5 ti + 0.5 tj + pi bd + 2pi c1 - 2pi c4 - pi/2 - omega
      const double x_const = -kPi / 2.0 - g.omega;
      auto x_terms = [&](RowBuilder& r, double sign) {
        r.add(ti, 0.5 * sign).add(tjv, 0.5 * sign).add(bd, kPi * sign)
            .add(c1, kTwoPi * sign).add(c4, -kTwoPi * sign);
      };
      const double cone_coef[3] = {0.0, 1.0, 0.5};
      for (int f = 0; f < 3; ++f) {
        if (!family_gamma[f]) continue;
        const double gam = *family_gamma[f];
        const int bf = pv.b_family[f];
        const std::string fs = std::to_string(f + 1);
        // Side A (bIneqPos = 0): x - c alpha > gamma.
        RowBuilder ra;
        x_terms(ra, -1.0);
        if (cone_coef[f] != 0.0) ra.add(al, cone_coef[f]);
        ra.add(bq, -M).add(bf, -M);
        ra.constant = -eps - gam + x_const;
        emit("avoid" + fs + "_a" + sfx, ra, Sense::LessEqual, 0.0);
        // Side B (bIneqPos = 1): x + c alpha < -gamma.
        RowBuilder rb;
        x_terms(rb, 1.0);
        if (cone_coef[f] != 0.0) rb.add(al, cone_coef[f]);
        rb.add(bq, M).add(bf, -M);
        rb.constant = -eps - gam - x_const;
        emit("avoid" + fs + "_b" + sfx, rb, Sense::LessEqual, 1.0);
        if (f == 0) continue;
        // Wrap guards: the far edge of the cone must not reach the line of
        // sight from the other side.
        RowBuilder ga;
        x_terms(ga, 1.0);
        ga.add(al, cone_coef[f]).add(bq, -M).add(bf, -M);
        ga.constant = -eps - gam + kTwoPi - x_const;
        emit("wrap" + fs + "_a" + sfx, ga, Sense::LessEqual, 0.0);
        RowBuilder gb;
        x_terms(gb, -1.0);
        gb.add(al, cone_coef[f]).add(bq, M).add(bf, -M);
        gb.constant = -eps - gam + kTwoPi + x_const;
        emit("wrap" + fs + "_b" + sfx, gb, Sense::LessEqual, 1.0);
      }
      // Exactly one family enforced.
      {
        RowBuilder r;
        r.add(f1, 1.0).add(f2, 1.0).add(f3, 1.0).constant = 2.0;
        emit("family" + sfx, r, Sense::Equal, 0.0);
      }
      m.map.pairs.push_back(pv);
    }
  }

  if (!(M > 4.0 * kPi + max_constant)) {
    std::ostringstream os;
    os << "big_m = " << M << " must exceed 4 pi + " << max_constant;
    throw std::invalid_argument(os.str());
  }
  return m;
}

}  // namespace degrade
