#include "degrade/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "degrade/units.hpp"

namespace degrade {

double SeparationReport::worst_margin() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) w = std::min(w, p.margin);
  return w;
}

namespace {

// f(t) = |p + v t| - (c0 + c1 t) on one piece of the radius sum.
struct Piece {
  double px, py, vx, vy;
  double c0, c1;

  double f(double t) const { return std::hypot(px + vx * t, py + vy * t) - (c0 + c1 * t); }
  double df(double t) const {
    const double x = px + vx * t, y = py + vy * t;
    const double d = std::hypot(x, y);
    if (d == 0.0) return 0.0;  // the distance minimum itself
    return (x * vx + y * vy) / d - c1;
  }
};

// Minimum of a convex piece on [a, b].
void piece_minimum(const Piece& pc, double a, double b, SeparationMinimum& best) {
  auto take = [&](double t) {
    const double v = pc.f(t);
    if (v < best.margin) {
      best.margin = v;
      best.t_min = t;
    }
  };
  take(a);
  take(b);
  if (!(b > a)) return;
  if (pc.df(a) >= 0.0 || pc.df(b) <= 0.0) return;
  double lo = a, hi = b;
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (pc.df(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  take(0.5 * (lo + hi));
}

}  // namespace

SeparationMinimum min_separation(const AircraftState& a_i, const AircraftState& a_j,
                                 const UncertaintyModel& u, double horizon) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  const double gi = growth_rate(a_i.speed, u);
  const double gj = growth_rate(a_j.speed, u);
  Piece base;
  base.px = a_i.x - a_j.x;
  base.py = a_i.y - a_j.y;
  base.vx = a_i.speed * std::cos(a_i.heading) - a_j.speed * std::cos(a_j.heading);
  base.vy = a_i.speed * std::sin(a_i.heading) - a_j.speed * std::sin(a_j.heading);

  // Breakpoints where one radius saturates.
  const double ti = gi > 0.0 ? transition_time(u, gi) : INFINITY;
  const double tj = gj > 0.0 ? transition_time(u, gj) : INFINITY;
  std::vector<double> cuts = {0.0, horizon};
  for (double t : {ti, tj})
    if (t > 0.0 && t < horizon) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());

  SeparationMinimum best{INFINITY, 0.0};
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    const double mid = 0.5 * (a + b);
    Piece pc = base;
    pc.c1 = (mid < ti ? gi : 0.0) + (mid < tj ? gj : 0.0);
    pc.c0 = radius_at(u, gi, mid) + radius_at(u, gj, mid) - pc.c1 * mid;
    piece_minimum(pc, a, b, best);
  }
  return best;
}

std::array<bool, 3> exact_families(const AircraftState& a_i, const AircraftState& a_j,
                                   const UncertaintyModel& u) {
  std::array<bool, 3> out{};
  const PairGeometry g = pair_geometry_lenient(a_i, a_j, u);
  if (relative_speed(a_i, a_j) == 0.0) {
    // No relative motion: the gap never closes, so only the final radii matter.
    out[0] = g.distance > 2.0 * u.rf;
    return out;
  }
  const double x = std::abs(wrap_angle(exact_theta_ij(a_i, a_j) - g.omega));
  const double alpha = exact_alpha(a_i, a_j, u);
  if (g.gamma_tilde) out[0] = x > *g.gamma_tilde;
  if (g.gamma_hat && alpha < kPi) out[1] = x - alpha > *g.gamma_hat;
  if (g.gamma_star && alpha < kPi) out[2] = x - alpha / 2.0 > *g.gamma_star;
  return out;
}

SeparationReport check_solution(const TrafficScenario& s, const std::vector<double>& headings,
                                double horizon) {
  if (headings.size() != s.aircraft.size())
    throw std::invalid_argument("expected " + std::to_string(s.aircraft.size()) +
                                " headings, got " + std::to_string(headings.size()));
  std::vector<AircraftState> ac = s.aircraft;
  for (std::size_t k = 0; k < ac.size(); ++k) ac[k].heading = wrap_angle(headings[k]);
  SeparationReport rep;
  rep.horizon = horizon;
  for (std::size_t i = 0; i < ac.size(); ++i) {
    for (std::size_t j = i + 1; j < ac.size(); ++j) {
      PairSeparation ps;
      ps.id_i = ac[i].id;
      ps.id_j = ac[j].id;
      const SeparationMinimum m = min_separation(ac[i], ac[j], s.uncertainty, horizon);
      ps.margin = m.margin;
      ps.t_min = m.t_min;
      ps.pass = m.margin >= -kPassTolerance;
      try {
        ps.families = exact_families(ac[i], ac[j], s.uncertainty);
      } catch (const AlreadyInConflict&) {
        ps.families = {};
      }
      rep.pass = rep.pass && ps.pass;
      rep.pairs.push_back(ps);
    }
  }
  return rep;
}

GridOptimum grid_oracle_2ac(const TrafficScenario& s, double step, double max_deviation) {
  if (s.aircraft.size() != 2) throw std::invalid_argument("grid oracle needs exactly 2 aircraft");
  if (!(step > 0.0) || step > 0.01) throw std::invalid_argument("step must lie in (0, 0.01] rad");
  if (!(max_deviation >= 0.0)) throw std::invalid_argument("max_deviation must be >= 0");
  const int half = static_cast<int>(std::floor(max_deviation / step + 1e-9));
  AircraftState a = s.aircraft[0], b = s.aircraft[1];
  const double t0a = a.heading, t0b = b.heading;

  // Offsets ordered by magnitude so the first feasible b for a given a is the
  // cheapest one.
  std::vector<int> order;
  order.push_back(0);
  for (int k = 1; k <= half; ++k) {
    order.push_back(k);
    order.push_back(-k);
  }
  // Costs in grid units keep ties exact. Among equal costs the smaller
  // largest deviation wins, so symmetric instances get a balanced optimum.
  GridOptimum best;
  int best_units = std::numeric_limits<int>::max();
  int best_peak = std::numeric_limits<int>::max();
  for (int ka : order) {
    if (std::abs(ka) > best_units) break;
    a.heading = wrap_angle(t0a + ka * step);
    for (int kb : order) {
      const int units = std::abs(ka) + std::abs(kb);
      const int peak = std::max(std::abs(ka), std::abs(kb));
      if (units > best_units || (units == best_units && peak >= best_peak)) {
        if (units > best_units) break;
        continue;
      }
      b.heading = wrap_angle(t0b + kb * step);
      const auto fam = exact_families(a, b, s.uncertainty);
      if (fam[0] || fam[1] || fam[2]) {
        best_units = units;
        best_peak = peak;
        best.headings = {a.heading, b.heading};
        break;
      }
    }
  }
  best.objective = best_units * step;
  if (best.headings.empty())
    throw NoFeasibleGridPoint("no feasible grid point at step " + std::to_string(step) + " rad");
  return best;
}

}  // namespace degrade
