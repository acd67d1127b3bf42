#include <cmath>
#include <random>
#include <set>

#include "degrade/encode.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace degrade;
using testing_support::paper_speed;
using testing_support::paper_uncertainty;
using testing_support::random_scenario;

namespace {

double row_activity(const Constraint& c, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& t : c.terms) s += t.coef * x[t.var];
  return s;
}

bool row_holds(const Constraint& c, const std::vector<double>& x, double tol = 1e-9) {
  const double a = row_activity(c, x);
  switch (c.sense) {
    case Sense::LessEqual: return a <= c.rhs + tol;
    case Sense::GreaterEqual: return a >= c.rhs - tol;
    case Sense::Equal: return std::abs(a - c.rhs) <= tol;
  }
  return false;
}

}  // namespace

TEST_CASE("alpha fit interpolates knots and brackets the curve") {
  const auto u = paper_uncertainty();
  const double v = paper_speed();
  const PwlFit fit = fit_alpha_pwl(u, v);
  CHECK(fit.segments.size() == static_cast<std::size_t>(kDefaultSegmentCount));
  CHECK(fit.delta_min == doctest::Approx(deg_to_rad(10.0)).epsilon(1e-9));
  for (std::size_t k = 0; k + 1 < fit.knots.size(); ++k) {
    for (double d : {fit.knots[k], fit.knots[k + 1]}) {
      const auto& s = fit.segments[k];
      CHECK(std::abs(s.slope * d + s.intercept - alpha_of_heading_difference(d, v, u)) < 1e-12);
    }
  }
  const double at_pi = fit.evaluate(kPi);
  CHECK(at_pi >= 0.08727 - 1e-5);
  CHECK(at_pi <= 0.10727);

  // 10^4 grid over the fitted band on both mirror sides.
  const PwlError e = measure_fit(fit, 5000);
  CHECK(e.points == 10000);
  CHECK(e.max_under <= 1e-12);
  CHECK(e.max_over <= 0.02);
}

TEST_CASE("alpha fit rejects bad input") {
  const auto u = paper_uncertainty();
  CHECK_THROWS_AS(fit_alpha_pwl(u, paper_speed(), 2), std::invalid_argument);
  UncertaintyModel none = u;
  none.delta_theta = 0.0;
  CHECK_THROWS_AS(fit_alpha_pwl(none, paper_speed()), std::invalid_argument);
}

TEST_CASE("affine theta_ij matches the exact angle on a grid") {
  // 100 x 100 grid, offset so no point lands on a case boundary.
  const double v = paper_speed();
  int checked = 0;
  for (int a = 0; a < 100; ++a) {
    for (int b = 0; b < 100; ++b) {
      const double ti = -kPi + kTwoPi * (a + 0.37) / 100.0;
      const double tj = -kPi + kTwoPi * (b + 0.61) / 100.0;
      const CaseBits c = case_bits(ti, tj);
      const double affine = affine_theta_ij(ti, tj, c.diff_pos, c.case1, c.case4);
      const double exact =
          exact_theta_ij(AircraftState{1, 0, 0, ti, v}, AircraftState{2, 5, 0, tj, v});
      CHECK(affine >= -kPi - 1e-12);
      CHECK(affine <= kPi + 1e-12);
      CHECK(std::abs(wrap_angle(affine - exact)) < 1e-9);
      ++checked;
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("variable and row counts") {
  const auto u = paper_uncertainty();
  const PwlFit fit = fit_alpha_pwl(u, paper_speed());
  std::mt19937_64 rng(5);
  for (int n : {2, 3, 8}) {
    const auto s = random_scenario(rng, n);
    const MilpModel m = build_milp(s, fit);
    const std::size_t pairs = static_cast<std::size_t>(n * (n - 1) / 2);
    CHECK(m.continuous_count() == static_cast<std::size_t>(2 * n) + pairs);
    CHECK(m.binary_count() == 10 * pairs);
    CHECK(m.map.pairs.size() == pairs);
    std::size_t pwl = 0, family = 0;
    for (const auto& r : m.rows) {
      if (r.name.rfind("alphapos", 0) == 0 || r.name.rfind("alphaneg", 0) == 0) ++pwl;
      if (r.name.rfind("family", 0) == 0) ++family;
      for (const auto& t : r.terms) CHECK(std::isfinite(t.coef));
    }
    CHECK(pwl == 2 * fit.segments.size() * pairs);
    CHECK(family == pairs);
    // Every binary appears in some row, or is fixed by its bounds.
    std::set<int> used;
    for (const auto& r : m.rows)
      for (const auto& t : r.terms) used.insert(t.var);
    for (std::size_t k = 0; k < m.variables.size(); ++k) {
      const auto& var = m.variables[k];
      if (var.type == VarType::Binary && var.lower < var.upper) CHECK(used.count(static_cast<int>(k)));
    }
  }
}

TEST_CASE("case rows admit exactly the implied case bits") {
  const auto u = paper_uncertainty();
  const PwlFit fit = fit_alpha_pwl(u, paper_speed());
  TrafficScenario s;
  s.uncertainty = u;
  s.aircraft = {AircraftState{1, 0, 0, 0.0, paper_speed()},
                AircraftState{2, 30, 0, kPi, paper_speed()}};
  EncodeParams p;
  p.align_frame = false;
  p.max_deviation = kPi;
  const MilpModel m = build_milp(s, fit, p);
  const auto& pv = m.map.pairs.front();
  const int ti = m.map.heading_var[pv.lead];
  const int tj = m.map.heading_var[pv.trail];
  std::vector<const Constraint*> case_rows;
  for (const auto& r : m.rows) {
    for (const char* prefix : {"diffpos", "suminf", "sumsup", "case1", "case4"})
      if (r.name.rfind(prefix, 0) == 0) case_rows.push_back(&r);
  }
  CHECK(case_rows.size() == 10);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> h(-kPi, kPi);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(m.variables.size(), 0.0);
    x[ti] = h(rng);
    x[tj] = h(rng);
    const CaseBits want = case_bits(x[ti], x[tj]);
    int feasible = 0;
    for (int mask = 0; mask < 32; ++mask) {
      x[pv.b_diff_pos] = mask & 1;
      x[pv.b_sum_inf] = (mask >> 1) & 1;
      x[pv.b_sum_sup] = (mask >> 2) & 1;
      x[pv.b_case1] = (mask >> 3) & 1;
      x[pv.b_case4] = (mask >> 4) & 1;
      bool ok = true;
      for (const auto* r : case_rows) ok = ok && row_holds(*r, x, 0.0);
      if (!ok) continue;
      ++feasible;
      CHECK(x[pv.b_diff_pos] == want.diff_pos);
      CHECK(x[pv.b_sum_inf] == want.sum_inf);
      CHECK(x[pv.b_sum_sup] == want.sum_sup);
      CHECK(x[pv.b_case1] == want.case1);
      CHECK(x[pv.b_case4] == want.case4);
    }
    CHECK(feasible == 1);
  }
}

TEST_CASE("encoder rejects mixed speeds and bad parameters") {
  const auto u = paper_uncertainty();
  const PwlFit fit = fit_alpha_pwl(u, paper_speed());
  TrafficScenario s;
  s.uncertainty = u;
  s.aircraft = {AircraftState{1, 0, 0, 0.0, paper_speed()},
                AircraftState{2, 30, 0, kPi, 1.1 * paper_speed()}};
  CHECK_THROWS_AS(build_milp(s, fit), UnsupportedMixedSpeeds);
  s.aircraft[1].speed = paper_speed();
  EncodeParams p;
  p.big_m = 10.0;
  CHECK_THROWS_AS(build_milp(s, fit, p), std::invalid_argument);
  p = EncodeParams{};
  p.eps = 0.0;
  CHECK_THROWS_AS(build_milp(s, fit, p), std::invalid_argument);
}

TEST_CASE("frame rotation keeps headings away from the cut") {
  CHECK(std::abs(wrap_angle(choose_frame_rotation({0.0, 0.2}) - 0.1)) < 1e-12);
  const std::vector<double> near_cut = {kPi - 0.01, -kPi + 0.02, 3.1};
  const double rho = choose_frame_rotation(near_cut);
  for (double h : near_cut) CHECK(std::abs(wrap_angle(h - rho)) < 0.1);
}

TEST_CASE("LP round trip on random models") {
  const auto u = paper_uncertainty();
  const PwlFit fit = fit_alpha_pwl(u, paper_speed());
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 4;
    const auto s = random_scenario(rng, n);
    const MilpModel m = build_milp(s, fit);
    const std::string text = export_lp(m);
    const MilpModel back = parse_lp(text);
    std::string why;
    CHECK_MESSAGE(structurally_equal(m, back, 1e-12, &why), why);
    CHECK(back.map.frame_rotation == m.map.frame_rotation);
    CHECK(back.map.initial_heading == m.map.initial_heading);
    CHECK(back.map.pairs.size() == m.map.pairs.size());
    CHECK(export_lp(back) == text);
  }
}

TEST_CASE("LP export details") {
  MilpModel empty;
  const int x = empty.add_variable("x", VarType::Continuous, 0.0, 10.0);
  empty.objective[x] = 1.0;
  const std::string text = export_lp(empty);
  CHECK(text.find("Subject To") == std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(structurally_equal(parse_lp(text), empty));

  std::mt19937_64 rng(1);
  const auto s = random_scenario(rng, 8, 40.0);
  const MilpModel m = build_milp(s, fit_alpha_pwl(paper_uncertainty(), paper_speed()));
  const std::string big = export_lp(m);
  const auto at = big.find("Binary\n");
  REQUIRE(at != std::string::npos);
  std::size_t names = 0;
  for (std::size_t p = big.find('\n', at) + 1; big.compare(p, 3, "End") != 0;
       p = big.find('\n', p) + 1)
    ++names;
  CHECK(names == 280);
}

TEST_CASE("LP parse errors carry locations") {
  CHECK_THROWS_AS(parse_lp("this is not an lp file"), ParseError);
  const std::string bad_var =
      "Minimize\n obj: + 1 x\nSubject To\n c1: + 1 x + 2 ghost <= 4\nBounds\n 0 <= x <= 1\nEnd\n";
  try {
    parse_lp(bad_var);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    CHECK(e.line() == 4);
    CHECK(e.column() == 16);
  }
  CHECK_THROWS_AS(parse_lp("Minimize\n obj: x\nSubject To\n c1: x <= \n"), ParseError);
  CHECK_THROWS_AS(parse_lp("Minimize\n obj: + 1 x\nBounds\n 0 <= x <= 1\n"), ParseError);
}
