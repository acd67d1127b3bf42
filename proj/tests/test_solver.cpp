#include <doctest.h>

#include <random>

#include "degrade/encode.hpp"
#include "degrade/lp_solver.hpp"
#include "degrade/milp_solver.hpp"
#include "degrade/scenario.hpp"
#include "degrade/verify.hpp"
#include "test_support.hpp"

using namespace degrade;
using testing_support::paper_speed;
using testing_support::paper_uncertainty;

namespace {

TrafficScenario two_aircraft(double d, double bearing, double h1, double h2) {
  TrafficScenario s;
  s.uncertainty = paper_uncertainty();
  s.aircraft = {{1, 0.0, 0.0, h1, paper_speed()},
                {2, d * std::cos(bearing), d * std::sin(bearing), h2, paper_speed()}};
  sort_aircraft(s.aircraft);
  s.validate();
  return s;
}

// Converging pair: both roughly aimed at each other with some noise.
TrafficScenario random_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(8.0, 25.0), bearing(-kPi, kPi), noise(-0.4, 0.4);
  const double d = dist(rng), b = bearing(rng);
  return two_aircraft(d, b, wrap_angle(b + noise(rng)), wrap_angle(b + kPi + noise(rng)));
}

const PwlFit& paper_fit() {
  static const PwlFit fit = fit_alpha_pwl(paper_uncertainty(), paper_speed());
  return fit;
}

// Minimum over every binary assignment of the LP with all binaries fixed.
double enumeration_oracle(const MilpModel& m) {
  std::vector<int> bins;
  for (std::size_t k = 0; k < m.variables.size(); ++k)
    if (m.variables[k].type == VarType::Binary) bins.push_back(static_cast<int>(k));
  REQUIRE(bins.size() <= 12);
  double best = INFINITY;
  for (unsigned mask = 0; mask < (1u << bins.size()); ++mask) {
    std::map<int, int> fixed;
    bool in_bounds = true;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const int v = (mask >> b) & 1u;
      const auto& var = m.variables[bins[b]];
      if (v < var.lower || v > var.upper) in_bounds = false;
      fixed[bins[b]] = v;
    }
    if (!in_bounds) continue;
    const LpSolution lp = solve_lp(m, fixed);
    if (lp.status == LpStatus::Optimal) best = std::min(best, lp.objective);
  }
  return best;
}

double row_violation(const MilpModel& m, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& r : m.rows) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x[t.var];
    if (r.sense != Sense::GreaterEqual) worst = std::max(worst, a - r.rhs);
    if (r.sense != Sense::LessEqual) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

}  // namespace

TEST_CASE("bounded LP basics") {
  LpProblem lp;
  lp.cols = 1;
  lp.cost = {1.0};
  lp.lo = {0.0};
  lp.hi = {10.0};
  lp.rows.push_back({{0, 1.0}});
  lp.row_lo.push_back(3.0);
  lp.row_hi.push_back(INFINITY);
  auto sol = solve_bounded_lp(lp);
  CHECK(sol.status == LpStatus::Optimal);
  CHECK(sol.values[0] == doctest::Approx(3.0));

  lp.rows.push_back({{0, 1.0}});
  lp.row_lo.push_back(-INFINITY);
  lp.row_hi.push_back(2.0);
  CHECK(solve_bounded_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("diverging pair needs no change") {
  // 40 NM apart, flying away from each other.
  const TrafficScenario s = two_aircraft(40.0, 0.0, kPi, 0.0);
  const Solution sol = solve_milp(build_milp(s, paper_fit()));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.headings[0] == doctest::Approx(s.aircraft[0].heading).epsilon(1e-9));
  CHECK(sol.headings[1] == doctest::Approx(s.aircraft[1].heading).epsilon(1e-9));
}

TEST_CASE("head-on pair") {
  // The heading difference passes pi inside the rotated frame here, which
  // once let the alpha secants extrapolate below the true cone width.
  const TrafficScenario s = two_aircraft(20.0, 0.0, 0.0, kPi);
  const Solution sol = solve_milp(build_milp(s, paper_fit()));
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective > 0.05);
  CHECK(check_solution(s, sol.headings).pass);

  const GridOptimum grid = grid_oracle_2ac(s, 0.005);
  CHECK(sol.objective >= grid.objective - 2 * 0.005);

  // Mirror image across the line of sight: same cost.
  const TrafficScenario mirrored = two_aircraft(20.0, 0.0, 0.0, -kPi + 1e-12);
  const Solution msol = solve_milp(build_milp(mirrored, paper_fit()));
  REQUIRE(msol.status == SolveStatus::Optimal);
  CHECK(msol.objective == doctest::Approx(sol.objective).epsilon(1e-6));
}

TEST_CASE("branch and bound matches binary enumeration on random pairs") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 12; ++k) {
    const TrafficScenario s = random_pair(rng);
    const MilpModel m = build_milp(s, paper_fit());
    const double oracle = enumeration_oracle(m);
    MilpParams p;
    for (bool patterns : {true, false}) {
      p.pattern_search = patterns;
      const Solution sol = solve_milp(m, p);
      REQUIRE(sol.status == SolveStatus::Optimal);
      CHECK(sol.objective == doctest::Approx(oracle).epsilon(1e-6));
      CHECK(sol.stats.worst_bound_drop <= 1e-9);
      CHECK(row_violation(m, sol.values) <= 1e-6);
    }
  }
}

TEST_CASE("headings inside an exact family with slack are kept") {
  // The encoding may only be conservative by the alpha fit error (<= 0.02
  // rad) plus eps. Beyond that, exactly separated headings must cost 0.
  std::mt19937_64 rng(29);
  const double slack = 0.03;
  int tried = 0;
  for (int k = 0; k < 4000 && tried < 150; ++k) {
    const TrafficScenario s = testing_support::random_scenario(rng, 2, 10.0, 5.2);
    const AircraftState& a = s.aircraft[0];
    const AircraftState& b = s.aircraft[1];
    const PairGeometry g = pair_geometry_lenient(a, b, s.uncertainty);
    const double x = std::abs(wrap_angle(exact_theta_ij(a, b) - g.omega));
    const double alpha = exact_alpha(a, b, s.uncertainty);
    bool clear = g.gamma_tilde && x > *g.gamma_tilde + slack;
    const std::optional<double> gam[2] = {g.gamma_hat, g.gamma_star};
    const double c[2] = {1.0, 0.5};
    for (int f = 0; f < 2; ++f)
      if (gam[f] && alpha < kPi && x - c[f] * alpha > *gam[f] + slack &&
          x + c[f] * alpha < kTwoPi - *gam[f] - slack)
        clear = true;
    if (!clear) continue;
    ++tried;
    const Solution sol = solve_milp(build_milp(s, paper_fit()));
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective <= 1e-9);
  }
  CHECK(tried == 150);
}

TEST_CASE("both search modes agree on merge scenarios") {
  GeneratorConfig cfg;
  cfg.aircraft_count = 4;
  cfg.cone_half_angle_deg = 20.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    cfg.seed = seed;
    const TrafficScenario s = generate_merge_case(cfg);
    const MilpModel m = build_milp(s, paper_fit());
    MilpParams p;
    const Solution a = solve_milp(m, p);
    p.pattern_search = false;
    const Solution b = solve_milp(m, p);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
    CHECK(check_solution(s, a.headings).pass);
  }
}

TEST_CASE("solution invariants on an 8-aircraft case") {
  GeneratorConfig cfg;
  cfg.cone_half_angle_deg = 15.0;
  cfg.seed = 99;
  const TrafficScenario s = generate_merge_case(cfg);
  const MilpModel m = build_milp(s, paper_fit());
  const Solution sol = solve_milp(m);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.stats.gap <= 1e-6);
  CHECK(row_violation(m, sol.values) <= 1e-6);
  for (std::size_t k = 0; k < m.variables.size(); ++k)
    if (m.variables[k].type == VarType::Binary)
      CHECK(std::abs(sol.values[k] - std::round(sol.values[k])) <= 1e-6);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.aircraft.size(); ++k)
    sum += std::abs(wrap_angle(sol.headings[k] - s.aircraft[k].heading));
  CHECK(sol.objective == doctest::Approx(sum).epsilon(1e-6));
  for (std::size_t k = 1; k < sol.stats.incumbent_trace.size(); ++k)
    CHECK(sol.stats.incumbent_trace[k] <= sol.stats.incumbent_trace[k - 1]);
  CHECK(sol.stats.worst_bound_drop <= 1e-9);
  CHECK(check_solution(s, sol.headings).pass);

  // Determinism: same model, same answer and the same search.
  const Solution again = solve_milp(m);
  CHECK(again.objective == sol.objective);
  CHECK(again.stats.nodes == sol.stats.nodes);
}

TEST_CASE("solver parameters are validated") {
  MilpParams p;
  p.gap_tol = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.time_limit_s = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.node_limit = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("node limit reports TimeLimit with the incumbent") {
  GeneratorConfig cfg;
  cfg.cone_half_angle_deg = 25.0;
  cfg.seed = 5;
  const TrafficScenario s = generate_merge_case(cfg);
  MilpParams p;
  p.node_limit = 2;
  const Solution sol = solve_milp(build_milp(s, paper_fit()), p);
  CHECK(sol.status == SolveStatus::TimeLimit);
  if (sol.has_incumbent) {
    CHECK(sol.stats.best_bound <= sol.objective + 1e-9);
    CHECK(check_solution(s, sol.headings).pass);
  }
}
