#include <doctest.h>

#include <set>

#include "degrade/experiment.hpp"
#include "degrade/units.hpp"

using namespace degrade;

namespace {

CaseResult optimal_case(int id, double max_arrival, double m_s) {
  CaseResult r;
  r.case_id = id;
  r.max_arrival_deg = max_arrival;
  r.group_key_deg = group_key(max_arrival);
  r.m_s_deg = m_s;
  r.objective_rad = deg_to_rad(m_s) * 8;
  r.status = "Optimal";
  r.oracle_pass = true;
  return r;
}

}  // namespace

TEST_CASE("group keys") {
  CHECK(group_key(0.0) == 5.0);
  CHECK(group_key(4.9) == 5.0);
  CHECK(group_key(5.0) == 7.5);
  CHECK(group_key(7.49) == 7.5);
  CHECK(group_key(12.4) == 12.5);
  CHECK(group_key(12.5) == 15.0);
  CHECK(group_key(29.99) == 30.0);
  CHECK(group_key(30.0) == 30.0);
  CHECK(group_key(45.0) == 30.0);
}

TEST_CASE("grouping statistics") {
  std::vector<CaseResult> rs = {optimal_case(0, 1.0, 9.0), optimal_case(1, 4.0, 10.6),
                                optimal_case(2, 28.0, 14.2), optimal_case(3, 29.0, 12.0)};
  CaseResult timed_out = optimal_case(4, 2.0, 40.0);
  timed_out.status = "TimeLimit";
  rs.push_back(timed_out);

  const auto groups = group_results(rs);
  REQUIRE(groups.size() == 2);  // empty groups omitted
  CHECK(groups[0].key_deg == 5.0);
  CHECK(groups[0].count == 3);
  CHECK(groups[0].optimal == 2);
  CHECK(groups[0].worst_m_s == doctest::Approx(10.6));  // the TimeLimit case is excluded
  CHECK(groups[0].mean_m_s == doctest::Approx(9.8));
  CHECK(groups[1].key_deg == 30.0);
  CHECK(groups[1].worst_m_s == doctest::Approx(14.2));
  int total = 0;
  for (const auto& g : groups) total += g.count;
  CHECK(total == static_cast<int>(rs.size()));

  const Report rep = summarize(groups);
  CHECK(rep.increase == doctest::Approx((14.2 - 10.6) / 10.6));
  CHECK(std::lround(rep.increase * 1000) == 340);  // 33.96%
  CHECK(rep.csv.rfind("group_key_deg,count,worst_m_s_deg,mean_m_s_deg\n", 0) == 0);
  CHECK(rep.svg.find("<svg") != std::string::npos);

  CHECK(summarize(group_results({optimal_case(0, 1.0, 9.0)})).increase == 0.0);
  CHECK(summarize(group_results({optimal_case(0, 1.0, 0.0), optimal_case(1, 29.0, 0.0)})).increase ==
        0.0);
  CHECK_THROWS_AS(group_results({}), std::invalid_argument);
}

TEST_CASE("results CSV") {
  std::vector<CaseResult> rs = {optimal_case(0, 3.2, 9.5), optimal_case(1, 17.0, 11.25)};
  rs[0].seed = 18446744073709551615ull;
  rs[0].cone_deg = 10.0;
  rs[0].solve_ms = 12.5;
  rs[0].nodes = 31;
  rs[1].status = "TimeLimit";
  rs[1].oracle_pass = false;
  const std::string csv = results_csv(rs);
  CHECK(csv.rfind("case_id,seed,cone_deg,max_arrival_deg,group_key_deg,m_s_deg,objective_rad,"
                  "status,solve_ms,nodes,oracle_pass\n",
                  0) == 0);
  const auto back = parse_results_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].seed == rs[0].seed);
  CHECK(back[0].m_s_deg == doctest::Approx(9.5));
  CHECK(back[0].solve_ms == doctest::Approx(12.5));
  CHECK(back[0].nodes == 31);
  CHECK(back[1].status == "TimeLimit");
  CHECK_FALSE(back[1].oracle_pass);
  CHECK(back[1].group_key_deg == 17.5);

  const std::string blank = results_csv(rs, true);
  CHECK(blank.find(",12.5") == std::string::npos);
  CHECK(parse_results_csv(blank).size() == 2);

  CHECK_THROWS_AS(parse_results_csv("nope\n1,2\n"), std::runtime_error);
}

TEST_CASE("run_case and run_batch") {
  GeneratorConfig tmpl;
  const auto scenarios = generate_batch(6, {10.0, 40.0}, tmpl, 7);
  ExperimentParams params;

  SUBCASE("single case fields") {
    const CaseResult r = run_case(scenarios[0], params, 0);
    REQUIRE(r.status == "Optimal");
    CHECK(r.oracle_pass);
    CHECK(r.m_s_deg == doctest::Approx(rad_to_deg(r.objective_rad) / 8.0).epsilon(1e-9));
    CHECK(r.max_arrival_deg == doctest::Approx(rad_to_deg(max_arrival_angle(scenarios[0]))));
    CHECK(r.group_key_deg == group_key(r.max_arrival_deg));
    CHECK(r.headings.size() == 8);
  }
  SUBCASE("worker count does not change the results") {
    const auto one = run_batch(scenarios, params, 1);
    std::set<int> seen;
    int calls = 0;
    const auto two = run_batch(scenarios, params, 2, [&](int, const CaseResult& r) {
      ++calls;
      seen.insert(r.case_id);
    });
    CHECK(results_csv(one, true) == results_csv(two, true));
    CHECK(calls == 6);
    CHECK(seen.size() == 6);
  }
  SUBCASE("parameter validation") {
    params.segments = 0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  }
}
