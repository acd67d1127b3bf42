#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "degrade/encode.hpp"
#include "degrade/milp_solver.hpp"
#include "degrade/model.hpp"
#include "degrade/scenario.hpp"
#include "degrade/verify.hpp"

namespace degrade {

struct ExperimentParams {
  EncodeParams encode;
  MilpParams milp;
  int segments = kDefaultSegmentCount;
  double horizon = kDefaultHorizon;  // min

  void validate() const;
};

struct CaseResult {
  int case_id = 0;
  std::uint64_t seed = 0;
  double cone_deg = 0.0;         // full width
  double max_arrival_deg = 0.0;
  double group_key_deg = 0.0;
  double m_s_deg = 0.0;          // 0 when there is no incumbent
  double objective_rad = 0.0;
  std::string status;            // Optimal, Infeasible, TimeLimit or Error
  double solve_ms = 0.0;
  std::int64_t nodes = 0;
  bool oracle_pass = false;
  std::string error;             // set when status is Error
  std::vector<double> headings;  // scenario frame, empty without incumbent
};

/// Encodes, solves and checks one scenario. Never throws for a valid
/// scenario: encoding or solver failures come back as status Error.
CaseResult run_case(const TrafficScenario& s, const ExperimentParams& params, int case_id = 0);

/// Group key of a maximum arrival angle: 5 for [0, 5), otherwise k for
/// [k - 2.5, k). Angles at or beyond 30 fall in group 30.
double group_key(double max_arrival_deg);

struct GroupSummary {
  double key_deg = 0.0;
  int count = 0;           // every case in the group
  int optimal = 0;         // cases entering the statistics
  double worst_m_s = 0.0;  // deg, over Optimal cases
  double mean_m_s = 0.0;
};

/// Groups in ascending key order; empty groups are omitted. Throws
/// std::invalid_argument on an empty input.
std::vector<GroupSummary> group_results(const std::vector<CaseResult>& results);

struct Report {
  std::string csv;  // group_key_deg,count,worst_m_s_deg,mean_m_s_deg
  std::string svg;  // worst m_s against group key
  double increase = 0.0;  // (last worst - first worst) / first worst
};

Report summarize(const std::vector<GroupSummary>& groups);

/// Results CSV with the columns listed in the README. `omit_timing` blanks
/// solve_ms so repeated runs compare byte for byte.
std::string results_csv(const std::vector<CaseResult>& results, bool omit_timing = false);

/// Reads a results CSV written by results_csv. Throws std::runtime_error on
/// a malformed header or row.
std::vector<CaseResult> parse_results_csv(const std::string& text);

/// Worker count from DEGRADE_CR_THREADS, else the hardware concurrency.
int default_jobs();

/// Runs every scenario, `jobs` at a time, returning results in input order.
/// `progress` (optional) is called after each case from the worker thread
/// under a lock, with the number of finished cases.
std::vector<CaseResult> run_batch(const std::vector<TrafficScenario>& scenarios,
                                  const ExperimentParams& params, int jobs,
                                  const std::function<void(int done, const CaseResult&)>& progress = {});

}  // namespace degrade
