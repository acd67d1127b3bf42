#pragma once

#include <cstdint>
#include <vector>

#include "degrade/encode.hpp"
#include "degrade/lp_solver.hpp"

namespace degrade {

enum class SolveStatus { Optimal, Infeasible, TimeLimit };

const char* to_string(SolveStatus s);

struct MilpParams {
  double gap_tol = 1e-6;            // absolute, objective units (rad)
  std::int64_t node_limit = 10'000'000;
  double time_limit_s = 120.0;
  int dive_period = 16;             // binary search: every n-th selection dives
  /// Branch on whole pair patterns when the model carries a pair map.
  /// Off forces single-binary branching on the big-M relaxation.
  bool pattern_search = true;

  void validate() const;
};

struct SolveStats {
  std::int64_t nodes = 0;
  std::int64_t lps = 0;
  std::int64_t simplex_iterations = 0;
  double wall_ms = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  /// Largest decrease of a child's LP bound below its parent's; positive
  /// values beyond round-off would mean a broken relaxation.
  double worst_bound_drop = 0.0;
  /// Incumbent objective after each improvement, in order.
  std::vector<double> incumbent_trace;
};

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_incumbent = false;
  std::vector<double> headings;  // scenario frame, rad
  double objective = 0.0;        // sum of absolute deviations, rad
  std::vector<double> values;    // incumbent, indexed like the model variables
  SolveStats stats;
};

/// Best-first branch-and-bound. With a pair map, a node fixes the binaries of
/// some pairs to one of their admissible patterns and its LP holds only
/// those pairs' rows; pairs the LP headings already separate are completed
/// directly. Without one, single binaries of the big-M relaxation are
/// branched on. A heading heuristic supplies the first incumbent. The node
/// limit is reported as TimeLimit since no other status fits.
Solution solve_milp(const MilpModel& m, const MilpParams& params = {});

}  // namespace degrade
