#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "degrade/encode.hpp"

namespace degrade {

class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear program in bounded form: min c'x subject to row_lo <= A x <= row_hi
/// and lo <= x <= hi. Infinite entries are allowed for any bound.
struct LpProblem {
  int cols = 0;
  std::vector<double> cost;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::vector<Term>> rows;
  std::vector<double> row_lo;
  std::vector<double> row_hi;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  int iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-11;  // smaller pivots raise NumericalBreakdown
  double ratio_tol = 1e-9;   // column entries ignored by the ratio test
  int degenerate_limit = 500;  // consecutive degenerate pivots before Bland
  int iteration_limit = 0;     // 0 picks 50 (rows + cols)
};

/// Bounded-variable primal simplex on a dense condensed tableau. Phase 1
/// minimizes the sum of infeasibilities from the all-logical basis.
/// Throws NumericalBreakdown when the final point violates a row by more
/// than 1e-7 or the iteration limit is hit.
LpSolution solve_bounded_lp(const LpProblem& lp, const SimplexOptions& opt = {});

/// LP relaxation of `m` with the listed binaries fixed (value 0 or 1) and the
/// remaining binaries relaxed to [0, 1]. Values are indexed like
/// m.variables.
LpSolution solve_lp(const MilpModel& m, const std::map<int, int>& fixed = {},
                    const SimplexOptions& opt = {});

}  // namespace degrade
