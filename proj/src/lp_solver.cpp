#include "degrade/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "simplex.hpp"

namespace degrade {


LpSolution solve_bounded_lp(const LpProblem& lp, const SimplexOptions& opt) {
  if (static_cast<int>(lp.cost.size()) != lp.cols || static_cast<int>(lp.lo.size()) != lp.cols ||
      static_cast<int>(lp.hi.size()) != lp.cols || lp.row_lo.size() != lp.rows.size() ||
      lp.row_hi.size() != lp.rows.size())
    throw std::invalid_argument("LpProblem arrays have inconsistent sizes");
  for (std::size_t i = 0; i < lp.rows.size(); ++i)
    if (lp.row_lo[i] > lp.row_hi[i]) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      return s;
    }
  for (int j = 0; j < lp.cols; ++j)
    if (lp.lo[j] > lp.hi[j]) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      return s;
    }
  detail::Simplex s(lp.cost, lp.lo, lp.hi, opt);
  for (std::size_t i = 0; i < lp.rows.size(); ++i) s.add_row(lp.rows[i], lp.row_lo[i], lp.row_hi[i]);
  LpSolution out;
  out.status = s.solve();
  out.iterations = static_cast<int>(s.iterations());
  if (out.status != LpStatus::Optimal) return out;
  out.values = s.values();
  out.objective = s.objective();
  // Check against the original rows, independent of the tableau.
  const double worst = s.max_violation();
  if (worst > 1e-7) {
    std::ostringstream os;
    os << "simplex result violates a constraint by " << worst;
    throw NumericalBreakdown(os.str());
  }
  return out;
}

LpSolution solve_lp(const MilpModel& m, const std::map<int, int>& fixed, const SimplexOptions& opt) {
  LpProblem lp;
  lp.cols = static_cast<int>(m.variables.size());
  lp.cost = m.objective;
  for (const auto& v : m.variables) {
    lp.lo.push_back(v.lower);
    lp.hi.push_back(v.upper);
  }
  for (const auto& [var, val] : fixed) {
    if (var < 0 || var >= lp.cols || m.variables[var].type != VarType::Binary)
      throw std::invalid_argument("fixed assignment names a non-binary variable");
    if (val != 0 && val != 1) throw std::invalid_argument("binary fixings must be 0 or 1");
    lp.lo[var] = lp.hi[var] = val;
  }
  for (const auto& r : m.rows) {
    lp.rows.push_back(r.terms);
    lp.row_lo.push_back(r.sense == Sense::LessEqual ? -INFINITY : r.rhs);
    lp.row_hi.push_back(r.sense == Sense::GreaterEqual ? INFINITY : r.rhs);
  }
  return solve_bounded_lp(lp, opt);
}

}  // namespace degrade
