#pragma once

// Dense condensed-tableau simplex shared by solve_bounded_lp and the
// branch-and-bound. Internal header.

#include <cstdint>
#include <vector>

#include "degrade/lp_solver.hpp"

namespace degrade::detail {

// Every basic variable is kept as a linear combination of the nonbasic
// ones. A hidden column fixed at 1 absorbs the contribution of columns that
// were fixed and dropped, so the representation stays exact as bounds
// tighten along a dive.
class Simplex {
 public:
  Simplex(std::vector<double> cost, std::vector<double> lo, std::vector<double> hi,
          const SimplexOptions& opt);

  /// Appends lo <= a x <= hi with its logical variable basic, so the current
  /// basis stays a basis.
  void add_row(const std::vector<Term>& terms, double lo, double hi);

  /// Changes a column's bounds. A nonbasic column moves to the nearest
  /// bound and the basic values follow; a basic one is left for phase 1.
  void set_bounds(int col, double lo, double hi);
  double lower(int col) const { return lo_[col]; }
  double upper(int col) const { return hi_[col]; }
  bool dropped(int col) const { return where_[col] == kDropped; }

  /// Removes nonbasic columns whose bounds coincide, among logicals and the
  /// structurals flagged droppable (all by default). Bounds of dropped
  /// columns must not change afterwards.
  void drop_fixed();
  void set_droppable(std::vector<char> mask) { droppable_ = std::move(mask); }

  /// Composite primal simplex from the current basis: phase 1 minimizes the
  /// sum of infeasibilities, phase 2 the cost.
  LpStatus solve();

  int rows() const { return m_; }
  double value(int col) const { return x_[col]; }
  std::vector<double> values() const { return {x_.begin(), x_.begin() + n0_}; }
  double objective() const;
  std::int64_t iterations() const { return iterations_; }
  std::int64_t pivots() const { return pivots_; }

  /// Largest violation of the rows and column bounds at the current point,
  /// recomputed from the original coefficients and scaled by the largest
  /// coefficient of each row.
  double max_violation() const;

 private:
  static constexpr int kDropped = -(1 << 30);

  double* row_ptr(int i) { return &tab_[static_cast<std::size_t>(i) * stride_]; }
  const double* row_ptr(int i) const { return &tab_[static_cast<std::size_t>(i) * stride_]; }
  void recompute_basics();
  double weight(int i, int phase) const;
  void reset_duals(int phase);
  void sync_weights(int phase);
  bool choose(int& enter, int& dir) const;
  void pivot(int r, int q, int phase);
  double infeasibility(int var) const;

  SimplexOptions opt_;
  int n0_ = 0;      // structural columns
  int one_ = 0;     // index of the constant variable
  int nc_ = 0;      // live tableau columns
  int stride_ = 0;
  int m_ = 0;
  std::vector<double> tab_;  // m x stride, row-major
  std::vector<double> lo_, hi_, cost_, x_;  // structurals, constant, logicals
  std::vector<int> head_;    // variable basic in row i
  std::vector<int> col_;     // variable nonbasic in column j
  std::vector<int> where_;   // row (>= 0), -(column + 1), or kDropped
  std::vector<std::vector<Term>> row_terms_;
  std::vector<double> d_;    // reduced costs of the live columns
  std::vector<double> g_;    // phase weight of each basic row counted in d_
  std::vector<int> nz_;
  std::vector<char> droppable_;  // per structural; empty means all
  bool bland_ = false;
  int degenerate_run_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t pivots_ = 0;
};

}  // namespace degrade::detail
