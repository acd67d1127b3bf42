#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degrade::detail {

// The system A x - s = 0 is homogeneous apart from the constant column, so
// basic values can always be recomputed from the nonbasic ones and the phase
// objective equals sum_j d_j * nonbasic_j exactly.

Simplex::Simplex(std::vector<double> cost, std::vector<double> lo, std::vector<double> hi,
                 const SimplexOptions& opt)
    : opt_(opt), lo_(std::move(lo)), hi_(std::move(hi)), cost_(std::move(cost)) {
  n0_ = static_cast<int>(cost_.size());
  if (lo_.size() != cost_.size() || hi_.size() != cost_.size())
    throw std::invalid_argument("column arrays have inconsistent sizes");
  one_ = n0_;
  lo_.push_back(1.0);
  hi_.push_back(1.0);
  cost_.push_back(0.0);
  stride_ = nc_ = n0_ + 1;
  x_.assign(stride_, 0.0);
  x_[one_] = 1.0;
  where_.resize(stride_);
  col_.resize(stride_);
  for (int j = 0; j < stride_; ++j) {
    if (lo_[j] > hi_[j]) throw std::invalid_argument("variable bounds cross");
    if (std::isfinite(lo_[j])) x_[j] = lo_[j];
    else if (std::isfinite(hi_[j])) x_[j] = hi_[j];
    col_[j] = j;
    where_[j] = -(j + 1);
  }
  d_.assign(stride_, 0.0);
  nz_.reserve(stride_);
}

void Simplex::add_row(const std::vector<Term>& terms, double lo, double hi) {
  const int var = static_cast<int>(x_.size());
  tab_.resize(tab_.size() + stride_, 0.0);
  double* row = row_ptr(m_);
  double v = 0.0;
  const int one_col = -where_[one_] - 1;
  for (const auto& t : terms) {
    const int w = where_[t.var];
    if (w == kDropped) {
      row[one_col] += t.coef * x_[t.var];
    } else if (w < 0) {
      row[-w - 1] += t.coef;
    } else {
      const double* src = row_ptr(w);
      for (int j = 0; j < nc_; ++j)
        if (src[j] != 0.0) row[j] += t.coef * src[j];
    }
    v += t.coef * x_[t.var];
  }
  lo_.push_back(lo);
  hi_.push_back(hi);
  cost_.push_back(0.0);
  x_.push_back(v);
  head_.push_back(var);
  where_.push_back(m_);
  row_terms_.push_back(terms);
  g_.push_back(0.0);
  ++m_;
}

void Simplex::set_bounds(int col, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("variable bounds cross");
  const int w = where_[col];
  if (w == kDropped) {
    if (lo != x_[col] || hi != x_[col]) throw std::logic_error("bounds of a dropped column changed");
    return;
  }
  lo_[col] = lo;
  hi_[col] = hi;
  if (w >= 0) return;  // basic: phase 1 repairs any violation
  double target = x_[col];
  if (target < lo) target = lo;
  if (target > hi) target = hi;
  if (!std::isfinite(target)) target = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
  const double delta = target - x_[col];
  if (delta == 0.0) return;
  x_[col] = target;
  const int q = -w - 1;
  for (int i = 0; i < m_; ++i) {
    const double a = row_ptr(i)[q];
    if (a != 0.0) x_[head_[i]] += a * delta;
  }
}

void Simplex::drop_fixed() {
  for (int j = nc_ - 1; j >= 0; --j) {
    const int v = col_[j];
    if (v == one_ || lo_[v] != hi_[v]) continue;
    if (v < n0_ && !droppable_.empty() && !droppable_[v]) continue;
    const int one_col = -where_[one_] - 1;
    const int last = nc_ - 1;
    for (int i = 0; i < m_; ++i) {
      double* row = row_ptr(i);
      if (row[j] != 0.0) row[one_col] += row[j] * x_[v];
      row[j] = row[last];
      row[last] = 0.0;
    }
    d_[j] = d_[last];
    col_[j] = col_[last];
    where_[col_[j]] = -(j + 1);
    where_[v] = kDropped;
    --nc_;
  }
}

void Simplex::recompute_basics() {
  for (int i = 0; i < m_; ++i) {
    const double* row = row_ptr(i);
    double v = 0.0;
    for (int j = 0; j < nc_; ++j)
      if (row[j] != 0.0) v += row[j] * x_[col_[j]];
    x_[head_[i]] = v;
  }
}

double Simplex::infeasibility(int var) const {
  const double v = x_[var];
  if (v < lo_[var] - opt_.feasibility_tol) return v - lo_[var];
  if (v > hi_[var] + opt_.feasibility_tol) return v - hi_[var];
  return 0.0;
}

double Simplex::objective() const {
  double z = 0.0;
  for (int j = 0; j < n0_; ++j) z += cost_[j] * x_[j];
  return z;
}

double Simplex::max_violation() const {
  double worst = 0.0;
  for (int j = 0; j < n0_; ++j) {
    worst = std::max(worst, lo_[j] - x_[j]);
    worst = std::max(worst, x_[j] - hi_[j]);
  }
  for (int i = 0; i < m_; ++i) {
    double a = 0.0;
    double scale = 1.0;
    for (const auto& t : row_terms_[i]) {
      a += t.coef * x_[t.var];
      scale = std::max(scale, std::abs(t.coef));
    }
    const int s = one_ + 1 + i;
    worst = std::max(worst, (lo_[s] - a) / scale);
    worst = std::max(worst, (a - hi_[s]) / scale);
  }
  return worst;
}

// Phase objective weight of the variable basic in row i. Phase 1 charges
// -1 per unit below a lower bound and +1 per unit above an upper bound.
double Simplex::weight(int i, int phase) const {
  if (phase == 2) return cost_[head_[i]];
  const double inf = infeasibility(head_[i]);
  return inf < 0.0 ? -1.0 : (inf > 0.0 ? 1.0 : 0.0);
}

void Simplex::reset_duals(int phase) {
  for (int j = 0; j < nc_; ++j) d_[j] = phase == 2 ? cost_[col_[j]] : 0.0;
  g_.assign(m_, 0.0);
  sync_weights(phase);
}

void Simplex::sync_weights(int phase) {
  for (int i = 0; i < m_; ++i) {
    const double w = weight(i, phase);
    if (w == g_[i]) continue;
    const double delta = w - g_[i];
    g_[i] = w;
    const double* row = row_ptr(i);
    for (int j = 0; j < nc_; ++j)
      if (row[j] != 0.0) d_[j] += delta * row[j];
  }
}

bool Simplex::choose(int& enter, int& dir) const {
  enter = -1;
  double best = 0.0;
  for (int j = 0; j < nc_; ++j) {
    const int v = col_[j];
    const double dj = d_[j];
    int dj_dir = 0;
    if (dj < -opt_.optimality_tol && x_[v] < hi_[v]) dj_dir = 1;
    else if (dj > opt_.optimality_tol && x_[v] > lo_[v]) dj_dir = -1;
    if (dj_dir == 0) continue;
    if (bland_) {
      if (enter < 0 || v < col_[enter]) {
        enter = j;
        dir = dj_dir;
      }
    } else if (std::abs(dj) > best) {
      best = std::abs(dj);
      enter = j;
      dir = dj_dir;
    }
  }
  return enter >= 0;
}

void Simplex::pivot(int r, int q, int phase) {
  double* pr = row_ptr(r);
  const double p = pr[q];
  if (std::abs(p) < opt_.pivot_tol) {
    std::ostringstream os;
    os << "pivot magnitude " << std::abs(p) << " below tolerance";
    throw NumericalBreakdown(os.str());
  }
  if (phase == 1 && g_[r] != 0.0) {
    // The leaving variable lands on a bound and carries no phase-1 charge
    // as a nonbasic.
    for (int j = 0; j < nc_; ++j)
      if (pr[j] != 0.0) d_[j] -= g_[r] * pr[j];
    g_[r] = 0.0;
  }
  nz_.clear();
  for (int j = 0; j < nc_; ++j) {
    if (j == q) continue;
    if (pr[j] != 0.0) {
      pr[j] = -pr[j] / p;
      nz_.push_back(j);
    }
  }
  pr[q] = 1.0 / p;
  nz_.push_back(q);
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* ri = row_ptr(i);
    const double a = ri[q];
    if (a == 0.0) continue;
    ri[q] = 0.0;
    for (int j : nz_) {
      double v = ri[j] + a * pr[j];
      if (std::abs(v) < 1e-13) v = 0.0;  // keep the tableau sparse
      ri[j] = v;
    }
  }
  const double dq = d_[q];
  if (dq != 0.0) {
    for (int j : nz_)
      if (j != q) d_[j] += dq * pr[j];
    d_[q] = dq * pr[q];
  }
  const int entering = col_[q];
  const int leaving = head_[r];
  g_[r] = phase == 2 ? cost_[entering] : 0.0;
  head_[r] = entering;
  col_[q] = leaving;
  where_[entering] = r;
  where_[leaving] = -(q + 1);
  ++pivots_;
}

LpStatus Simplex::solve() {
  const std::int64_t limit =
      opt_.iteration_limit > 0 ? opt_.iteration_limit : 50LL * (m_ + nc_) + 1000;
  bland_ = false;
  degenerate_run_ = 0;
  int phase = 1;
  recompute_basics();
  reset_duals(phase);
  for (std::int64_t iter = 0;; ++iter) {
    if (iter > limit) throw NumericalBreakdown("simplex iteration limit reached");
    if (iter > 0 && iter % 100 == 0) {
      recompute_basics();
      reset_duals(phase);
    }
    if (phase == 1) {
      bool feasible = true;
      for (int i = 0; i < m_ && feasible; ++i) feasible = infeasibility(head_[i]) == 0.0;
      if (feasible) {
        phase = 2;
        bland_ = false;
        degenerate_run_ = 0;
        reset_duals(phase);
      }
    }
    sync_weights(phase);
    int q = -1;
    int dir = 0;
    if (!choose(q, dir)) {
      // Confirm with fresh reduced costs before stopping.
      reset_duals(phase);
      if (!choose(q, dir)) {
        if (phase == 1) return LpStatus::Infeasible;
        break;
      }
    }
    ++iterations_;

    // Harris two-pass ratio test. Pass 1 finds the largest step that keeps
    // every basic variable within its bounds widened by the feasibility
    // tolerance; pass 2 picks the largest pivot among rows that block
    // within that step.
    const int vq = col_[q];
    const double tol = opt_.feasibility_tol;
    double flip = INFINITY;
    if (std::isfinite(lo_[vq]) && std::isfinite(hi_[vq])) flip = hi_[vq] - lo_[vq];
    double relaxed = flip;
    for (int i = 0; i < m_; ++i) {
      const double a = dir * row_ptr(i)[q];
      if (std::abs(a) <= opt_.ratio_tol) continue;
      const int vb = head_[i];
      const double v = x_[vb];
      double lim = INFINITY;
      if (a > 0.0) {
        if (v < lo_[vb] - tol) lim = (lo_[vb] + tol - v) / a;
        else if (v <= hi_[vb] + tol && std::isfinite(hi_[vb])) lim = (hi_[vb] + tol - v) / a;
      } else {
        if (v > hi_[vb] + tol) lim = (hi_[vb] - tol - v) / a;
        else if (v >= lo_[vb] - tol && std::isfinite(lo_[vb])) lim = (lo_[vb] - tol - v) / a;
      }
      relaxed = std::min(relaxed, std::max(lim, 0.0));
    }
    if (!std::isfinite(relaxed)) return LpStatus::Unbounded;

    int leave = -1;
    double step = flip;
    double leave_bound = 0.0;
    if (!(flip <= relaxed)) {
      double best_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = dir * row_ptr(i)[q];
        if (std::abs(a) <= opt_.ratio_tol) continue;
        const int vb = head_[i];
        const double v = x_[vb];
        double lim = INFINITY;
        double target = 0.0;
        if (a > 0.0) {
          if (v < lo_[vb] - tol) {
            lim = (lo_[vb] - v) / a;
            target = lo_[vb];
          } else if (v <= hi_[vb] + tol && std::isfinite(hi_[vb])) {
            lim = (hi_[vb] - v) / a;
            target = hi_[vb];
          }
        } else {
          if (v > hi_[vb] + tol) {
            lim = (hi_[vb] - v) / a;
            target = hi_[vb];
          } else if (v >= lo_[vb] - tol && std::isfinite(lo_[vb])) {
            lim = (lo_[vb] - v) / a;
            target = lo_[vb];
          }
        }
        if (!(lim <= relaxed)) continue;
        const bool take = leave < 0 || (bland_ ? vb < head_[leave] : std::abs(a) > best_piv);
        if (take) {
          leave = i;
          best_piv = std::abs(a);
          step = std::max(lim, 0.0);
          leave_bound = target;
        }
      }
    }

    if (step < 1e-12) {
      if (++degenerate_run_ >= opt_.degenerate_limit) bland_ = true;
    } else {
      degenerate_run_ = 0;
    }

    x_[vq] += dir * step;
    if (step != 0.0) {
      for (int i = 0; i < m_; ++i) {
        const double a = row_ptr(i)[q];
        if (a != 0.0) x_[head_[i]] += dir * step * a;
      }
    }
    if (leave < 0) {
      x_[vq] = dir > 0 ? hi_[vq] : lo_[vq];
      continue;
    }
    x_[head_[leave]] = leave_bound;
    pivot(leave, q, phase);
  }
  recompute_basics();
  return LpStatus::Optimal;
}

}  // namespace degrade::detail
