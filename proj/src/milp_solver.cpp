#include "degrade/milp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <stdexcept>

#include "simplex.hpp"

namespace degrade {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

void MilpParams::validate() const {
  if (!(gap_tol >= 0.0) || !std::isfinite(gap_tol))
    throw std::invalid_argument("gap_tol must be finite and >= 0");
  if (node_limit < 1) throw std::invalid_argument("node_limit must be >= 1");
  if (!(time_limit_s > 0.0)) throw std::invalid_argument("time_limit_s must be > 0");
  if (dive_period < 1) throw std::invalid_argument("dive_period must be >= 1");
}

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kFeasTol = 1e-9;
constexpr double kCheckTol = 1e-7;
// A tableau that has seen this many pivots is rebuilt rather than reused.
constexpr std::int64_t kRefreshPivots = 4000;
constexpr int kPairBudget = 256;
constexpr double kScanStep = 0.25 * 3.14159265358979323846 / 180.0;

struct Row {
  std::vector<Term> terms;
  double lo;
  double hi;
};

struct RowSystem {
  std::vector<Row> rows;
  std::vector<std::vector<int>> var_rows;
  std::vector<char> binary;

  void index(int vars) {
    var_rows.assign(vars, {});
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (const auto& t : rows[r].terms) var_rows[t.var].push_back(static_cast<int>(r));
    for (auto& list : var_rows) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  }
};

void activity(const Row& r, const std::vector<double>& lo, const std::vector<double>& hi,
              double& min_act, double& max_act, int& min_inf, int& max_inf) {
  min_act = max_act = 0.0;
  min_inf = max_inf = 0;
  for (const auto& t : r.terms) {
    const double l = lo[t.var], h = hi[t.var];
    if (t.coef > 0) {
      if (std::isinf(l)) ++min_inf; else min_act += t.coef * l;
      if (std::isinf(h)) ++max_inf; else max_act += t.coef * h;
    } else {
      if (std::isinf(h)) ++min_inf; else min_act += t.coef * h;
      if (std::isinf(l)) ++max_inf; else max_act += t.coef * l;
    }
  }
}

// Activity-based bound tightening with integer rounding for binaries.
// Returns false when the bounds prove the system infeasible.
bool propagate(const RowSystem& sys, std::vector<double>& lo, std::vector<double>& hi,
               const std::vector<int>* seed = nullptr) {
  const std::size_t nrows = sys.rows.size();
  std::vector<char> queued(nrows, seed ? 0 : 1);
  std::vector<int> queue;
  if (seed) {
    queue = *seed;
    for (int r : queue) queued[r] = 1;
  } else {
    queue.resize(nrows);
    for (std::size_t k = 0; k < nrows; ++k) queue[k] = static_cast<int>(k);
  }
  std::size_t head = 0;
  std::int64_t budget = 40 * static_cast<std::int64_t>(nrows) + 64;
  while (head < queue.size() && budget-- > 0) {
    const int ri = queue[head++];
    queued[ri] = 0;
    const Row& r = sys.rows[ri];
    double min_act, max_act;
    int min_inf, max_inf;
    activity(r, lo, hi, min_act, max_act, min_inf, max_inf);
    if (min_inf == 0 && min_act > r.hi + 1e-7) return false;
    if (max_inf == 0 && max_act < r.lo - 1e-7) return false;

    for (const auto& t : r.terms) {
      const int v = t.var;
      const double a = t.coef;
      const double l = lo[v], h = hi[v];
      double new_lo = l, new_hi = h;
      const double own_min = a > 0 ? a * l : a * h;
      const double own_max = a > 0 ? a * h : a * l;
      if (std::isfinite(r.hi)) {
        const bool own_inf = std::isinf(own_min);
        if (min_inf == 0 || (min_inf == 1 && own_inf)) {
          const double rest = own_inf ? min_act : min_act - own_min;
          const double bound = (r.hi - rest) / a;
          if (a > 0) new_hi = std::min(new_hi, bound);
          else new_lo = std::max(new_lo, bound);
        }
      }
      if (std::isfinite(r.lo)) {
        const bool own_inf = std::isinf(own_max);
        if (max_inf == 0 || (max_inf == 1 && own_inf)) {
          const double rest = own_inf ? max_act : max_act - own_max;
          const double bound = (r.lo - rest) / a;
          if (a > 0) new_lo = std::max(new_lo, bound);
          else new_hi = std::min(new_hi, bound);
        }
      }
      bool changed = false;
      if (sys.binary[v]) {
        new_lo = std::ceil(new_lo - 1e-6);
        new_hi = std::floor(new_hi + 1e-6);
        if (new_lo > l) { lo[v] = new_lo; changed = true; }
        if (new_hi < h) { hi[v] = new_hi; changed = true; }
        if (lo[v] > hi[v]) return false;
      } else {
        // Continuous bounds only move for meaningful gains and keep a small
        // safety margin.
        const double scale = 1.0 + std::max(std::abs(l), std::abs(h));
        if (new_lo > l + 1e-6 * (std::isinf(l) ? 1.0 : scale)) {
          lo[v] = new_lo - 1e-9 * (1.0 + std::abs(new_lo));
          changed = true;
        }
        if (new_hi < h - 1e-6 * (std::isinf(h) ? 1.0 : scale)) {
          hi[v] = new_hi + 1e-9 * (1.0 + std::abs(new_hi));
          changed = true;
        }
        if (lo[v] > hi[v] + 1e-7) return false;
        if (lo[v] > hi[v]) lo[v] = hi[v] = 0.5 * (lo[v] + hi[v]);
      }
      if (changed) {
        for (int other : sys.var_rows[v]) {
          if (!queued[other]) {
            queued[other] = 1;
            queue.push_back(other);
          }
        }
        activity(r, lo, hi, min_act, max_act, min_inf, max_inf);
        if (min_inf == 0 && min_act > r.hi + 1e-7) return false;
        if (max_inf == 0 && max_act < r.lo - 1e-7) return false;
      }
    }
  }
  return true;
}

// One encoded pair over its own variables. Local order: lead heading, trail
// heading, alpha, then the binaries.
struct PairSystem {
  int lead = 0;   // aircraft index
  int trail = 0;
  std::vector<int> vars;  // local -> model variable
  RowSystem sys;
  std::vector<double> lo, hi;  // root bounds, local
};

// Depth-first assignment of the pair's binaries under propagation.
bool pair_dfs(const PairSystem& ps, std::vector<double>& lo, std::vector<double>& hi,
              std::size_t depth, int& budget) {
  while (depth < ps.vars.size() && lo[depth] == hi[depth]) ++depth;
  if (depth == ps.vars.size()) return true;
  for (double val : {0.0, 1.0}) {
    if (--budget < 0) return false;
    std::vector<double> l2 = lo, h2 = hi;
    l2[depth] = h2[depth] = val;
    if (!propagate(ps.sys, l2, h2, &ps.sys.var_rows[depth])) continue;
    if (pair_dfs(ps, l2, h2, depth + 1, budget)) {
      lo.swap(l2);
      hi.swap(h2);
      return true;
    }
  }
  return false;
}

// Finds binaries and a cone width that make the pair feasible at fixed
// headings. On success lo/hi hold the completed local bounds.
bool complete_pair(const PairSystem& ps, double t_lead, double t_trail, std::vector<double>& lo,
                   std::vector<double>& hi) {
  lo = ps.lo;
  hi = ps.hi;
  if (t_lead < lo[0] || t_lead > hi[0] || t_trail < lo[1] || t_trail > hi[1]) return false;
  lo[0] = hi[0] = t_lead;
  lo[1] = hi[1] = t_trail;
  if (!propagate(ps.sys, lo, hi)) return false;
  int budget = kPairBudget;
  return pair_dfs(ps, lo, hi, 3, budget);
}

// One admissible setting of a pair's binaries, with the pair's rows reduced
// to the headings and cone width that remain free.
struct Pattern {
  std::vector<double> bits;  // local binaries, in PairSystem order
  std::vector<Row> rows;     // model variable indices
};

void enumerate_bits(const PairSystem& ps, std::vector<double> lo, std::vector<double> hi,
                    std::size_t depth, std::vector<std::vector<double>>& out) {
  while (depth < ps.vars.size() && lo[depth] == hi[depth]) ++depth;
  if (depth == ps.vars.size()) {
    out.emplace_back(lo.begin() + 3, lo.end());
    return;
  }
  for (double val : {0.0, 1.0}) {
    std::vector<double> l2 = lo, h2 = hi;
    l2[depth] = h2[depth] = val;
    if (propagate(ps.sys, l2, h2, &ps.sys.var_rows[depth]))
      enumerate_bits(ps, std::move(l2), std::move(h2), depth + 1, out);
  }
}

std::vector<Pattern> pair_patterns(const PairSystem& ps) {
  std::vector<std::vector<double>> settings;
  enumerate_bits(ps, ps.lo, ps.hi, 3, settings);
  std::vector<Pattern> out;
  for (auto& bits : settings) {
    Pattern pat;
    bool feasible = true;
    for (const Row& r : ps.sys.rows) {
      Row red;
      double c = 0.0;
      for (const auto& t : r.terms) {
        if (t.var >= 3) c += t.coef * bits[t.var - 3];
        else red.terms.push_back({ps.vars[t.var], t.coef});
      }
      red.lo = r.lo - c;
      red.hi = r.hi - c;
      double min_act = 0.0, max_act = 0.0;
      for (const auto& t : r.terms) {
        if (t.var >= 3) continue;
        const double a = t.coef * ps.lo[t.var], b = t.coef * ps.hi[t.var];
        min_act += std::min(a, b);
        max_act += std::max(a, b);
      }
      if (min_act > red.hi + 1e-9 || max_act < red.lo - 1e-9) feasible = false;
      // Rows that hold everywhere on the root box carry nothing.
      if (min_act >= red.lo - 1e-12 && max_act <= red.hi + 1e-12) continue;
      pat.rows.push_back(std::move(red));
    }
    if (!feasible) continue;
    pat.bits = std::move(bits);
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Pattern& q) {
      if (q.rows.size() != pat.rows.size()) return false;
      for (std::size_t k = 0; k < q.rows.size(); ++k) {
        const Row& a = q.rows[k];
        const Row& b = pat.rows[k];
        if (a.lo != b.lo || a.hi != b.hi || a.terms.size() != b.terms.size()) return false;
        for (std::size_t t = 0; t < a.terms.size(); ++t)
          if (a.terms[t].var != b.terms[t].var || a.terms[t].coef != b.terms[t].coef) return false;
      }
      return true;
    });
    if (!duplicate) out.push_back(std::move(pat));
  }
  return out;
}

struct Node {
  double bound = 0.0;
  int depth = 0;
  std::int64_t id = 0;
  std::int64_t parent = -1;
  std::vector<std::int8_t> lo;  // per binary
  std::vector<std::int8_t> hi;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // priority_queue pops the largest: invert so the smallest bound wins,
    // then the deepest node, then the oldest.
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

enum class Outcome { Infeasible, Pruned, Integral, Branch };

struct Evaluation {
  Outcome outcome = Outcome::Infeasible;
  double bound = 0.0;
  int branch_binary = -1;  // index into the binary list
  double branch_value = 0.0;
  std::vector<double> values;
  std::vector<std::int8_t> bin_lo, bin_hi;  // binary bounds after propagation
};

// An LP relaxation kept alive between a node and its children. Rows of the
// model enter only once violated.
struct LazyLp {
  std::unique_ptr<detail::Simplex> lp;
  std::vector<char> active;
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& m, const MilpParams& p);
  Solution run();

 private:
  using Clock = std::chrono::steady_clock;

  double elapsed_s() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }
  bool rows_hold(const std::vector<double>& x) const;
  bool pair_ok(std::size_t p, const std::vector<double>& theta) const;
  bool nearest_heading(int k, const std::vector<double>& theta, const std::vector<char>& placed,
                       double& out) const;
  void heading_heuristic();
  bool complete_from_headings(const std::vector<double>& theta, std::vector<double>& out,
                              std::vector<int>* failed) const;
  LazyLp fresh_lp(const std::vector<double>& lo, const std::vector<double>& hi,
                  bool bland) const;
  LpStatus solve_lazy(LazyLp& s, LpSolution& out);
  LpStatus node_lp(const Node& node, const std::vector<double>& lo,
                   const std::vector<double>& hi, LpSolution& out);
  Evaluation evaluate(const Node& node, double cutoff);
  void offer_incumbent(const std::vector<double>& values);
  Solution run_binary();
  Solution run_patterns();
  Solution finish(bool out_of_budget, double frontier_bound);

  struct PatternNode {
    double bound = 0.0;
    int depth = 0;
    std::int64_t id = 0;
    int branch = -1;  // pair to split next
    std::vector<std::int16_t> assign;  // pattern index per pair, -1 when free
  };
  struct PatternOrder {
    bool operator()(const PatternNode& a, const PatternNode& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id > b.id;
    }
  };
  detail::Simplex pattern_lp(const std::vector<std::int16_t>& assign, bool bland) const;
  bool solve_pattern_lp(detail::Simplex& lp, LpSolution& out);
  bool settle(PatternNode& node, const LpSolution& lp);

  const MilpModel& m_;
  MilpParams p_;
  Clock::time_point start_;
  int n_ = 0;
  RowSystem sys_;
  std::vector<int> binaries_;
  std::vector<int> binary_slot_;  // model var -> binary list index, -1 otherwise
  std::vector<double> root_lo_, root_hi_;
  std::vector<PairSystem> pairs_;  // empty when the model has no pair map
  std::vector<std::vector<int>> pairs_of_;  // per aircraft
  std::vector<std::vector<Pattern>> patterns_;  // per pair, empty when unused
  std::vector<int> base_rows_;  // rows free of pair binaries and cone widths

  LazyLp warm_;

  bool have_incumbent_ = false;
  double incumbent_obj_ = INFINITY;
  std::vector<double> incumbent_;
  bool lost_node_ = false;  // a node was dropped after a numerical failure
  SolveStats stats_;
};

BranchAndBound::BranchAndBound(const MilpModel& m, const MilpParams& p) : m_(m), p_(p) {
  start_ = Clock::now();
  n_ = static_cast<int>(m.variables.size());
  binary_slot_.assign(n_, -1);
  sys_.binary.assign(n_, 0);
  for (int k = 0; k < n_; ++k) {
    const auto& v = m.variables[k];
    root_lo_.push_back(v.lower);
    root_hi_.push_back(v.upper);
    if (v.type == VarType::Binary) {
      binary_slot_[k] = static_cast<int>(binaries_.size());
      binaries_.push_back(k);
      sys_.binary[k] = 1;
      root_lo_[k] = std::max(0.0, std::ceil(v.lower - kFeasTol));
      root_hi_[k] = std::min(1.0, std::floor(v.upper + kFeasTol));
    }
  }
  for (const auto& r : m.rows) {
    Row row;
    row.terms = r.terms;
    row.lo = r.sense == Sense::LessEqual ? -INFINITY : r.rhs;
    row.hi = r.sense == Sense::GreaterEqual ? INFINITY : r.rhs;
    sys_.rows.push_back(std::move(row));
  }
  sys_.index(n_);

  // Per-pair systems, used by the heuristics. Any row that reaches outside
  // its pair's variables disables them.
  const auto& map = m.map;
  pairs_of_.assign(map.heading_var.size(), {});
  for (const auto& pv : map.pairs) {
    PairSystem ps;
    ps.lead = pv.lead;
    ps.trail = pv.trail;
    if (pv.lead < 0 || pv.trail < 0 || pv.lead >= static_cast<int>(map.heading_var.size()) ||
        pv.trail >= static_cast<int>(map.heading_var.size())) {
      pairs_.clear();
      break;
    }
    ps.vars = {map.heading_var[pv.lead], map.heading_var[pv.trail], pv.alpha,
               pv.b_diff_pos, pv.b_sum_inf, pv.b_sum_sup, pv.b_case1, pv.b_case4,
               pv.b_family[0], pv.b_family[1], pv.b_family[2], pv.b_ineq_pos, pv.b_alpha_pos};
    bool ok = true;
    std::vector<int> local(n_, -1);
    for (std::size_t k = 0; k < ps.vars.size(); ++k) {
      const int v = ps.vars[k];
      if (v < 0 || v >= n_ || local[v] >= 0 || (k >= 3) != (sys_.binary[v] != 0)) ok = false;
      if (ok) local[v] = static_cast<int>(k);
    }
    std::vector<int> rows;
    if (ok) {
      for (std::size_t k = 2; k < ps.vars.size(); ++k)
        rows.insert(rows.end(), sys_.var_rows[ps.vars[k]].begin(), sys_.var_rows[ps.vars[k]].end());
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
    for (int r : rows) {
      Row lr = sys_.rows[r];
      for (auto& t : lr.terms) {
        if (local[t.var] < 0) ok = false;
        else t.var = local[t.var];
      }
      if (!ok) break;
      ps.sys.rows.push_back(std::move(lr));
    }
    if (!ok) {
      pairs_.clear();
      break;
    }
    ps.sys.binary.assign(ps.vars.size(), 0);
    for (std::size_t k = 3; k < ps.vars.size(); ++k) ps.sys.binary[k] = 1;
    ps.sys.index(static_cast<int>(ps.vars.size()));
    for (int v : ps.vars) {
      ps.lo.push_back(root_lo_[v]);
      ps.hi.push_back(root_hi_[v]);
    }
    pairs_.push_back(std::move(ps));
  }
  if (pairs_.size() != map.pairs.size()) pairs_.clear();
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    pairs_of_[pairs_[p].lead].push_back(static_cast<int>(p));
    pairs_of_[pairs_[p].trail].push_back(static_cast<int>(p));
  }

  // The pattern search needs every binary to belong to exactly one pair.
  std::vector<char> owned(n_, 0);
  std::size_t owned_binaries = 0;
  for (const auto& ps : pairs_)
    for (std::size_t k = 2; k < ps.vars.size(); ++k) {
      owned[ps.vars[k]] = 1;
      if (k >= 3) ++owned_binaries;
    }
  if (!pairs_.empty() && owned_binaries == binaries_.size()) {
    for (const auto& ps : pairs_) patterns_.push_back(pair_patterns(ps));
    for (std::size_t r = 0; r < sys_.rows.size(); ++r) {
      const auto& terms = sys_.rows[r].terms;
      if (std::none_of(terms.begin(), terms.end(), [&](const Term& t) { return owned[t.var]; }))
        base_rows_.push_back(static_cast<int>(r));
    }
  }
}

bool BranchAndBound::rows_hold(const std::vector<double>& x) const {
  for (int k = 0; k < n_; ++k)
    if (x[k] < root_lo_[k] - kCheckTol || x[k] > root_hi_[k] + kCheckTol) return false;
  for (const auto& r : sys_.rows) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x[t.var];
    if (a < r.lo - kCheckTol || a > r.hi + kCheckTol) return false;
  }
  return true;
}

bool BranchAndBound::pair_ok(std::size_t p, const std::vector<double>& theta) const {
  std::vector<double> lo, hi;
  return complete_pair(pairs_[p], theta[pairs_[p].lead], theta[pairs_[p].trail], lo, hi);
}

// Feasible heading for aircraft k closest to its initial heading, given the
// headings of the aircraft flagged in `placed`. Scans outward on a fixed
// step, then bisects back toward the initial heading.
bool BranchAndBound::nearest_heading(int k, const std::vector<double>& theta,
                                     const std::vector<char>& placed, double& out) const {
  const int hv = m_.map.heading_var[k];
  const double t0 = m_.map.initial_heading[k];
  const double lo = root_lo_[hv], hi = root_hi_[hv];
  std::vector<double> trial = theta;
  auto feasible = [&](double t) {
    trial[k] = t;
    for (int p : pairs_of_[k]) {
      const int other = pairs_[p].lead == k ? pairs_[p].trail : pairs_[p].lead;
      if (placed[other] && !pair_ok(p, trial)) return false;
    }
    return true;
  };
  const int steps = static_cast<int>(std::ceil(std::max(hi - t0, t0 - lo) / kScanStep));
  for (int s = 0; s <= steps; ++s) {
    bool found = false;
    double best = 0.0;
    for (int side : {1, -1}) {
      if (s == 0 && side < 0) continue;
      const double t = std::clamp(t0 + side * s * kScanStep, lo, hi);
      if (!feasible(t)) continue;
      double good = t;
      if (s > 0) {
        double bad = std::clamp(t0 + side * (s - 1) * kScanStep, lo, hi);
        for (int it = 0; it < 14; ++it) {
          const double mid = 0.5 * (good + bad);
          if (feasible(mid)) good = mid;
          else bad = mid;
        }
      }
      if (!found || std::abs(good - t0) < std::abs(best - t0)) best = good;
      found = true;
    }
    if (found) {
      out = best;
      return true;
    }
  }
  return false;
}

// Greedy placement in aircraft order followed by coordinate descent, each
// step moving one aircraft to the feasible heading nearest its initial one.
// The result is polished by the LP with its binaries fixed, which can only
// lower the objective.
void BranchAndBound::heading_heuristic() {
  const std::size_t na = m_.map.heading_var.size();
  if (pairs_.empty() || na == 0) return;
  std::vector<double> theta(m_.map.initial_heading);
  std::vector<char> placed(na, 0);
  for (std::size_t k = 0; k < na; ++k) {
    double t;
    if (!nearest_heading(static_cast<int>(k), theta, placed, t)) return;
    theta[k] = t;
    placed[k] = 1;
  }
  for (int round = 0; round < 3; ++round) {
    for (int pass = 0; pass < 4; ++pass) {
      bool moved = false;
      for (std::size_t k = 0; k < na; ++k) {
        double t;
        const double t0 = m_.map.initial_heading[k];
        if (nearest_heading(static_cast<int>(k), theta, placed, t) &&
            std::abs(t - t0) < std::abs(theta[k] - t0) - 1e-9) {
          theta[k] = t;
          moved = true;
        }
      }
      if (!moved) break;
    }
    std::vector<double> x;
    if (!complete_from_headings(theta, x, nullptr)) return;
    const double before = incumbent_obj_;
    offer_incumbent(x);
    if (!(incumbent_obj_ < before - 1e-9)) return;
    for (std::size_t k = 0; k < na; ++k) theta[k] = incumbent_[m_.map.heading_var[k]];
  }
}

// Completes a full point from per-aircraft headings. Pairs that cannot be
// completed are listed in `failed` when given; those are the ones worth
// branching on.
bool BranchAndBound::complete_from_headings(const std::vector<double>& theta,
                                            std::vector<double>& out,
                                            std::vector<int>* failed) const {
  if (failed) failed->clear();
  if (pairs_.empty()) return false;
  out.assign(n_, 0.0);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const int th = m_.map.heading_var[k];
    out[th] = std::clamp(theta[k], root_lo_[th], root_hi_[th]);
    out[m_.map.deviation_var[k]] = std::abs(out[th] - m_.map.initial_heading[k]);
  }
  std::vector<double> lo, hi;
  bool all = true;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const PairSystem& ps = pairs_[p];
    if (!complete_pair(ps, out[ps.vars[0]], out[ps.vars[1]], lo, hi)) {
      all = false;
      if (!failed) return false;
      failed->push_back(static_cast<int>(p));
      continue;
    }
    for (std::size_t k = 2; k < ps.vars.size(); ++k) out[ps.vars[k]] = lo[k];
  }
  return all && rows_hold(out);
}

LazyLp BranchAndBound::fresh_lp(const std::vector<double>& lo, const std::vector<double>& hi,
                                bool bland) const {
  SimplexOptions opt;
  if (bland) opt.degenerate_limit = 1;
  LazyLp s;
  s.lp = std::make_unique<detail::Simplex>(m_.objective, lo, hi, opt);
  // Only integral fixings are permanent along a dive.
  std::vector<char> droppable(sys_.binary.begin(), sys_.binary.end());
  s.lp->set_droppable(std::move(droppable));
  s.lp->drop_fixed();
  s.active.assign(sys_.rows.size(), 0);
  for (std::size_t i = 0; i < sys_.rows.size(); ++i) {
    const Row& r = sys_.rows[i];
    bool seed = r.lo == r.hi;
    if (!seed) {
      seed = true;
      for (const auto& t : r.terms)
        if (sys_.binary[t.var] && lo[t.var] != hi[t.var]) seed = false;
    }
    if (seed) {
      s.active[i] = 1;
      s.lp->add_row(r.terms, r.lo, r.hi);
    }
  }
  return s;
}

// Row generation: solve, add every violated model row, re-solve from the
// current basis until none is violated. Most big-M rows never bind, so the
// tableau stays far smaller than the full LP.
LpStatus BranchAndBound::solve_lazy(LazyLp& s, LpSolution& out) {
  const std::int64_t it0 = s.lp->iterations();
  LpStatus status;
  while (true) {
    status = s.lp->solve();
    if (status != LpStatus::Optimal) break;
    int added = 0;
    for (std::size_t i = 0; i < sys_.rows.size(); ++i) {
      if (s.active[i]) continue;
      const Row& r = sys_.rows[i];
      double a = 0.0;
      for (const auto& t : r.terms) a += t.coef * s.lp->value(t.var);
      if (a < r.lo - kFeasTol || a > r.hi + kFeasTol) {
        s.active[i] = 1;
        s.lp->add_row(r.terms, r.lo, r.hi);
        ++added;
      }
    }
    if (added == 0) break;
  }
  ++stats_.lps;
  stats_.simplex_iterations += s.lp->iterations() - it0;
  if (status == LpStatus::Optimal) {
    if (s.lp->max_violation() > kCheckTol)
      throw NumericalBreakdown("LP relaxation result violates a row");
    out.values = s.lp->values();
    out.objective = s.lp->objective();
  }
  out.status = status;
  return status;
}

// Re-solves the previous node's tableau under this node's bounds when that
// is possible, otherwise starts from the slack basis. A numerical failure is
// retried from scratch with Bland's rule.
LpStatus BranchAndBound::node_lp(const Node&, const std::vector<double>& lo,
                                 const std::vector<double>& hi, LpSolution& out) {
  // Columns folded out of the tableau must still be fixed at the same values.
  bool warm = warm_.lp && warm_.lp->pivots() < kRefreshPivots;
  for (int k = 0; warm && k < n_; ++k)
    if (warm_.lp->dropped(k) && (lo[k] != warm_.lp->lower(k) || hi[k] != warm_.lp->upper(k)))
      warm = false;
  if (warm) {
    try {
      for (int k = 0; k < n_; ++k)
        if (lo[k] != warm_.lp->lower(k) || hi[k] != warm_.lp->upper(k))
          warm_.lp->set_bounds(k, lo[k], hi[k]);
      warm_.lp->drop_fixed();
      return solve_lazy(warm_, out);
    } catch (const NumericalBreakdown&) {
    }
  }
  try {
    warm_ = fresh_lp(lo, hi, false);
    return solve_lazy(warm_, out);
  } catch (const NumericalBreakdown&) {
  }
  warm_ = fresh_lp(lo, hi, true);
  return solve_lazy(warm_, out);
}

Evaluation BranchAndBound::evaluate(const Node& node, double cutoff) {
  Evaluation ev;
  std::vector<double> lo = root_lo_, hi = root_hi_;
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    lo[binaries_[b]] = node.lo[b];
    hi[binaries_[b]] = node.hi[b];
  }
  if (!propagate(sys_, lo, hi)) return ev;
  ev.bin_lo.resize(binaries_.size());
  ev.bin_hi.resize(binaries_.size());
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    ev.bin_lo[b] = static_cast<std::int8_t>(lo[binaries_[b]]);
    ev.bin_hi[b] = static_cast<std::int8_t>(hi[binaries_[b]]);
  }

  LpSolution lp;
  const LpStatus st = node_lp(node, lo, hi, lp);
  if (st == LpStatus::Unbounded) throw NumericalBreakdown("LP relaxation reported unbounded");
  if (st == LpStatus::Infeasible) return ev;
  ev.bound = lp.objective;
  if (ev.bound >= cutoff) {
    ev.outcome = Outcome::Pruned;
    return ev;
  }
  ev.values = std::move(lp.values);
  const bool integral = std::all_of(binaries_.begin(), binaries_.end(), [&](int v) {
    const double f = ev.values[v] - std::floor(ev.values[v]);
    return std::min(f, 1.0 - f) <= kIntTol;
  });
  if (integral) {
    ev.outcome = Outcome::Integral;
    return ev;
  }
  std::vector<int> failed;
  if (!pairs_.empty()) {
    std::vector<double> theta, x;
    for (int hv : m_.map.heading_var) theta.push_back(ev.values[hv]);
    if (complete_from_headings(theta, x, &failed)) {
      offer_incumbent(x);
      // The relaxation is attained by a feasible point: nothing below it is
      // left to find.
      if (incumbent_obj_ <= ev.bound + p_.gap_tol) {
        ev.outcome = Outcome::Pruned;
        return ev;
      }
    }
  }
  // Most-fractional binary, restricted to pairs the completion could not
  // separate at these headings when there are any.
  double best_frac = -1.0;
  auto consider = [&](int b) {
    const double v = ev.values[binaries_[b]];
    const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
    if (frac > kIntTol && frac > best_frac + 1e-12) {
      best_frac = frac;
      ev.branch_binary = b;
      ev.branch_value = v;
    }
  };
  for (int p : failed)
    for (std::size_t k = 3; k < pairs_[p].vars.size(); ++k) consider(binary_slot_[pairs_[p].vars[k]]);
  if (ev.branch_binary < 0)
    for (std::size_t b = 0; b < binaries_.size(); ++b) consider(static_cast<int>(b));
  ev.outcome = Outcome::Branch;
  return ev;
}

// Polishes a point whose binaries are integral: binaries snapped, LP
// re-solved with all of them fixed so the incumbent carries no fractional
// residue and the continuous part is optimal for that pattern.
void BranchAndBound::offer_incumbent(const std::vector<double>& values) {
  std::vector<double> lo = root_lo_, hi = root_hi_;
  for (int v : binaries_) lo[v] = hi[v] = std::round(values[v]);
  if (!propagate(sys_, lo, hi)) return;
  LpSolution lp;
  try {
    LazyLp s = fresh_lp(lo, hi, false);
    if (solve_lazy(s, lp) != LpStatus::Optimal) return;
  } catch (const NumericalBreakdown&) {
    return;
  }
  if (!rows_hold(lp.values)) return;
  if (!have_incumbent_ || lp.objective < incumbent_obj_ - 1e-12) {
    have_incumbent_ = true;
    incumbent_obj_ = lp.objective;
    incumbent_ = std::move(lp.values);
    stats_.incumbent_trace.push_back(incumbent_obj_);
  }
}

Solution BranchAndBound::run() {
  heading_heuristic();
  return (patterns_.empty() || !p_.pattern_search) ? run_binary() : run_patterns();
}

// Branching on single binaries of the full big-M relaxation. Used for models
// without a pair map.
Solution BranchAndBound::run_binary() {

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::int64_t next_id = 0;
  Node root;
  root.id = next_id++;
  root.bound = -INFINITY;
  root.lo.resize(binaries_.size());
  root.hi.resize(binaries_.size());
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    root.lo[b] = static_cast<std::int8_t>(root_lo_[binaries_[b]]);
    root.hi[b] = static_cast<std::int8_t>(root_hi_[binaries_[b]]);
  }
  open.push(std::move(root));

  bool out_of_budget = false;
  std::int64_t selections = 0;
  double frontier_bound = INFINITY;
  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double cutoff = have_incumbent_ ? incumbent_obj_ - p_.gap_tol : INFINITY;
    if (node.bound >= cutoff) continue;
    ++selections;
    const bool dive = !have_incumbent_ || selections % p_.dive_period == 0;

    while (true) {
      if (stats_.nodes >= p_.node_limit || elapsed_s() > p_.time_limit_s) {
        out_of_budget = true;
        frontier_bound = std::min(frontier_bound, node.bound);
        break;
      }
      ++stats_.nodes;
      const double cut = have_incumbent_ ? incumbent_obj_ - p_.gap_tol : INFINITY;
      Evaluation ev;
      try {
        ev = evaluate(node, cut);
      } catch (const NumericalBreakdown&) {
        // The subtree is abandoned, so optimality can no longer be claimed.
        lost_node_ = true;
        frontier_bound = std::min(frontier_bound, node.bound);
        warm_.lp.reset();
        break;
      }
      if (ev.outcome == Outcome::Infeasible || ev.outcome == Outcome::Pruned) break;
      if (std::isfinite(node.bound))
        stats_.worst_bound_drop = std::max(stats_.worst_bound_drop, node.bound - ev.bound);
      if (ev.outcome == Outcome::Integral) {
        offer_incumbent(ev.values);
        break;
      }
      Node down, up;
      down.lo = up.lo = ev.bin_lo;
      down.hi = up.hi = ev.bin_hi;
      down.id = next_id++;
      up.id = next_id++;
      down.parent = up.parent = node.id;
      down.depth = up.depth = node.depth + 1;
      down.bound = up.bound = ev.bound;
      down.hi[ev.branch_binary] = 0;
      up.lo[ev.branch_binary] = 1;
      if (!dive) {
        open.push(std::move(down));
        open.push(std::move(up));
        break;
      }
      if (ev.branch_value >= 0.5) {
        open.push(std::move(down));
        node = std::move(up);
      } else {
        open.push(std::move(up));
        node = std::move(down);
      }
    }
    if (out_of_budget) break;
  }
  while (!open.empty()) {
    frontier_bound = std::min(frontier_bound, open.top().bound);
    open.pop();
  }
  return finish(out_of_budget, frontier_bound);
}

Solution BranchAndBound::finish(bool out_of_budget, double frontier_bound) {
  Solution sol;
  stats_.wall_ms = elapsed_s() * 1e3;
  if (out_of_budget || lost_node_) {
    sol.status = SolveStatus::TimeLimit;
    stats_.best_bound = have_incumbent_ ? std::min(frontier_bound, incumbent_obj_) : frontier_bound;
  } else {
    sol.status = have_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible;
    stats_.best_bound = have_incumbent_ ? incumbent_obj_ : INFINITY;
  }
  if (!std::isfinite(stats_.best_bound) && have_incumbent_) stats_.best_bound = 0.0;
  stats_.gap = have_incumbent_ ? std::max(0.0, incumbent_obj_ - stats_.best_bound) : INFINITY;
  if (sol.status == SolveStatus::Optimal) stats_.gap = 0.0;
  sol.has_incumbent = have_incumbent_;
  if (have_incumbent_) {
    sol.values = incumbent_;
    sol.headings = scenario_headings(m_, incumbent_);
    double obj = 0.0;
    for (std::size_t k = 0; k < m_.map.heading_var.size(); ++k)
      obj += std::abs(incumbent_[m_.map.heading_var[k]] - m_.map.initial_heading[k]);
    sol.objective = m_.map.heading_var.empty() ? incumbent_obj_ : obj;
  }
  sol.stats = stats_;
  return sol;
}

// Node LP of the pattern search: the rows of every assigned pair under its
// pattern, plus the rows that involve no pair at all. Free pairs contribute
// nothing, which keeps this a relaxation of the subproblem.
detail::Simplex BranchAndBound::pattern_lp(const std::vector<std::int16_t>& assign,
                                           bool bland) const {
  SimplexOptions opt;
  if (bland) opt.degenerate_limit = 1;
  std::vector<double> lo = root_lo_, hi = root_hi_;
  for (int v : binaries_) hi[v] = lo[v];
  detail::Simplex lp(m_.objective, lo, hi, opt);
  lp.set_droppable(std::vector<char>(sys_.binary.begin(), sys_.binary.end()));
  lp.drop_fixed();
  for (int r : base_rows_) lp.add_row(sys_.rows[r].terms, sys_.rows[r].lo, sys_.rows[r].hi);
  for (std::size_t p = 0; p < assign.size(); ++p)
    if (assign[p] >= 0)
      for (const Row& r : patterns_[p][assign[p]].rows) lp.add_row(r.terms, r.lo, r.hi);
  return lp;
}

// False when infeasible.
bool BranchAndBound::solve_pattern_lp(detail::Simplex& lp, LpSolution& out) {
  const std::int64_t it0 = lp.iterations();
  const LpStatus st = lp.solve();
  ++stats_.lps;
  stats_.simplex_iterations += lp.iterations() - it0;
  if (st == LpStatus::Unbounded) throw NumericalBreakdown("pattern LP reported unbounded");
  if (st != LpStatus::Optimal) return false;
  if (lp.max_violation() > kCheckTol) throw NumericalBreakdown("pattern LP result violates a row");
  out.values = lp.values();
  out.objective = lp.objective();
  return true;
}

// Tries to finish a node at its LP headings. Returns true when the node is
// closed; otherwise picks the pair to split.
bool BranchAndBound::settle(PatternNode& node, const LpSolution& lp) {
  std::vector<double> x = lp.values;
  std::vector<double> lo, hi;
  int first_failed = -1;
  int first_free = -1;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const PairSystem& ps = pairs_[p];
    if (node.assign[p] >= 0) {
      const auto& bits = patterns_[p][node.assign[p]].bits;
      for (std::size_t k = 3; k < ps.vars.size(); ++k) x[ps.vars[k]] = bits[k - 3];
      continue;
    }
    if (first_free < 0) first_free = static_cast<int>(p);
    if (first_failed >= 0) continue;
    if (complete_pair(ps, x[ps.vars[0]], x[ps.vars[1]], lo, hi)) {
      for (std::size_t k = 2; k < ps.vars.size(); ++k) x[ps.vars[k]] = lo[k];
    } else {
      first_failed = static_cast<int>(p);
    }
  }
  if (first_failed < 0) {
    offer_incumbent(x);
    if (have_incumbent_ && incumbent_obj_ <= node.bound + p_.gap_tol) return true;
  }
  node.branch = first_failed >= 0 ? first_failed : first_free;
  if (node.branch < 0) {
    // Every pair is assigned yet the point could not be certified.
    lost_node_ = true;
    return true;
  }
  return false;
}

// Branch-and-bound over whole pair patterns. A node fixes the binaries of
// some pairs; splitting a pair creates one child per admissible pattern.
Solution BranchAndBound::run_patterns() {
  std::priority_queue<PatternNode, std::vector<PatternNode>, PatternOrder> open;
  std::int64_t next_id = 0;
  double frontier_bound = INFINITY;
  bool out_of_budget = false;

  auto cutoff = [&] { return have_incumbent_ ? incumbent_obj_ - p_.gap_tol : INFINITY; };
  // Solves a fresh node and queues it unless it closes.
  auto admit = [&](PatternNode&& node, detail::Simplex& lp, double parent_bound) {
    ++stats_.nodes;
    LpSolution sol;
    bool ok;
    try {
      ok = solve_pattern_lp(lp, sol);
    } catch (const NumericalBreakdown&) {
      try {
        detail::Simplex cold = pattern_lp(node.assign, true);
        ok = solve_pattern_lp(cold, sol);
      } catch (const NumericalBreakdown&) {
        lost_node_ = true;
        return;
      }
    }
    if (!ok) return;
    if (std::isfinite(parent_bound))
      stats_.worst_bound_drop = std::max(stats_.worst_bound_drop, parent_bound - sol.objective);
    if (sol.objective >= cutoff()) return;
    node.bound = sol.objective;
    if (!settle(node, sol)) open.push(std::move(node));
  };

  {
    PatternNode root;
    root.id = next_id++;
    root.assign.assign(pairs_.size(), -1);
    detail::Simplex lp = pattern_lp(root.assign, false);
    admit(std::move(root), lp, -INFINITY);
  }

  while (!open.empty()) {
    PatternNode node = open.top();
    open.pop();
    if (node.bound >= cutoff()) continue;
    if (stats_.nodes >= p_.node_limit || elapsed_s() > p_.time_limit_s) {
      out_of_budget = true;
      frontier_bound = std::min(frontier_bound, node.bound);
      break;
    }
    detail::Simplex parent = pattern_lp(node.assign, false);
    LpSolution ignored;
    bool parent_ok = false;
    try {
      parent_ok = solve_pattern_lp(parent, ignored);
    } catch (const NumericalBreakdown&) {
    }
    const int p = node.branch;
    for (std::size_t k = 0; k < patterns_[p].size(); ++k) {
      PatternNode child;
      child.id = next_id++;
      child.depth = node.depth + 1;
      child.assign = node.assign;
      child.assign[p] = static_cast<std::int16_t>(k);
      if (parent_ok) {
        detail::Simplex lp = parent;
        for (const Row& r : patterns_[p][k].rows) lp.add_row(r.terms, r.lo, r.hi);
        admit(std::move(child), lp, node.bound);
      } else {
        detail::Simplex lp = pattern_lp(child.assign, false);
        admit(std::move(child), lp, node.bound);
      }
    }
  }
  while (!open.empty()) {
    frontier_bound = std::min(frontier_bound, open.top().bound);
    open.pop();
  }
  return finish(out_of_budget, frontier_bound);
}

}  // namespace

Solution solve_milp(const MilpModel& m, const MilpParams& params) {
  params.validate();
  BranchAndBound bb(m, params);
  return bb.run();
}

}  // namespace degrade
