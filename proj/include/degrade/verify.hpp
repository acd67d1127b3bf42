#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "degrade/model.hpp"
#include "degrade/units.hpp"

namespace degrade {

inline constexpr double kDefaultHorizon = 60.0;     // min
inline constexpr double kPassTolerance = 1e-6;      // NM

struct PairSeparation {
  int id_i = 0;
  int id_j = 0;
  double margin = 0.0;  // NM, min over t of D_ij(t) - (r_i(t) + r_j(t))
  double t_min = 0.0;   // min
  bool pass = false;
  /// Exact avoidance families satisfied at the resolved headings: stripe
  /// with gamma_tilde, alpha-cone with gamma_hat, half-cone with gamma_star.
  std::array<bool, 3> families{};
};

struct SeparationReport {
  std::vector<PairSeparation> pairs;
  bool pass = true;
  double horizon = kDefaultHorizon;

  double worst_margin() const;
};

struct SeparationMinimum {
  double margin = 0.0;  // NM
  double t_min = 0.0;   // min
};

/// Exact minimum of D_ij(t) - r_i(t) - r_j(t) over [0, horizon] for two
/// aircraft flying straight from t = 0. The radius sum is piecewise linear,
/// so the distance minus it is convex on every piece and its minimum is
/// found by bisection on the derivative.
SeparationMinimum min_separation(const AircraftState& a_i, const AircraftState& a_j,
                                 const UncertaintyModel& u, double horizon = kDefaultHorizon);

/// Exact family test for an ordered pair at its current headings. A family
/// whose gamma does not exist is reported unsatisfied.
std::array<bool, 3> exact_families(const AircraftState& a_i, const AircraftState& a_j,
                                   const UncertaintyModel& u);

/// Separation of every pair once each aircraft flies `headings` (scenario
/// frame, rad, one per aircraft in scenario order).
SeparationReport check_solution(const TrafficScenario& s, const std::vector<double>& headings,
                                 double horizon = kDefaultHorizon);

class NoFeasibleGridPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridOptimum {
  std::vector<double> headings;  // scenario frame, rad
  double objective = 0.0;        // rad
};

/// Brute force over a heading grid of step `step` centred on the initial
/// headings, each within +-max_deviation. A grid point is feasible when the
/// pair satisfies any exact family. Throws NoFeasibleGridPoint when none
/// does, std::invalid_argument unless n = 2 and 0 < step <= 0.01.
GridOptimum grid_oracle_2ac(const TrafficScenario& s, double step,
                            double max_deviation = kPi / 2.0);

}  // namespace degrade
