#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace degrade {

/// Planar constant-velocity state of one aircraft. x/y in NM, heading in
/// radians within [-pi, pi], speed in NM/min.
struct AircraftState {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

/// Growth of the avoidance circle after a surveillance failure. The radius
/// grows linearly from r0 to rf at a rate set by the heading and speed
/// uncertainties, then stays at rf.
struct UncertaintyModel {
  double r0 = 1.5;           // NM
  double rf = 2.5;           // NM
  double delta_theta = 0.0;  // rad
  double delta_v = 0.0;      // NM/min

  /// Throws std::invalid_argument when 0 < r0 < rf or the angle range fails.
  void validate() const;
};

struct ScenarioMetadata {
  double cone_half_angle = 0.0;  // rad
  std::uint64_t seed = 0;
  std::string label;
};

struct TrafficScenario {
  std::vector<AircraftState> aircraft;
  UncertaintyModel uncertainty;
  ScenarioMetadata metadata;

  /// Checks count, id uniqueness, ordering, speeds, headings and the
  /// no-initial-conflict condition. Throws InvalidScenario.
  void validate() const;
};

/// Orders aircraft by x ascending, ties by y ascending.
void sort_aircraft(std::vector<AircraftState>& aircraft);
bool precedes(const AircraftState& a, const AircraftState& b);

/// Angles describing the line of sight between an ordered aircraft pair.
/// A gamma is empty when the corresponding circle already contains the
/// other aircraft (distance too small for the tangent to exist).
struct PairGeometry {
  double distance = 0.0;              // NM
  double omega = 0.0;                 // rad, in [-pi/2, pi/2]
  std::optional<double> gamma_tilde;  // asin(2 rf / D)
  std::optional<double> gamma_hat;    // asin(2 r0 / D)
  std::optional<double> gamma_star;   // asin((r0 + rf) / D)
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlreadyInConflict : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class SeparationBelowFinal : public GeometryError {
 public:
  SeparationBelowFinal(const std::string& what, PairGeometry partial)
      : GeometryError(what), partial_(partial) {}
  /// Geometry with gamma_tilde unset; the other families remain usable.
  const PairGeometry& partial() const { return partial_; }

 private:
  PairGeometry partial_;
};

class ZeroRelativeVelocity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Avoidance radius growth rate: max(V sin(dtheta), dV).
double growth_rate(double speed, const UncertaintyModel& u);

/// Time for the radius to grow from r0 to rf.
double transition_time(const UncertaintyModel& u, double growth);

/// min(r0 + growth t, rf).
double radius_at(const UncertaintyModel& u, double growth, double t);

/// Line-of-sight geometry from a_i to a_j; a_i must precede a_j.
/// Throws AlreadyInConflict when D <= 2 r0 and SeparationBelowFinal when
/// D <= 2 rf.
PairGeometry pair_geometry(const AircraftState& a_i, const AircraftState& a_j,
                           const UncertaintyModel& u);

/// Same as pair_geometry but never throws SeparationBelowFinal; unavailable
/// gammas are left empty.
PairGeometry pair_geometry_lenient(const AircraftState& a_i,
                                   const AircraftState& a_j,
                                   const UncertaintyModel& u);

/// Relative speed |V_i - V_j|.
double relative_speed(const AircraftState& a_i, const AircraftState& a_j);

/// Direction of V_i - V_j in (-pi, pi].
double exact_theta_ij(const AircraftState& a_i, const AircraftState& a_j);

/// Half-width of the relative-heading cone swept by the growing circles:
/// asin((r_i' + r_j') / V_ij), pi/2 at equality, pi when growth wins.
double exact_alpha(const AircraftState& a_i, const AircraftState& a_j,
                   const UncertaintyModel& u);

/// Closed form of exact_alpha under identical speeds as a function of the
/// heading difference delta = theta_i - theta_j.
double alpha_of_heading_difference(double delta, double speed,
                                   const UncertaintyModel& u);

}  // namespace degrade
