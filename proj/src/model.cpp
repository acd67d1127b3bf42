#include "degrade/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "degrade/units.hpp"

namespace degrade {

void UncertaintyModel::validate() const {
  if (!(r0 > 0.0) || !(rf > r0))
    throw std::invalid_argument("uncertainty: require 0 < r0 < rf");
  if (!(delta_theta >= 0.0) || !(delta_theta < kPi / 2.0))
    throw std::invalid_argument("uncertainty: delta_theta must lie in [0, pi/2)");
  if (!(delta_v >= 0.0))
    throw std::invalid_argument("uncertainty: delta_v must be >= 0");
}

bool precedes(const AircraftState& a, const AircraftState& b) {
  if (a.x != b.x) return a.x < b.x;
  return a.y < b.y;
}

void sort_aircraft(std::vector<AircraftState>& aircraft) {
  std::stable_sort(aircraft.begin(), aircraft.end(), precedes);
}

void TrafficScenario::validate() const {
  uncertainty.validate();
  if (aircraft.size() < 2)
    throw InvalidScenario("scenario needs at least two aircraft");
  std::set<int> ids;
  for (const auto& a : aircraft) {
    if (!ids.insert(a.id).second) {
      throw InvalidScenario("duplicate aircraft id " + std::to_string(a.id));
    }
    if (!(a.speed > 0.0))
      throw InvalidScenario("aircraft " + std::to_string(a.id) + ": speed must be > 0");
    if (!(a.heading >= -kPi && a.heading <= kPi))
      throw InvalidScenario("aircraft " + std::to_string(a.id) +
                            ": heading outside [-pi, pi]");
    if (growth_rate(a.speed, uncertainty) <= 0.0)
      throw InvalidScenario("uncertainty gives zero growth rate");
  }
  for (std::size_t k = 1; k < aircraft.size(); ++k) {
    if (precedes(aircraft[k], aircraft[k - 1]) ||
        (aircraft[k].x == aircraft[k - 1].x && aircraft[k].y == aircraft[k - 1].y))
      throw InvalidScenario("aircraft not sorted by (x, y) or co-located");
  }
  for (std::size_t i = 0; i < aircraft.size(); ++i) {
    for (std::size_t j = i + 1; j < aircraft.size(); ++j) {
      double d = std::hypot(aircraft[j].x - aircraft[i].x, aircraft[j].y - aircraft[i].y);
      if (d <= 2.0 * uncertainty.r0) {
        std::ostringstream os;
        os << "aircraft " << aircraft[i].id << " and " << aircraft[j].id
           << " start in conflict (D = " << d << " NM)";
        throw InvalidScenario(os.str());
      }
    }
  }
}

double growth_rate(double speed, const UncertaintyModel& u) {
  return std::max(speed * std::sin(u.delta_theta), u.delta_v);
}

double transition_time(const UncertaintyModel& u, double growth) {
  return (u.rf - u.r0) / growth;
}

double radius_at(const UncertaintyModel& u, double growth, double t) {
  return std::min(u.r0 + growth * t, u.rf);
}

PairGeometry pair_geometry_lenient(const AircraftState& a_i, const AircraftState& a_j,
                                   const UncertaintyModel& u) {
  PairGeometry g;
  const double dx = a_j.x - a_i.x;
  const double dy = a_j.y - a_i.y;
  g.distance = std::hypot(dx, dy);
  g.omega = std::atan2(dy, dx);
  if (g.distance <= 2.0 * u.r0) {
    std::ostringstream os;
    os << "aircraft " << a_i.id << " and " << a_j.id << " already in conflict (D = "
       << g.distance << " NM)";
    throw AlreadyInConflict(os.str());
  }
  g.gamma_hat = std::asin(2.0 * u.r0 / g.distance);
  if (g.distance > u.r0 + u.rf) g.gamma_star = std::asin((u.r0 + u.rf) / g.distance);
  if (g.distance > 2.0 * u.rf) g.gamma_tilde = std::asin(2.0 * u.rf / g.distance);
  return g;
}

PairGeometry pair_geometry(const AircraftState& a_i, const AircraftState& a_j,
                           const UncertaintyModel& u) {
  PairGeometry g = pair_geometry_lenient(a_i, a_j, u);
  if (!g.gamma_tilde) {
    std::ostringstream os;
    os << "aircraft " << a_i.id << " and " << a_j.id << " closer than 2 rf (D = "
       << g.distance << " NM)";
    throw SeparationBelowFinal(os.str(), g);
  }
  return g;
}

double relative_speed(const AircraftState& a_i, const AircraftState& a_j) {
  const double vx = a_i.speed * std::cos(a_i.heading) - a_j.speed * std::cos(a_j.heading);
  const double vy = a_i.speed * std::sin(a_i.heading) - a_j.speed * std::sin(a_j.heading);
  return std::hypot(vx, vy);
}

double exact_theta_ij(const AircraftState& a_i, const AircraftState& a_j) {
  const double vx = a_i.speed * std::cos(a_i.heading) - a_j.speed * std::cos(a_j.heading);
  const double vy = a_i.speed * std::sin(a_i.heading) - a_j.speed * std::sin(a_j.heading);
  if (vx == 0.0 && vy == 0.0)
    throw ZeroRelativeVelocity("relative velocity is zero; theta_ij undefined");
  return wrap_angle(std::atan2(vy, vx));
}

namespace {

double alpha_from_ratio(double growth_sum, double v_rel) {
  constexpr double kRelTol = 1e-12;
  if (std::abs(growth_sum - v_rel) <= kRelTol * std::max(growth_sum, v_rel))
    return kPi / 2.0;
  if (growth_sum > v_rel) return kPi;
  return std::asin(growth_sum / v_rel);
}

}  // namespace

double exact_alpha(const AircraftState& a_i, const AircraftState& a_j,
                   const UncertaintyModel& u) {
  const double sum = growth_rate(a_i.speed, u) + growth_rate(a_j.speed, u);
  return alpha_from_ratio(sum, relative_speed(a_i, a_j));
}

double alpha_of_heading_difference(double delta, double speed, const UncertaintyModel& u) {
  const double v_rel = 2.0 * speed * std::abs(std::sin(delta / 2.0));
  return alpha_from_ratio(2.0 * growth_rate(speed, u), v_rel);
}

}  // namespace degrade
