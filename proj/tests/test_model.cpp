#include <cmath>
#include <random>

#include "degrade/model.hpp"
#include "degrade/units.hpp"
#include "doctest.h"

using namespace degrade;

namespace {

UncertaintyModel paper_uncertainty() {
  UncertaintyModel u;
  u.r0 = 1.5;
  u.rf = 2.5;
  u.delta_theta = deg_to_rad(5.0);
  u.delta_v = 0.0;
  return u;
}

AircraftState at(int id, double x, double y, double heading, double speed = 200.0 / 60.0) {
  return AircraftState{id, x, y, heading, speed};
}

}  // namespace

TEST_CASE("growth rate and transition time from the paper parameters") {
  const auto u = paper_uncertainty();
  const double v = kt_to_nm_per_min(200.0);
  const double g = growth_rate(v, u);
  CHECK(g == doctest::Approx(0.2906).epsilon(1e-3));
  CHECK(std::abs(g - 0.29) < 0.005);
  CHECK(std::abs(transition_time(u, g) - 3.44) < 0.05);

  UncertaintyModel still = u;
  still.delta_theta = 0.0;
  CHECK(growth_rate(v, still) == 0.0);
  still.delta_v = 0.5;
  CHECK(growth_rate(v, still) == 0.5);
}

TEST_CASE("radius saturates at rf") {
  const auto u = paper_uncertainty();
  CHECK(radius_at(u, 0.29, 0.0) == 1.5);
  const double g = growth_rate(kt_to_nm_per_min(200.0), u);
  CHECK(radius_at(u, g, 3.448) == 2.5);
  CHECK(radius_at(u, g, transition_time(u, g)) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(radius_at(u, 0.29, 100.0) == 2.5);
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = radius_at(u, 0.29, 0.1 * k);
    CHECK(r >= prev);
    CHECK(r <= u.rf);
    prev = r;
  }
}

TEST_CASE("pair geometry angles") {
  const auto u = paper_uncertainty();
  auto g = pair_geometry(at(1, 0, 0, 0), at(2, 10, 0, 0), u);
  CHECK(*g.gamma_tilde == doctest::Approx(kPi / 6).epsilon(1e-14));
  CHECK(g.omega == 0.0);

  g = pair_geometry(at(1, 0, 0, 0), at(2, 0, 8, 0), u);
  CHECK(*g.gamma_star == doctest::Approx(kPi / 6).epsilon(1e-14));
  CHECK(g.omega == doctest::Approx(kPi / 2));
  CHECK(*g.gamma_hat < *g.gamma_star);
  CHECK(*g.gamma_star < *g.gamma_tilde);

  // 2 r0 < D <= 2 rf: only the final-radius family is lost.
  CHECK_THROWS_AS(pair_geometry(at(1, 0, 0, 0), at(2, 3.5, 0, 0), u), SeparationBelowFinal);
  try {
    pair_geometry(at(1, 0, 0, 0), at(2, 3.5, 0, 0), u);
  } catch (const SeparationBelowFinal& e) {
    CHECK_FALSE(e.partial().gamma_tilde.has_value());
    CHECK(*e.partial().gamma_hat == doctest::Approx(1.0296968008377507).epsilon(1e-12));
  }
  const auto lenient = pair_geometry_lenient(at(1, 0, 0, 0), at(2, 3.5, 0, 0), u);
  CHECK_FALSE(lenient.gamma_star.has_value());

  CHECK_THROWS_AS(pair_geometry(at(1, 0, 0, 0), at(2, 2.9, 0, 0), u), AlreadyInConflict);
}

TEST_CASE("exact theta_ij") {
  CHECK(exact_theta_ij(at(1, 0, 0, 0.0), at(2, 5, 0, kPi)) == doctest::Approx(0.0));
  CHECK(exact_theta_ij(at(1, 0, 0, 0.2), at(2, 5, 0, -0.1)) ==
        doctest::Approx(0.05 + kPi / 2).epsilon(1e-12));
  CHECK_THROWS_AS(exact_theta_ij(at(1, 0, 0, 0.3), at(2, 5, 0, 0.3)), ZeroRelativeVelocity);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> h(-kPi, kPi);
  for (int k = 0; k < 1000; ++k) {
    const auto a = at(1, 0, 0, h(rng));
    const auto b = at(2, 5, 0, h(rng));
    const double d = wrap_angle(exact_theta_ij(a, b) - exact_theta_ij(b, a) - kPi);
    CHECK(std::abs(d) < 1e-12);
  }
}

TEST_CASE("exact alpha special cases") {
  auto u = paper_uncertainty();
  const double v = kt_to_nm_per_min(200.0);
  const double head_on = exact_alpha(at(1, 0, 0, 0), at(2, 20, 0, kPi), u);
  CHECK(head_on == doctest::Approx(std::asin(2 * growth_rate(v, u) / (2 * v))).epsilon(1e-12));
  CHECK(head_on == doctest::Approx(0.08727).epsilon(1e-4));
  CHECK(head_on == doctest::Approx(alpha_of_heading_difference(kPi, v, u)).epsilon(1e-12));

  // Growth sum equal to, then twice, the relative speed.
  UncertaintyModel fast = u;
  fast.delta_theta = 0.0;
  fast.delta_v = v;  // relative speed of a head-on pair is 2v
  CHECK(exact_alpha(at(1, 0, 0, 0), at(2, 20, 0, kPi), fast) == doctest::Approx(kPi / 2));
  fast.delta_v = 2 * v;
  CHECK(exact_alpha(at(1, 0, 0, 0), at(2, 20, 0, kPi), fast) == kPi);
  CHECK(exact_alpha(at(1, 0, 0, 0.3), at(2, 20, 0, 0.3), u) == kPi);

  // Nonincreasing in relative speed.
  double prev = kPi;
  for (int k = 1; k <= 180; ++k) {
    const double a = alpha_of_heading_difference(deg_to_rad(k), v, u);
    CHECK(a <= prev);
    prev = a;
  }
}

TEST_CASE("scenario validation") {
  TrafficScenario s;
  s.uncertainty = paper_uncertainty();
  s.aircraft = {at(1, 0, 0, 0), at(2, 10, 0, kPi)};
  CHECK_NOTHROW(s.validate());
  s.aircraft[1].id = 1;
  CHECK_THROWS_AS(s.validate(), InvalidScenario);
  s.aircraft[1].id = 2;
  s.aircraft[1].x = 2.0;
  CHECK_THROWS_AS(s.validate(), InvalidScenario);
  s.aircraft[1].x = -10.0;
  CHECK_THROWS_AS(s.validate(), InvalidScenario);  // unsorted
  sort_aircraft(s.aircraft);
  CHECK_NOTHROW(s.validate());
  s.aircraft.pop_back();
  CHECK_THROWS_AS(s.validate(), InvalidScenario);
}
