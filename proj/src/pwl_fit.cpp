#include <algorithm>
#include <cmath>
#include <sstream>

#include "degrade/encode.hpp"
#include "degrade/units.hpp"

namespace degrade {

namespace {

// The gap chord - alpha is concave on a segment because alpha is convex on
// (delta_min, pi], so a ternary search finds its maximum.
double chord_gap(double a, double b, double fa, double fb, double speed,
                 const UncertaintyModel& u) {
  auto gap = [&](double x) {
    const double chord = fa + (fb - fa) * (x - a) / (b - a);
    return chord - alpha_of_heading_difference(x, speed, u);
  };
  double lo = a;
  double hi = b;
  for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (gap(m1) < gap(m2)) lo = m1;
    else hi = m2;
  }
  return std::max(0.0, gap(0.5 * (lo + hi)));
}

// Greedy knot placement: from each knot take the longest segment whose chord
// error stays within `target`.
std::vector<double> place_knots(double d0, double d1, double target, int max_segments,
                                double speed, const UncertaintyModel& u) {
  auto f = [&](double x) { return alpha_of_heading_difference(x, speed, u); };
  std::vector<double> knots{d0};
  while (static_cast<int>(knots.size()) <= max_segments) {
    const double a = knots.back();
    const double fa = f(a);
    if (chord_gap(a, d1, fa, f(d1), speed, u) <= target) {
      knots.push_back(d1);
      return knots;
    }
    double lo = a;
    double hi = d1;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (chord_gap(a, mid, fa, f(mid), speed, u) <= target) lo = mid;
      else hi = mid;
    }
    if (lo <= a) return {};
    knots.push_back(lo);
  }
  return {};
}

}  // namespace

double PwlFit::evaluate(double delta) const {
  const double x = mirror ? std::abs(delta) : delta;
  double best = -INFINITY;
  for (const auto& s : segments) best = std::max(best, s.slope * x + s.intercept);
  return best;
}

PwlFit fit_alpha_pwl(const UncertaintyModel& u, double speed, int segment_count) {
  if (segment_count < 3) throw std::invalid_argument("segment_count must be >= 3");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be > 0");
  const double growth = growth_rate(speed, u);
  if (!(growth > 0.0) || !(growth < speed))
    throw std::invalid_argument("growth rate must lie in (0, speed) for a finite cone");

  PwlFit fit;
  fit.speed = speed;
  fit.uncertainty = u;
  fit.mirror = true;
  // 2 V |sin(delta/2)| = 2 growth gives alpha = pi/2.
  fit.delta_min = 2.0 * std::asin(growth / speed);
  fit.delta_max = kPi;

  // Bisection on the common chord error until the greedy placement just fits.
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> knots;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto k = place_knots(fit.delta_min, fit.delta_max, mid, segment_count, speed, u);
    if (!k.empty()) {
      hi = mid;
      knots = std::move(k);
    } else {
      lo = mid;
    }
  }
  if (knots.empty()) throw FitNotConservative("knot placement failed");
  // Spread any unused segments by splitting the widest ones; keeps the count
  // equal to what was asked for.
  while (static_cast<int>(knots.size()) - 1 < segment_count) {
    std::size_t widest = 0;
    for (std::size_t k = 1; k + 1 < knots.size(); ++k)
      if (knots[k + 1] - knots[k] > knots[widest + 1] - knots[widest]) widest = k;
    knots.insert(knots.begin() + static_cast<long>(widest) + 1,
                 0.5 * (knots[widest] + knots[widest + 1]));
  }
  fit.knots = knots;

  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    const double fa = alpha_of_heading_difference(a, speed, u);
    const double fb = alpha_of_heading_difference(b, speed, u);
    PwlSegment seg;
    seg.slope = (fb - fa) / (b - a);
    seg.intercept = fa - seg.slope * a;
    fit.segments.push_back(seg);
  }

  const PwlError err = measure_fit(fit, 20001);
  if (err.max_under > 1e-12) {
    std::ostringstream os;
    os << "secant fit falls below alpha by " << err.max_under << " rad";
    throw FitNotConservative(os.str());
  }
  return fit;
}

PwlError measure_fit(const PwlFit& fit, int grid_points) {
  PwlError e;
  const double span = fit.delta_max - fit.delta_min;
  for (int k = 0; k < grid_points; ++k) {
    const double d = fit.delta_min + span * (k + 0.5) / grid_points;
    const double exact = alpha_of_heading_difference(d, fit.speed, fit.uncertainty);
    if (!(exact < kPi / 2.0)) continue;
    for (double sign : {1.0, -1.0}) {
      if (sign < 0.0 && !fit.mirror) continue;
      const double gap = fit.evaluate(sign * d) - exact;
      e.max_over = std::max(e.max_over, gap);
      e.max_under = std::max(e.max_under, -gap);
      ++e.points;
    }
  }
  return e;
}

}  // namespace degrade
