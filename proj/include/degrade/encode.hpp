#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "degrade/model.hpp"

namespace degrade {

// ---------------------------------------------------------------------------
// Piecewise-linear epigraph of the cone half-width alpha(delta)

struct PwlSegment {
  double slope = 0.0;      // a_k
  double intercept = 0.0;  // b_k, rad
};

/// Secant over-approximation of alpha on [delta_min, delta_max], mirrored to
/// [-delta_max, -delta_min] when `mirror` is set.
struct PwlFit {
  std::vector<PwlSegment> segments;
  std::vector<double> knots;  // segments.size() + 1 entries
  double delta_min = 0.0;
  double delta_max = 0.0;
  bool mirror = true;
  double speed = 0.0;  // NM/min the fit was built for
  UncertaintyModel uncertainty;

  /// max_k(a_k |delta| + b_k) for the mirrored fit.
  double evaluate(double delta) const;
};

class FitNotConservative : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultSegmentCount = 10;

/// Builds the secant fit for identical speed `speed`. Knots are placed so
/// every segment has the same worst chord error, which packs them tightly
/// against delta_min where the arcsine is vertical. Throws
/// std::invalid_argument when segment_count < 3 or the growth rate is not in
/// (0, speed), FitNotConservative when a validation sweep finds the fit below
/// the exact curve.
PwlFit fit_alpha_pwl(const UncertaintyModel& u, double speed,
                     int segment_count = kDefaultSegmentCount);

/// Largest (fit - exact) gap over a uniform grid of the fitted band.
struct PwlError {
  double max_over = 0.0;   // worst over-approximation
  double max_under = 0.0;  // worst under-approximation (should be 0)
  int points = 0;
};
PwlError measure_fit(const PwlFit& fit, int grid_points);

// ---------------------------------------------------------------------------
// Mixed-integer linear model

enum class VarType { Continuous, Binary };

struct Variable {
  std::string name;
  VarType type = VarType::Continuous;
  double lower = 0.0;
  double upper = 0.0;
};

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

/// Indices of the variables belonging to one aircraft pair. `lead` precedes
/// `trail` in the encoding frame.
struct PairVars {
  int lead = 0;
  int trail = 0;
  int alpha = -1;
  int b_diff_pos = -1;
  int b_sum_inf = -1;
  int b_sum_sup = -1;
  int b_case1 = -1;
  int b_case4 = -1;
  int b_alpha_pos = -1;
  int b_ineq_pos = -1;
  int b_family[3] = {-1, -1, -1};
};

/// Links the model back to the scenario it encodes.
struct EncodingMap {
  /// Headings in the model are scenario headings minus this angle.
  double frame_rotation = 0.0;
  std::vector<int> heading_var;          // per scenario aircraft
  std::vector<int> deviation_var;        // per scenario aircraft
  std::vector<double> initial_heading;   // model frame, per aircraft
  std::vector<PairVars> pairs;
};

struct MilpModel {
  std::vector<Variable> variables;
  std::vector<Constraint> rows;
  std::vector<double> objective;  // one coefficient per variable
  double big_m = 50.0;
  EncodingMap map;

  int add_variable(std::string name, VarType type, double lower, double upper);
  int find_variable(std::string_view name) const;  // -1 when absent
  std::size_t binary_count() const;
  std::size_t continuous_count() const;
};

struct EncodeParams {
  double big_m = 50.0;
  double max_deviation = 1.5707963267948966;  // rad
  double eps = 1e-4;                          // rad, strict-inequality margin
  /// Rotate the encoding frame so that no heading sits next to the +-pi cut.
  bool align_frame = true;

  void validate() const;
};

class UnsupportedMixedSpeeds : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Encodes the heading-change avoidance problem. Throws
/// UnsupportedMixedSpeeds, AlreadyInConflict, or std::invalid_argument.
MilpModel build_milp(const TrafficScenario& s, const PwlFit& fit,
                     const EncodeParams& params = {});

/// Frame rotation chosen by build_milp when align_frame is set: the centre of
/// the widest empty arc of headings is mapped onto +-pi.
double choose_frame_rotation(const std::vector<double>& headings);

/// theta_ij from the case table for given headings and case binaries.
double affine_theta_ij(double theta_i, double theta_j, int b_diff_pos,
                       int b_case1, int b_case4);

/// Case binaries implied by a heading pair (bDiffPos, bSumInf, bSumSup,
/// bCase1, bCase4).
struct CaseBits {
  int diff_pos = 0;
  int sum_inf = 0;
  int sum_sup = 0;
  int case1 = 0;
  int case4 = 0;
};
CaseBits case_bits(double theta_i, double theta_j);

/// Maps model-frame heading values back to scenario headings in [-pi, pi].
std::vector<double> scenario_headings(const MilpModel& m,
                                      const std::vector<double>& values);

// ---------------------------------------------------------------------------
// LP text format

std::string export_lp(const MilpModel& m);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

MilpModel parse_lp(std::string_view text);

/// Structural comparison: same variables (by name, type, bounds), same rows by
/// name with coefficients within `tol`, same objective.
bool structurally_equal(const MilpModel& a, const MilpModel& b, double tol = 1e-12,
                        std::string* why = nullptr);

}  // namespace degrade
