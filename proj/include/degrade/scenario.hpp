#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "degrade/model.hpp"

namespace degrade {

/// 64-bit splittable mixing generator. The algorithm is written out in the
/// README so ports can reproduce the same streams.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t state_;
};

/// Seed of case `index` in a batch: the (index + 1)-th output of
/// SplitMix64(master), computed directly.
std::uint64_t case_seed(std::uint64_t master, std::uint64_t index);

struct GeneratorConfig {
  int aircraft_count = 8;
  double ring_spacing = 3.5;        // NM
  double speed_kt = 200.0;
  double cone_half_angle_deg = 0.0;
  UncertaintyModel uncertainty{1.5, 2.5, 0.08726646259971647, 0.0};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

class ConflictAtGeneration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aircraft k (1-based) sits k * spacing from the merge point at a bearing
/// drawn uniformly in [-a, a] around +x, heading straight at the origin.
/// Draws that put two aircraft within 2 r0 are redrawn (whole set, up to
/// 100 times).
TrafficScenario generate_merge_case(const GeneratorConfig& cfg);

/// Cases are split evenly over `cone_widths_deg` (full widths): case k uses
/// width index k * W / case_count, half-angle = width / 2, and
/// seed case_seed(master_seed, k).
std::vector<TrafficScenario> generate_batch(int case_count,
                                            const std::vector<double>& cone_widths_deg,
                                            const GeneratorConfig& tmpl,
                                            std::uint64_t master_seed);

/// Config used for case `index` of a batch (exposed so a case can be
/// regenerated in isolation).
GeneratorConfig batch_case_config(int case_count, const std::vector<double>& cone_widths_deg,
                                  const GeneratorConfig& tmpl, std::uint64_t master_seed,
                                  int index);

/// Largest |bearing of an aircraft from the merge point|, measured from +x.
double max_arrival_angle(const TrafficScenario& s);  // rad

// ---------------------------------------------------------------------------
// Scenario JSON (degrees and knots at the boundary)

class ScenarioFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string scenario_to_json(const TrafficScenario& s);
/// Parses, converts units, sorts the aircraft and validates. Throws
/// ScenarioFormatError (with line and column for syntax errors) or
/// InvalidScenario.
TrafficScenario scenario_from_json(std::string_view text);

TrafficScenario read_scenario_file(const std::string& path);
void write_scenario_file(const std::string& path, const TrafficScenario& s);

}  // namespace degrade
