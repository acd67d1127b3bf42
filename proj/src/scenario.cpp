#include "degrade/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "degrade/units.hpp"
#include "json.hpp"

namespace degrade {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr int kMaxRedraws = 100;
}  // namespace

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix(state_);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t case_seed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64::mix(master + (index + 1) * kGolden);
}

void GeneratorConfig::validate() const {
  if (aircraft_count < 2) throw std::invalid_argument("aircraft_count must be >= 2");
  if (!(speed_kt > 0.0) || !std::isfinite(speed_kt))
    throw std::invalid_argument("speed_kt must be > 0");
  uncertainty.validate();
  if (!(ring_spacing > 2.0 * uncertainty.r0) || !std::isfinite(ring_spacing))
    throw std::invalid_argument("ring_spacing must exceed 2 r0");
  if (!(cone_half_angle_deg >= 0.0) || !(cone_half_angle_deg < 180.0))
    throw std::invalid_argument("cone_half_angle_deg must lie in [0, 180)");
  if (!(growth_rate(kt_to_nm_per_min(speed_kt), uncertainty) > 0.0))
    throw std::invalid_argument("uncertainty gives zero growth rate");
}

TrafficScenario generate_merge_case(const GeneratorConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  const double half = deg_to_rad(cfg.cone_half_angle_deg);
  const double speed = kt_to_nm_per_min(cfg.speed_kt);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    TrafficScenario s;
    s.uncertainty = cfg.uncertainty;
    s.metadata.cone_half_angle = half;
    s.metadata.seed = cfg.seed;
    for (int k = 1; k <= cfg.aircraft_count; ++k) {
      const double phi = -half + 2.0 * half * rng.uniform();
      const double r = k * cfg.ring_spacing;
      AircraftState a;
      a.id = k;
      a.x = r * std::cos(phi);
      a.y = r * std::sin(phi);
      a.heading = std::atan2(-a.y, -a.x);
      a.speed = speed;
      s.aircraft.push_back(a);
    }
    bool clear = true;
    for (std::size_t i = 0; i < s.aircraft.size() && clear; ++i)
      for (std::size_t j = i + 1; j < s.aircraft.size() && clear; ++j)
        clear = std::hypot(s.aircraft[i].x - s.aircraft[j].x,
                           s.aircraft[i].y - s.aircraft[j].y) > 2.0 * cfg.uncertainty.r0;
    if (!clear) continue;
    sort_aircraft(s.aircraft);
    s.validate();
    return s;
  }
  throw ConflictAtGeneration("no conflict-free draw after 100 attempts (seed " +
                             std::to_string(cfg.seed) + ")");
}

GeneratorConfig batch_case_config(int case_count, const std::vector<double>& cone_widths_deg,
                                  const GeneratorConfig& tmpl, std::uint64_t master_seed,
                                  int index) {
  if (case_count < 1) throw std::invalid_argument("case_count must be >= 1");
  if (cone_widths_deg.empty()) throw std::invalid_argument("at least one cone width required");
  if (index < 0 || index >= case_count) throw std::out_of_range("case index out of range");
  const std::size_t w = static_cast<std::size_t>(index) * cone_widths_deg.size() /
                        static_cast<std::size_t>(case_count);
  GeneratorConfig cfg = tmpl;
  cfg.cone_half_angle_deg = cone_widths_deg[w] / 2.0;
  cfg.seed = case_seed(master_seed, static_cast<std::uint64_t>(index));
  return cfg;
}

std::vector<TrafficScenario> generate_batch(int case_count,
                                            const std::vector<double>& cone_widths_deg,
                                            const GeneratorConfig& tmpl,
                                            std::uint64_t master_seed) {
  std::vector<TrafficScenario> out;
  out.reserve(static_cast<std::size_t>(std::max(case_count, 0)));
  for (int k = 0; k < case_count; ++k) {
    const GeneratorConfig cfg = batch_case_config(case_count, cone_widths_deg, tmpl, master_seed, k);
    TrafficScenario s = generate_merge_case(cfg);
    char label[64];
    std::snprintf(label, sizeof label, "case-%05d cone-%g", k, 2.0 * cfg.cone_half_angle_deg);
    s.metadata.label = label;
    out.push_back(std::move(s));
  }
  return out;
}

double max_arrival_angle(const TrafficScenario& s) {
  double worst = 0.0;
  for (const auto& a : s.aircraft) worst = std::max(worst, std::abs(std::atan2(a.y, a.x)));
  return worst;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

std::string scenario_to_json(const TrafficScenario& s) {
  json j;
  j["aircraft"] = json::array();
  for (const auto& a : s.aircraft) {
    j["aircraft"].push_back({{"id", a.id},
                             {"x_nm", a.x},
                             {"y_nm", a.y},
                             {"heading_deg", rad_to_deg(a.heading)},
                             {"speed_kt", nm_per_min_to_kt(a.speed)}});
  }
  j["uncertainty"] = {{"r0_nm", s.uncertainty.r0},
                      {"rf_nm", s.uncertainty.rf},
                      {"delta_theta_deg", rad_to_deg(s.uncertainty.delta_theta)},
                      {"delta_v_kt", nm_per_min_to_kt(s.uncertainty.delta_v)}};
  j["metadata"] = {{"cone_half_angle_deg", rad_to_deg(s.metadata.cone_half_angle)},
                   {"seed", s.metadata.seed},
                   {"label", s.metadata.label}};
  return j.dump(2) + "\n";
}

namespace {

std::string locate(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double number_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ScenarioFormatError(where + ": missing field '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ScenarioFormatError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

TrafficScenario scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    throw ScenarioFormatError("malformed JSON at " + locate(text, e.byte ? e.byte - 1 : 0));
  }
  if (!j.is_object()) throw ScenarioFormatError("scenario must be a JSON object");
  if (!j.contains("aircraft") || !j["aircraft"].is_array())
    throw ScenarioFormatError("missing array 'aircraft'");
  TrafficScenario s;
  if (!j.contains("uncertainty")) throw ScenarioFormatError("missing object 'uncertainty'");
  const json& u = j["uncertainty"];
  s.uncertainty.r0 = number_field(u, "r0_nm", "uncertainty");
  s.uncertainty.rf = number_field(u, "rf_nm", "uncertainty");
  s.uncertainty.delta_theta = deg_to_rad(number_field(u, "delta_theta_deg", "uncertainty"));
  s.uncertainty.delta_v = kt_to_nm_per_min(number_field(u, "delta_v_kt", "uncertainty"));
  std::size_t k = 0;
  for (const json& a : j["aircraft"]) {
    const std::string where = "aircraft[" + std::to_string(k++) + "]";
    AircraftState st;
    const double id = number_field(a, "id", where);
    if (id != std::floor(id) || std::abs(id) > 1e9)
      throw ScenarioFormatError(where + ": id must be an integer");
    st.id = static_cast<int>(id);
    st.x = number_field(a, "x_nm", where);
    st.y = number_field(a, "y_nm", where);
    const double hd = number_field(a, "heading_deg", where);
    if (hd < -180.0 || hd > 180.0)
      throw InvalidScenario(where + ": heading_deg must lie in [-180, 180]");
    st.heading = deg_to_rad(hd);
    st.speed = kt_to_nm_per_min(number_field(a, "speed_kt", where));
    s.aircraft.push_back(st);
  }
  if (j.contains("metadata")) {
    const json& m = j["metadata"];
    if (!m.is_object()) throw ScenarioFormatError("metadata must be an object");
    if (m.contains("cone_half_angle_deg"))
      s.metadata.cone_half_angle = deg_to_rad(number_field(m, "cone_half_angle_deg", "metadata"));
    if (m.contains("seed")) {
      if (!m["seed"].is_number_unsigned() && !m["seed"].is_number_integer())
        throw ScenarioFormatError("metadata: seed must be a non-negative integer");
      s.metadata.seed = m["seed"].get<std::uint64_t>();
    }
    if (m.contains("label")) {
      if (!m["label"].is_string()) throw ScenarioFormatError("metadata: label must be a string");
      s.metadata.label = m["label"].get<std::string>();
    }
  }
  s.uncertainty.validate();
  sort_aircraft(s.aircraft);
  s.validate();
  return s;
}

TrafficScenario read_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioFormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return scenario_from_json(ss.str());
  } catch (const ScenarioFormatError& e) {
    throw ScenarioFormatError(path + ": " + e.what());
  }
}

void write_scenario_file(const std::string& path, const TrafficScenario& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << scenario_to_json(s);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace degrade
