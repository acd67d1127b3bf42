#include "degrade/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "degrade/units.hpp"

namespace degrade {

void ExperimentParams::validate() const {
  encode.validate();
  milp.validate();
  if (segments < 3) throw std::invalid_argument("segments must be >= 3");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be > 0");
}

namespace {

// The fit depends only on the uncertainty model, speed and segment count,
// which are shared by every case of a batch.
const PwlFit& cached_fit(const UncertaintyModel& u, double speed, int segments) {
  thread_local PwlFit fit;
  thread_local bool valid = false;
  const UncertaintyModel& c = fit.uncertainty;
  if (!valid || fit.speed != speed || static_cast<int>(fit.segments.size()) != segments ||
      c.r0 != u.r0 || c.rf != u.rf || c.delta_theta != u.delta_theta || c.delta_v != u.delta_v) {
    valid = false;
    fit = fit_alpha_pwl(u, speed, segments);
    valid = true;
  }
  return fit;
}

}  // namespace

double group_key(double a) {
  if (a < 5.0) return 5.0;
  const double k = 2.5 * (std::floor(a / 2.5) + 1.0);
  return std::min(k, 30.0);
}

CaseResult run_case(const TrafficScenario& s, const ExperimentParams& params, int case_id) {
  CaseResult r;
  r.case_id = case_id;
  r.seed = s.metadata.seed;
  r.cone_deg = 2.0 * rad_to_deg(s.metadata.cone_half_angle);
  r.max_arrival_deg = rad_to_deg(max_arrival_angle(s));
  r.group_key_deg = group_key(r.max_arrival_deg);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const PwlFit& fit = cached_fit(s.uncertainty, s.aircraft.front().speed, params.segments);
    const MilpModel m = build_milp(s, fit, params.encode);
    const Solution sol = solve_milp(m, params.milp);
    r.status = to_string(sol.status);
    r.nodes = sol.stats.nodes;
    if (sol.has_incumbent) {
      r.objective_rad = sol.objective;
      r.m_s_deg = rad_to_deg(sol.objective) / static_cast<double>(s.aircraft.size());
      r.headings = sol.headings;
      r.oracle_pass = check_solution(s, sol.headings, params.horizon).pass;
    }
  } catch (const std::exception& e) {
    r.status = "Error";
    r.error = e.what();
  }
  r.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<GroupSummary> group_results(const std::vector<CaseResult>& results) {
  if (results.empty()) throw std::invalid_argument("no results to group");
  std::map<double, GroupSummary> by_key;
  for (const auto& r : results) {
    GroupSummary& g = by_key[r.group_key_deg];
    g.key_deg = r.group_key_deg;
    ++g.count;
    if (r.status != "Optimal") continue;
    ++g.optimal;
    g.worst_m_s = std::max(g.worst_m_s, r.m_s_deg);
    g.mean_m_s += r.m_s_deg;
  }
  std::vector<GroupSummary> out;
  for (auto& [key, g] : by_key) {
    if (g.optimal > 0) g.mean_m_s /= g.optimal;
    out.push_back(g);
  }
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string chart_svg(const std::vector<GroupSummary>& groups) {
  const double w = 640, h = 400, left = 70, right = 20, top = 30, bottom = 60;
  double ymax = 1.0;
  for (const auto& g : groups) ymax = std::max(ymax, g.worst_m_s);
  ymax = std::ceil(ymax / 2.0) * 2.0 + 2.0;
  const double xmin = 5.0, xmax = 30.0;
  auto px = [&](double k) { return left + (k - xmin) / (xmax - xmin) * (w - left - right); };
  auto py = [&](double v) { return top + (1.0 - v / ymax) * (h - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\">Worst deviation per group</text>\n";
  // axes
  os << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << w - right << "\" y2=\""
     << py(0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << py(0)
     << "\" stroke=\"black\"/>\n";
  for (double k = 5.0; k <= 30.0 + 1e-9; k += 2.5) {
    os << "<text x=\"" << fmt("%.1f", px(k)) << "\" y=\"" << py(0) + 18
       << "\" text-anchor=\"middle\">" << fmt("%g", k) << "</text>\n";
  }
  for (double v = 0.0; v <= ymax + 1e-9; v += 2.0) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << fmt("%.1f", py(v) + 4)
       << "\" text-anchor=\"end\">" << fmt("%g", v) << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << fmt("%.1f", py(v)) << "\" x2=\"" << w - right
       << "\" y2=\"" << fmt("%.1f", py(v)) << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 15
     << "\" text-anchor=\"middle\">group key k (deg, max arrival angle)</text>\n";
  os << "<text x=\"18\" y=\"" << (top + py(0)) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (top + py(0)) / 2 << ")\">worst m_s (deg)</text>\n";
  std::string pts;
  for (const auto& g : groups) {
    if (g.optimal == 0) continue;
    pts += fmt("%.1f", px(g.key_deg)) + "," + fmt("%.1f", py(g.worst_m_s)) + " ";
  }
  if (!pts.empty()) {
    pts.pop_back();
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
  }
  for (const auto& g : groups) {
    if (g.optimal == 0) continue;
    os << "<circle cx=\"" << fmt("%.1f", px(g.key_deg)) << "\" cy=\"" << fmt("%.1f", py(g.worst_m_s))
       << "\" r=\"3\" fill=\"#1f5fa8\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

Report summarize(const std::vector<GroupSummary>& groups) {
  Report rep;
  rep.csv = "group_key_deg,count,worst_m_s_deg,mean_m_s_deg\n";
  std::vector<const GroupSummary*> populated;
  for (const auto& g : groups) {
    rep.csv += fmt("%g", g.key_deg) + "," + std::to_string(g.count) + "," +
               fmt("%.6f", g.worst_m_s) + "," + fmt("%.6f", g.mean_m_s) + "\n";
    if (g.optimal > 0) populated.push_back(&g);
  }
  if (populated.size() >= 2 && populated.front()->worst_m_s > 0.0)
    rep.increase = (populated.back()->worst_m_s - populated.front()->worst_m_s) /
                   populated.front()->worst_m_s;
  rep.svg = chart_svg(groups);
  return rep;
}

namespace {

const char* kResultsHeader =
    "case_id,seed,cone_deg,max_arrival_deg,group_key_deg,m_s_deg,objective_rad,status,solve_ms,"
    "nodes,oracle_pass";

}  // namespace

std::string results_csv(const std::vector<CaseResult>& results, bool omit_timing) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : results) {
    out += std::to_string(r.case_id) + "," + std::to_string(r.seed) + "," + fmt("%g", r.cone_deg) +
           "," + fmt("%.6f", r.max_arrival_deg) + "," + fmt("%g", r.group_key_deg) + "," +
           fmt("%.6f", r.m_s_deg) + "," + fmt("%.9f", r.objective_rad) + "," + r.status + "," +
           (omit_timing ? std::string() : fmt("%.1f", r.solve_ms)) + "," +
           std::to_string(r.nodes) + "," + (r.oracle_pass ? "true" : "false") + "\n";
  }
  return out;
}

std::vector<CaseResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw std::runtime_error("results CSV: unexpected header");
  std::vector<CaseResult> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 11)
      throw std::runtime_error("results CSV line " + std::to_string(lineno) + ": expected 11 fields");
    try {
      CaseResult r;
      r.case_id = std::stoi(f[0]);
      r.seed = std::stoull(f[1]);
      r.cone_deg = std::stod(f[2]);
      r.max_arrival_deg = std::stod(f[3]);
      r.group_key_deg = std::stod(f[4]);
      r.m_s_deg = std::stod(f[5]);
      r.objective_rad = std::stod(f[6]);
      r.status = f[7];
      r.solve_ms = f[8].empty() ? 0.0 : std::stod(f[8]);
      r.nodes = std::stoll(f[9]);
      if (f[10] != "true" && f[10] != "false") throw std::invalid_argument("oracle_pass");
      r.oracle_pass = f[10] == "true";
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("results CSV line " + std::to_string(lineno) + ": bad field");
    }
  }
  return out;
}

int default_jobs() {
  if (const char* env = std::getenv("DEGRADE_CR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<CaseResult> run_batch(const std::vector<TrafficScenario>& scenarios,
                                  const ExperimentParams& params, int jobs,
                                  const std::function<void(int, const CaseResult&)>& progress) {
  params.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  std::vector<CaseResult> out(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  int done = 0;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= scenarios.size()) return;
      out[k] = run_case(scenarios[k], params, static_cast<int>(k));
      if (progress) {
        std::lock_guard<std::mutex> lock(mu);
        progress(++done, out[k]);
      }
    }
  };
  const int n = std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(scenarios.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace degrade
