#include "degrade/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "degrade/encode.hpp"
#include "degrade/experiment.hpp"
#include "degrade/milp_solver.hpp"
#include "degrade/scenario.hpp"
#include "degrade/units.hpp"
#include "degrade/verify.hpp"
#include "json.hpp"

namespace degrade {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raised for bad flag combinations and unreadable inputs; maps to exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenFlags {
  int n = 8;
  double spacing_nm = 3.5;
  double speed_kt = 200.0;
  double r0_nm = 1.5;
  double rf_nm = 2.5;
  double delta_theta_deg = 5.0;
  double delta_v_kt = 0.0;
  std::uint64_t seed = 7;

  GeneratorConfig config() const {
    GeneratorConfig c;
    c.aircraft_count = n;
    c.ring_spacing = spacing_nm;
    c.speed_kt = speed_kt;
    c.uncertainty = {r0_nm, rf_nm, deg_to_rad(delta_theta_deg), kt_to_nm_per_min(delta_v_kt)};
    c.seed = seed;
    return c;
  }
};

void add_gen_flags(CLI::App* app, GenFlags& g) {
  app->add_option("--n", g.n, "Aircraft per scenario")->check(CLI::Range(2, 64))->capture_default_str();
  app->add_option("--spacing-nm", g.spacing_nm, "Ring spacing (NM), must exceed 2 r0")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--speed-kt", g.speed_kt, "Ground speed of every aircraft (kt)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--r0-nm", g.r0_nm, "Initial avoidance radius (NM)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--rf-nm", g.rf_nm, "Final avoidance radius (NM), must exceed r0")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--delta-theta-deg", g.delta_theta_deg, "Heading uncertainty (deg)")
      ->check(CLI::Range(0.0, 90.0))->capture_default_str();
  app->add_option("--delta-v-kt", g.delta_v_kt, "Speed uncertainty (kt)")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--seed", g.seed, "Seed (master seed for batches)")->capture_default_str();
}

struct SolveFlags {
  double big_m = 50.0;
  double eps_rad = 1e-4;
  double max_deviation_deg = 90.0;
  int segments = kDefaultSegmentCount;
  double gap_tol = 1e-6;
  double time_limit_s = 120.0;
  double horizon_min = kDefaultHorizon;

  ExperimentParams params() const {
    ExperimentParams p;
    p.encode.big_m = big_m;
    p.encode.eps = eps_rad;
    p.encode.max_deviation = deg_to_rad(max_deviation_deg);
    p.segments = segments;
    p.milp.gap_tol = gap_tol;
    p.milp.time_limit_s = time_limit_s;
    p.horizon = horizon_min;
    return p;
  }
};

void add_encode_flags(CLI::App* app, SolveFlags& s) {
  app->add_option("--big-m", s.big_m, "Big-M constant (rad), must exceed 4 pi")
      ->check(CLI::Range(4.0 * kPi + 1e-9, 1e6))->capture_default_str();
  app->add_option("--eps-rad", s.eps_rad, "Strict-inequality margin (rad), in (0, 0.1)")
      ->check(CLI::Range(1e-12, 0.1))->capture_default_str();
  app->add_option("--max-deviation-deg", s.max_deviation_deg, "Largest heading change (deg), in (0, 180]")
      ->check(CLI::Range(1e-9, 180.0))->capture_default_str();
  app->add_option("--segments", s.segments, "Segments of the cone-width fit")
      ->check(CLI::Range(3, 64))->capture_default_str();
}

void add_solve_flags(CLI::App* app, SolveFlags& s) {
  add_encode_flags(app, s);
  app->add_option("--gap-tol", s.gap_tol, "Absolute optimality gap (rad)")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--time-limit-s", s.time_limit_s, "Wall-clock limit per solve (s)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--horizon-min", s.horizon_min, "Separation check horizon (min)")
      ->check(CLI::PositiveNumber)->capture_default_str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw std::runtime_error("cannot write " + path);
}

// Module validation speaks in field names; the user typed flags.
std::string with_flag(const std::string& msg) {
  static const std::pair<const char*, const char*> kFlags[] = {
      {"ring_spacing", "--spacing-nm"},  {"r0 < rf", "--r0-nm/--rf-nm"},
      {"delta_theta", "--delta-theta-deg"}, {"delta_v", "--delta-v-kt"},
      {"growth rate", "--delta-theta-deg/--delta-v-kt"}, {"aircraft_count", "--n"},
      {"speed", "--speed-kt"},           {"cone", "--cone-deg/--cones"},
      {"case_count", "--batch"},         {"max_deviation", "--max-deviation-deg"},
      {"eps", "--eps-rad"},              {"big_m", "--big-m"},
      {"segment", "--segments"},         {"gap_tol", "--gap-tol"},
      {"time_limit", "--time-limit-s"},  {"horizon", "--horizon-min"}};
  for (const auto& [key, flag] : kFlags)
    if (msg.find(key) != std::string::npos) return std::string(flag) + ": " + msg;
  return msg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Scenario-frame deviation in (-pi, pi].
double deviation(double heading, double initial) { return wrap_angle(heading - initial); }

void print_report(std::ostream& out, const SeparationReport& rep) {
  out << "pair      margin_nm   t_min  families\n";
  for (const auto& p : rep.pairs) {
    std::string fam;
    for (int f = 0; f < 3; ++f)
      if (p.families[f]) fam += (fam.empty() ? "" : ",") + std::to_string(f + 1);
    char line[128];
    std::snprintf(line, sizeof line, "%3d-%-3d %11.6f %7.3f  %s%s\n", p.id_i, p.id_j, p.margin,
                  p.t_min, fam.empty() ? "-" : fam.c_str(), p.pass ? "" : "  FAIL");
    out << line;
  }
  out << "separation over " << rep.horizon << " min: " << (rep.pass ? "pass" : "FAIL")
      << " (worst margin " << fmt("%.6f", rep.worst_margin()) << " NM)\n";
}

// --------------------------------------------------------------------------

int cmd_generate(std::ostream& out, GenFlags& g, double cone_deg, int batch,
                 const std::vector<double>& cones, const std::string& output) {
  if (output.empty()) throw UsageError("--output is required");
  GeneratorConfig cfg = g.config();
  if (batch == 0) {
    cfg.cone_half_angle_deg = cone_deg / 2.0;
    cfg.validate();
    TrafficScenario s = generate_merge_case(cfg);
    s.metadata.label = "cone-" + fmt("%g", cone_deg) + " seed-" + std::to_string(g.seed);
    write_file(output, scenario_to_json(s));
    out << "wrote " << output << ": " << s.aircraft.size() << " aircraft, cone " << cone_deg
        << " deg, max arrival " << fmt("%.3f", rad_to_deg(max_arrival_angle(s))) << " deg\n";
    return kExitOk;
  }
  cfg.validate();
  const auto cases = generate_batch(batch, cones, cfg, g.seed);
  fs::create_directories(output);
  for (std::size_t k = 0; k < cases.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "case-%05zu.json", k);
    write_file((fs::path(output) / name).string(), scenario_to_json(cases[k]));
  }
  out << "wrote " << cases.size() << " scenarios to " << output << "\n";
  return kExitOk;
}

int cmd_resolve(std::ostream& out, const std::string& input, const SolveFlags& sf,
                const std::string& output, const std::string& lp_path) {
  const TrafficScenario s = read_scenario_file(input);
  const ExperimentParams p = sf.params();
  p.validate();
  const PwlFit fit = fit_alpha_pwl(s.uncertainty, s.aircraft.front().speed, p.segments);
  const MilpModel m = build_milp(s, fit, p.encode);
  if (!lp_path.empty()) write_file(lp_path, export_lp(m));
  const Solution sol = solve_milp(m, p.milp);

  out << "status " << to_string(sol.status) << ", " << sol.stats.nodes << " nodes, "
      << fmt("%.1f", sol.stats.wall_ms) << " ms\n";
  json j;
  j["status"] = to_string(sol.status);
  j["nodes"] = sol.stats.nodes;
  if (!sol.has_incumbent) {
    if (!output.empty()) write_file(output, j.dump(2) + "\n");
    return sol.status == SolveStatus::Infeasible ? kExitInfeasible : kExitTimeLimit;
  }
  const SeparationReport rep = check_solution(s, sol.headings, p.horizon);
  out << "objective " << fmt("%.6f", sol.objective) << " rad ("
      << fmt("%.3f", rad_to_deg(sol.objective)) << " deg), m_s "
      << fmt("%.3f", rad_to_deg(sol.objective) / s.aircraft.size()) << " deg\n";
  out << "id  initial_deg  resolved_deg  change_deg\n";
  j["objective_rad"] = sol.objective;
  j["aircraft"] = json::array();
  for (std::size_t k = 0; k < s.aircraft.size(); ++k) {
    const double h0 = s.aircraft[k].heading, h = wrap_angle(sol.headings[k]);
    const double d = deviation(h, h0);
    char line[96];
    std::snprintf(line, sizeof line, "%-3d %11.4f %13.4f %11.4f\n", s.aircraft[k].id,
                  rad_to_deg(h0), rad_to_deg(h), rad_to_deg(d));
    out << line;
    j["aircraft"].push_back({{"id", s.aircraft[k].id},
                             {"initial_heading_deg", rad_to_deg(h0)},
                             {"heading_deg", rad_to_deg(h)},
                             {"change_deg", rad_to_deg(d)}});
  }
  print_report(out, rep);
  j["oracle_pass"] = rep.pass;
  j["worst_margin_nm"] = rep.worst_margin();
  if (!output.empty()) {
    write_file(output, j.dump(2) + "\n");
    out << "wrote " << output << "\n";
  }
  if (sol.status == SolveStatus::TimeLimit) return kExitTimeLimit;
  return rep.pass ? kExitOk : kExitOracle;
}

std::vector<double> headings_from_solution(const std::string& path, const TrafficScenario& s) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": malformed JSON (" + std::string(e.what()) + ")");
  }
  if (!j.contains("aircraft") || !j["aircraft"].is_array())
    throw UsageError(path + ": missing array 'aircraft'");
  std::map<int, double> by_id;
  for (const auto& a : j["aircraft"]) {
    if (!a.contains("id") || !a.contains("heading_deg") || !a["heading_deg"].is_number())
      throw UsageError(path + ": aircraft entries need 'id' and 'heading_deg'");
    by_id[a["id"].get<int>()] = deg_to_rad(a["heading_deg"].get<double>());
  }
  std::vector<double> h;
  for (const auto& a : s.aircraft) {
    auto it = by_id.find(a.id);
    if (it == by_id.end()) throw UsageError(path + ": no heading for aircraft " + std::to_string(a.id));
    h.push_back(it->second);
  }
  return h;
}

int cmd_verify(std::ostream& out, const std::string& input, const std::string& solution,
               const std::vector<double>& headings_deg, double horizon) {
  const TrafficScenario s = read_scenario_file(input);
  std::vector<double> h;
  if (!solution.empty() && !headings_deg.empty())
    throw UsageError("--solution and --headings-deg are exclusive");
  if (!solution.empty()) {
    h = headings_from_solution(solution, s);
  } else if (!headings_deg.empty()) {
    if (headings_deg.size() != s.aircraft.size())
      throw UsageError("--headings-deg needs " + std::to_string(s.aircraft.size()) + " values");
    for (double d : headings_deg) h.push_back(deg_to_rad(d));
  } else {
    for (const auto& a : s.aircraft) h.push_back(a.heading);
  }
  const SeparationReport rep = check_solution(s, h, horizon);
  print_report(out, rep);
  return rep.pass ? kExitOk : kExitOracle;
}

void write_summary(std::ostream& out, const std::vector<CaseResult>& results,
                   const std::string& dir) {
  const auto groups = group_results(results);
  const Report rep = summarize(groups);
  out << "group  cases  optimal  worst_m_s  mean_m_s\n";
  for (const auto& g : groups) {
    char line[96];
    std::snprintf(line, sizeof line, "%5g %6d %8d %10.3f %9.3f\n", g.key_deg, g.count, g.optimal,
                  g.worst_m_s, g.mean_m_s);
    out << line;
  }
  out << "increase of worst m_s from first to last group: " << fmt("%.1f", 100.0 * rep.increase)
      << "%\n";
  if (!dir.empty()) {
    write_file((fs::path(dir) / "summary.csv").string(), rep.csv);
    write_file((fs::path(dir) / "summary.svg").string(), rep.svg);
    out << "wrote " << (fs::path(dir) / "summary.csv").string() << " and summary.svg\n";
  }
}

int cmd_batch(std::ostream& out, std::ostream& err, GenFlags& g, const SolveFlags& sf, int batch,
              const std::vector<double>& cones, int jobs, const std::string& dir,
              bool omit_timing, bool quiet) {
  if (dir.empty()) throw UsageError("--output is required");
  if (batch < 1) throw UsageError("--batch must be >= 1");
  const ExperimentParams p = sf.params();
  p.validate();
  GeneratorConfig cfg = g.config();
  cfg.validate();
  const auto cases = generate_batch(batch, cones, cfg, g.seed);
  const int n = static_cast<int>(cases.size());
  const auto results = run_batch(cases, p, jobs, [&](int done, const CaseResult& r) {
    if (quiet) return;
    if (done % 50 == 0 || done == n || r.status != "Optimal" || (r.status == "Optimal" && !r.oracle_pass))
      err << "[" << done << "/" << n << "] case " << r.case_id << " " << r.status
          << (r.status == "Optimal" && !r.oracle_pass ? " ORACLE FAIL" : "") << "\n";
  });
  fs::create_directories(dir);
  write_file((fs::path(dir) / "results.csv").string(), results_csv(results, omit_timing));
  out << "wrote " << (fs::path(dir) / "results.csv").string() << " (" << results.size()
      << " cases)\n";
  int optimal = 0, failed = 0, limit = 0, other = 0;
  for (const auto& r : results) {
    if (r.status == "Optimal") {
      ++optimal;
      if (!r.oracle_pass) ++failed;
    } else if (r.status == "TimeLimit") {
      ++limit;
    } else {
      ++other;
    }
  }
  out << optimal << " optimal, " << limit << " time limit, " << other << " other; " << failed
      << " optimal cases failed the separation check\n";
  write_summary(out, results, dir);
  return failed > 0 ? kExitOracle : kExitOk;
}

int cmd_report(std::ostream& out, const std::string& input, const std::string& dir) {
  std::vector<CaseResult> results;
  try {
    results = parse_results_csv(read_file(input));
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const UsageError*>(&e)) throw;
    throw UsageError(input + ": " + e.what());
  }
  if (results.empty()) throw UsageError(input + ": no cases");
  write_summary(out, results, dir);
  return kExitOk;
}

int cmd_export_lp(std::ostream& out, const std::string& input, const SolveFlags& sf,
                  const std::string& output) {
  const TrafficScenario s = read_scenario_file(input);
  const ExperimentParams p = sf.params();
  p.encode.validate();
  const PwlFit fit = fit_alpha_pwl(s.uncertainty, s.aircraft.front().speed, p.segments);
  const std::string text = export_lp(build_milp(s, fit, p.encode));
  if (output.empty() || output == "-") {
    out << text;
  } else {
    write_file(output, text);
    out << "wrote " << output << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conflict resolution under growing position uncertainty"};
  app.name("degrade_cr");
  app.require_subcommand(1);

  GenFlags gen;
  SolveFlags solve;
  std::string input, output, lp_path, solution;
  double cone_deg = 0.0;
  int batch = 0;
  std::vector<double> cones = {10, 20, 30, 40, 50, 60};
  std::vector<double> headings_deg;
  int jobs = default_jobs();
  bool omit_timing = false, quiet = false;

  auto* g = app.add_subcommand("generate", "Write one merge scenario, or a batch of them");
  add_gen_flags(g, gen);
  g->add_option("--cone-deg", cone_deg, "Full arrival cone width (deg), in [0, 360)")
      ->check(CLI::Range(0.0, 359.999999))->capture_default_str();
  g->add_option("--batch", batch, "Number of scenarios; writes a directory when > 0")
      ->check(CLI::NonNegativeNumber);
  g->add_option("--cones", cones, "Full cone widths (deg) shared evenly by a batch")
      ->delimiter(',')->check(CLI::Range(0.0, 359.999999));
  g->add_option("-o,--output", output, "Scenario file, or directory with --batch")->required();

  auto* r = app.add_subcommand("resolve", "Solve one scenario and check the result");
  r->add_option("input", input, "Scenario JSON")->required();
  add_solve_flags(r, solve);
  r->add_option("-o,--output", output, "Resolved headings JSON");
  r->add_option("--export-lp", lp_path, "Also write the model in LP format");

  auto* v = app.add_subcommand("verify", "Check the separation of given headings");
  v->add_option("input", input, "Scenario JSON")->required();
  v->add_option("--solution", solution, "Headings JSON written by resolve");
  v->add_option("--headings-deg", headings_deg, "Headings (deg) in scenario order")->delimiter(',');
  v->add_option("--horizon-min", solve.horizon_min, "Separation check horizon (min)")
      ->check(CLI::PositiveNumber)->capture_default_str();

  auto* b = app.add_subcommand("batch", "Run the arrival-cone experiment");
  add_gen_flags(b, gen);
  add_solve_flags(b, solve);
  batch = 1650;
  b->add_option("--batch", batch, "Number of cases")->capture_default_str();
  b->add_option("--cones", cones, "Full cone widths (deg) shared evenly by the cases")
      ->delimiter(',')->check(CLI::Range(0.0, 359.999999));
  b->add_option("--jobs", jobs, "Parallel workers (default DEGRADE_CR_THREADS or all cores)")
      ->check(CLI::Range(1, 1024));
  b->add_option("-o,--output", output, "Directory for results.csv, summary.csv, summary.svg")
      ->required();
  b->add_flag("--omit-timing", omit_timing, "Leave solve_ms blank so reruns compare byte for byte");
  b->add_flag("-q,--quiet", quiet, "No progress lines");

  auto* rp = app.add_subcommand("report", "Summarise a results CSV by arrival-angle group");
  rp->add_option("input", input, "results.csv written by batch")->required();
  rp->add_option("-o,--output", output, "Directory for summary.csv and summary.svg");

  auto* e = app.add_subcommand("export-lp", "Write the encoded model in LP format");
  e->add_option("input", input, "Scenario JSON")->required();
  add_encode_flags(e, solve);
  e->add_option("-o,--output", output, "LP file (stdout when omitted)");

  // generate's --batch defaults to 0 while batch's defaults to 1650.
  g->preparse_callback([&](std::size_t) { batch = 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(g)) return cmd_generate(out, gen, cone_deg, batch, cones, output);
    if (app.got_subcommand(r)) return cmd_resolve(out, input, solve, output, lp_path);
    if (app.got_subcommand(v)) return cmd_verify(out, input, solution, headings_deg, solve.horizon_min);
    if (app.got_subcommand(b))
      return cmd_batch(out, err, gen, solve, batch, cones, jobs, output, omit_timing, quiet);
    if (app.got_subcommand(rp)) return cmd_report(out, input, output);
    if (app.got_subcommand(e)) return cmd_export_lp(out, input, solve, output);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ScenarioFormatError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const InvalidScenario& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << with_flag(ex.what()) << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace degrade
