#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "degrade/cli.hpp"
#include "degrade/experiment.hpp"

using namespace degrade;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "degrade_cr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("degrade_cr_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

const char* kHeadOn = R"({"aircraft": [
  {"id": 1, "x_nm": 0, "y_nm": 0, "heading_deg": 0, "speed_kt": 200},
  {"id": 2, "x_nm": 20, "y_nm": 0, "heading_deg": 180, "speed_kt": 200}],
  "uncertainty": {"r0_nm": 1.5, "rf_nm": 2.5, "delta_theta_deg": 5, "delta_v_kt": 0}})";

}  // namespace

TEST_CASE("cli: generate, resolve, verify, export-lp") {
  TempDir dir;
  const std::string scen = dir / "s.json", sol = dir / "sol.json", lp = dir / "m.lp";
  CHECK(cli({"generate", "--cone-deg", "20", "--seed", "3", "-o", scen}).code == kExitOk);
  REQUIRE(fs::exists(scen));

  const Run r = cli({"resolve", scen, "-o", sol});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("status Optimal") != std::string::npos);
  CHECK(r.out.find("separation over 60 min: pass") != std::string::npos);
  REQUIRE(fs::exists(sol));

  CHECK(cli({"verify", scen, "--solution", sol}).code == kExitOk);
  CHECK(cli({"export-lp", scen, "-o", lp}).code == kExitOk);
  CHECK(fs::file_size(lp) > 0);
}

TEST_CASE("cli: exit codes") {
  TempDir dir;
  const std::string head_on = dir / "h.json";
  write(head_on, kHeadOn);

  SUBCASE("help") { CHECK(cli({"--help"}).code == kExitOk); }
  SUBCASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"generate", "--cone-deg", "-1", "-o", dir / "x.json"}).code == kExitUsage);
    const Run spacing = cli({"generate", "--spacing-nm", "2", "-o", dir / "x.json"});
    CHECK(spacing.code == kExitUsage);
    CHECK(spacing.err.find("--spacing-nm") != std::string::npos);
    write(dir / "bad.json", "{\"aircraft\": [");
    const Run bad = cli({"resolve", dir / "bad.json"});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("line") != std::string::npos);
    CHECK(cli({"resolve", dir / "missing.json"}).code == kExitUsage);
    CHECK(cli({"resolve", head_on, "--time-limit-s", "0"}).code == kExitUsage);
  }
  SUBCASE("infeasible") {
    CHECK(cli({"resolve", head_on, "--max-deviation-deg", "1"}).code == kExitInfeasible);
  }
  SUBCASE("time limit") {
    const std::string scen = dir / "s.json";
    REQUIRE(cli({"generate", "--cone-deg", "60", "--seed", "11", "-o", scen}).code == kExitOk);
    CHECK(cli({"resolve", scen, "--time-limit-s", "1e-9"}).code == kExitTimeLimit);
  }
  SUBCASE("oracle failure") {
    CHECK(cli({"verify", head_on, "--headings-deg", "0,180"}).code == kExitOracle);
    CHECK(cli({"verify", head_on, "--headings-deg", "0"}).code == kExitUsage);
  }
}

TEST_CASE("cli: batch and report") {
  TempDir dir;
  const std::string out = dir / "run";
  const Run b = cli({"batch", "--batch", "4", "--cones", "10,40", "--jobs", "1", "-o", out,
                     "--omit-timing", "-q"});
  CHECK(b.code == kExitOk);
  for (const char* f : {"results.csv", "summary.csv", "summary.svg"})
    CHECK(fs::exists(fs::path(out) / f));
  std::ifstream in(fs::path(out) / "results.csv");
  std::stringstream text;
  text << in.rdbuf();
  const auto results = parse_results_csv(text.str());
  CHECK(results.size() == 4);

  const std::string again = dir / "again";
  CHECK(cli({"report", (fs::path(out) / "results.csv").string(), "-o", again}).code == kExitOk);
  std::ifstream s1(fs::path(out) / "summary.csv"), s2(fs::path(again) / "summary.csv");
  std::stringstream t1, t2;
  t1 << s1.rdbuf();
  t2 << s2.rdbuf();
  CHECK(t1.str() == t2.str());

  const std::string gen = dir / "gen";
  CHECK(cli({"generate", "--batch", "6", "--cones", "10,20,30", "-o", gen}).code == kExitOk);
  CHECK(std::distance(fs::directory_iterator(gen), fs::directory_iterator{}) == 6);
}
