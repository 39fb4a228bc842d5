#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "shockexp/cli.hpp"
#include "specs.hpp"

using namespace shockexp;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "shockexp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shockexp_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Decoupled config with one field replaced.
fs::path variant(const fs::path& dir, const std::string& key, const std::string& value) {
  auto j = nlohmann::json::parse(slurp(config_path("decoupled.json")));
  j[key] = value;
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

} // namespace

TEST_CASE("usage errors exit with 4") {
  const fs::path out = scratch("usage");
  CHECK(run({"sweep", config_path("decoupled.json"), "--eps", "0.1", "--out", out.string()}) == kExitUsage);
  CHECK(run({"sweep", config_path("decoupled.json"), "--eps", "0.1,0.2,0.05", "--out", out.string()}) ==
        kExitUsage);
  CHECK(run({"solve", (out / "missing.json").string()}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({}) == kExitUsage);
  CHECK(run({"compare", config_path("decoupled.json"), "--eps", "0.05", "--oracle", "magic", "--out",
             out.string()}) == kExitUsage);
}

TEST_CASE("failing validation exits with 2") {
  const fs::path out = scratch("invalid");
  const fs::path cfg = variant(out, "mu", "2*u+v");
  CHECK(run({"validate", cfg.string(), "--out", out.string()}) == kExitValidation);
  const auto report = nlohmann::json::parse(slurp(out / "validation.json"));
  CHECK(report["checks"]["compat_Psi_v"]["status"] == "fail");
  CHECK(run({"solve", cfg.string(), "--out", out.string()}) == kExitValidation);
  CHECK(run({"compare", cfg.string(), "--eps", "0.05", "--out", out.string()}) == kExitValidation);

  std::ofstream(out / "broken.json") << "{ not json";
  CHECK(run({"validate", (out / "broken.json").string(), "--out", out.string()}) == kExitValidation);
  const fs::path bad_expr = variant(out, "f", "-u+");
  CHECK(run({"solve", bad_expr.string(), "--out", out.string()}) == kExitValidation);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["subcommand"] == "solve");
  CHECK(manifest["exit_status"] == kExitValidation);
}

TEST_CASE("numerical failures exit with 3") {
  const fs::path out = scratch("numerical");
  // v recovery fails once the right state leaves Phi's range.
  auto j = nlohmann::json::parse(slurp(config_path("coupled.json")));
  j["numerics"]["fv_cells"] = 256;
  j["f"] = "0";
  j["g"] = "-5*v";
  const fs::path cfg = out / "config.json";
  std::ofstream(cfg) << j.dump(2);
  CHECK(run({"reference", cfg.string(), "--eps", "1", "--out", out.string()}) == kExitNumerical);
}

TEST_CASE("validate and solve write their outputs") {
  const fs::path out = scratch("solve");
  CHECK(run({"validate", config_path("decoupled.json"), "--out", out.string()}) == kExitOk);
  CHECK(fs::exists(out / "validation.json"));
  CHECK(run({"solve", config_path("decoupled.json"), "--dt", "1e-3", "--out", out.string()}) == kExitOk);
  for (const char* f : {"shocks.csv", "fields.csv", "solve.json", "manifest.json"}) CHECK(fs::exists(out / f));
  const auto j = nlohmann::json::parse(slurp(out / "solve.json"));
  CHECK(j["s1_minus_T"].get<double>() == doctest::Approx(-0.0625).epsilon(1e-6));
  CHECK(j["s1_plus_T"].get<double>() == doctest::Approx(-0.3125).epsilon(1e-6));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["overrides"]["dt"].get<double>() == 1e-3);
  for (const auto& e : fs::directory_iterator(out))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("reruns produce identical CSV") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  CHECK(run({"solve", config_path("decoupled.json"), "--dt", "2e-3", "--out", a.string()}) == kExitOk);
  CHECK(run({"solve", config_path("decoupled.json"), "--dt", "2e-3", "--out", b.string()}) == kExitOk);
  CHECK(slurp(a / "shocks.csv") == slurp(b / "shocks.csv"));
  CHECK(slurp(a / "fields.csv") == slurp(b / "fields.csv"));
}

TEST_CASE("reference subcommand") {
  const fs::path out = scratch("reference");
  CHECK(run({"reference", config_path("decoupled.json"), "--cells", "1024", "--out", out.string()}) ==
        kExitOk);
  CHECK(fs::exists(out / "reference_000.csv"));
  CHECK(fs::exists(out / "extraction.csv"));
}

TEST_CASE("compare against the damped exact solution") {
  const fs::path out = scratch("compare_exact");
  CHECK(run({"compare", config_path("decoupled.json"), "--eps", "0.05", "--oracle", "damped-exact",
             "--dt", "1e-3", "--out", out.string()}) == kExitOk);
  const auto j = nlohmann::json::parse(slurp(out / "compare.json"));
  CHECK(j["status"] == "pass");
  CHECK(fs::exists(out / "comparison.csv"));
  // The damped oracle needs f = -u and g = -v.
  const fs::path cfg = variant(out, "f", "0");
  CHECK(run({"compare", cfg.string(), "--eps", "0.05", "--oracle", "damped-exact", "--out",
             out.string()}) == kExitValidation);
}

TEST_CASE("finite-volume compare on the decoupled example") {
  const ProblemSpec spec = load_spec_file(config_path("decoupled.json"));
  CompareOptions o;
  o.eps = 0.05;
  o.cells = 2048;
  const CompareReport r = run_compare(spec, nullptr, o);
  CHECK(r.passed);
  CHECK(r.e_minus <= std::max(2 * r.grid_error_estimate, 0.05 * 0.05));
  CHECK(r.rows.size() == static_cast<std::size_t>(spec.numerics.fv_outputs));
}

TEST_CASE("zero sources: reference shocks match the leading order") {
  SpecText t = decoupled_text();
  t.f = "0";
  t.g = "0";
  t.numerics.fv_cells = 1024;
  const ProblemSpec spec = make_spec(t);
  CompareOptions o;
  o.eps = 0.1;
  o.baseline = false;
  const CompareReport r = run_compare(spec, nullptr, o);
  const double dx = spec.numerics.fv_domain.width() / 1024;
  for (const auto& row : r.rows) {
    CHECK(std::abs(row.s_minus - 0.5 * row.t) <= 1e-12);
    CHECK(std::abs(row.x_minus - row.s_minus) <= 2 * dx);
    CHECK(std::abs(row.x_plus - row.s_plus) <= 2 * dx);
  }
}

TEST_CASE("exact-oracle sweep has slope two") {
  SpecText t = decoupled_text();
  t.numerics.dt = 1e-3;
  const ProblemSpec spec = make_spec(t);
  CompareOptions o;
  o.oracle = Oracle::DampedExact;
  const SweepReport r = sweep_epsilon(spec, {0.1, 0.05, 0.025}, o);
  CHECK(r.slope >= 1.95);
  CHECK(r.slope <= 2.05);
  CHECK(r.ratios.size() == 2);
  CHECK_THROWS_AS(sweep_epsilon(spec, {0.1}, o), std::invalid_argument);
  CHECK_THROWS_AS(sweep_epsilon(spec, {0.1, 0.2, 0.05}, o), std::invalid_argument);
}

TEST_CASE("damped exact positions") {
  CHECK(damped_exact_position(0.5, 0.05, 0.5) == doctest::Approx(0.5 * (1 - std::exp(-0.025)) / 0.05));
  CHECK(damped_exact_position(2.5, 1e-12, 2.0) == doctest::Approx(5.0));
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}) == doctest::Approx(2.0));
  CHECK(std::isnan(loglog_slope({0.1}, {1.0})));
}

TEST_CASE("atomic file write") {
  const fs::path dir = scratch("atomic");
  const fs::path p = dir / "nested" / "a.txt";
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  CHECK(slurp(p) == "second");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
}
