#include "shockexp/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <unistd.h>

namespace shockexp {

using json = nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_row(std::initializer_list<double> values) {
  std::string out;
  char buf[40];
  bool first = true;
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out += ',';
    out += buf;
    first = false;
  }
  out += '\n';
  return out;
}

/// Shock positions from the reference solver at every output time.
std::vector<ShockPositions> reference_positions(const ProblemSpec& spec, double eps, int cells,
                                                int far_cells) {
  ReferenceOptions opt;
  opt.cells = cells;
  const GridSolution sol = run_reference(spec, eps, opt);
  std::vector<ShockPositions> out;
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    out.push_back(extract_shocks(sol, static_cast<int>(k), far_cells));
  return out;
}

void require_damped(const ProblemSpec& spec) {
  const auto& c = spec.coeff;
  const auto& ini = spec.initial;
  const bool constant = ini.u_left.value.is_constant() && ini.u_right.value.is_constant() &&
                        ini.v_left.value.is_constant() && ini.v_right.value.is_constant();
  bool damped = true;
  for (double u : {-1.3, 0.2, 0.7, 2.1})
    for (double v : {-0.4, 0.9, 3.3})
      damped = damped && c.f(u, v) == -u && c.g(u, v) == -v;
  if (!constant || !damped)
    throw SpecError("the damped-exact oracle needs f = -u, g = -v and constant initial states");
}

// Oracle positions for one member; null entries are runs that were skipped.
struct MemberRuns {
  const std::vector<ShockPositions>* fine = nullptr;
  const std::vector<ShockPositions>* coarse = nullptr;
  const std::vector<ShockPositions>* fine_base = nullptr;
  const std::vector<ShockPositions>* coarse_base = nullptr;
};

CompareReport assemble(const ProblemSpec& spec, const ExpansionData& data, const CompareOptions& o,
                       const std::vector<double>& times, const MemberRuns& runs) {
  auto view = std::shared_ptr<const ExpansionData>(&data, [](const ExpansionData*) {});
  const AsymptoticSolution sol(view, o.eps);
  const AsymptoticSolution lead(view, 0.0);
  CompareReport r;
  r.eps = o.eps;
  r.cells = o.oracle == Oracle::FiniteVolume ? (o.cells > 0 ? o.cells : spec.numerics.fv_cells) : 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    ComparisonRow row;
    row.t = times[k];
    const double s0m = lead.shock_position(Side::Minus, row.t);
    const double s0p = lead.shock_position(Side::Plus, row.t);
    auto bias = [&](const std::vector<ShockPositions>* b) -> ShockPositions {
      if (!b) return {0.0, 0.0};
      return {(*b)[k].x_minus - s0m, (*b)[k].x_plus - s0p};
    };
    const ShockPositions bf = bias(runs.fine_base);
    row.bias_minus = bf.x_minus;
    row.bias_plus = bf.x_plus;
    row.x_minus = (*runs.fine)[k].x_minus - bf.x_minus;
    row.x_plus = (*runs.fine)[k].x_plus - bf.x_plus;
    row.s_minus = sol.shock_position(Side::Minus, row.t);
    row.s_plus = sol.shock_position(Side::Plus, row.t);
    r.e_minus = std::max(r.e_minus, std::abs(row.x_minus - row.s_minus));
    r.e_plus = std::max(r.e_plus, std::abs(row.x_plus - row.s_plus));
    if (runs.coarse) {
      const ShockPositions bc = bias(runs.coarse_base);
      row.coarse_minus = (*runs.coarse)[k].x_minus - bc.x_minus;
      row.coarse_plus = (*runs.coarse)[k].x_plus - bc.x_plus;
      // First-order convergence: the fine-grid error is about the change
      // from the coarse grid.
      r.grid_error_estimate =
          std::max({r.grid_error_estimate, std::abs(row.x_minus - row.coarse_minus),
                    std::abs(row.x_plus - row.coarse_plus)});
    } else {
      row.coarse_minus = row.x_minus;
      row.coarse_plus = row.x_plus;
    }
    r.rows.push_back(row);
  }
  r.passed = r.e() <= 2.0 * r.grid_error_estimate + o.order_constant * o.eps * o.eps;
  return r;
}

struct OracleJob {
  double eps = 0.0;
  bool coarse = false;
  std::vector<ShockPositions> result;
  std::string error;
};

// Finite-volume runs on a thread pool; errors stay with their job.
void run_jobs(const ProblemSpec& spec, std::vector<OracleJob>& jobs, const CompareOptions& o) {
  const int cells = o.cells > 0 ? o.cells : spec.numerics.fv_cells;
  // Fine grids first keeps the pool busy.
  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return jobs[a].coarse < jobs[b].coarse; });
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < order.size();) {
      OracleJob& job = jobs[order[k]];
      try {
        job.result = job.coarse ? reference_positions(spec, job.eps, cells / 2, o.far_cells / 2)
                                : reference_positions(spec, job.eps, cells, o.far_cells);
      } catch (const std::exception& e) {
        job.error = e.what();
      }
    }
  };
  int workers = o.workers > 0 ? o.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

const OracleJob* find_job(const std::vector<OracleJob>& jobs, double eps, bool coarse) {
  for (const auto& j : jobs)
    if (j.eps == eps && j.coarse == coarse) return &j;
  return nullptr;
}

// Member report from the finished jobs, or the first job error.
CompareReport member_report(const ProblemSpec& spec, const ExpansionData& data, const CompareOptions& o,
                            const std::vector<double>& times, const std::vector<OracleJob>& jobs) {
  const OracleJob* js[4] = {find_job(jobs, o.eps, false), find_job(jobs, o.eps, true),
                            find_job(jobs, 0.0, false), find_job(jobs, 0.0, true)};
  CompareReport r;
  r.eps = o.eps;
  for (const OracleJob* j : js) {
    if (j && !j->error.empty()) {
      r.error = j->eps == 0.0 ? "baseline: " + j->error : j->error;
      return r;
    }
  }
  auto res = [](const OracleJob* j) { return j ? &j->result : nullptr; };
  try {
    return assemble(spec, data, o, times, {res(js[0]), res(js[1]), res(js[2]), res(js[3])});
  } catch (const std::exception& e) {
    r.error = e.what();
    return r;
  }
}

void add_jobs(std::vector<OracleJob>& jobs, double eps, const CompareOptions& o) {
  jobs.push_back({eps, false, {}, {}});
  if (o.grid_check) jobs.push_back({eps, true, {}, {}});
}

std::vector<double> oracle_times(const ProblemSpec& spec) { return default_output_times(spec); }

std::vector<ShockPositions> exact_positions(const ProblemSpec& spec, double eps,
                                            const std::vector<double>& times) {
  require_damped(spec);
  const InitialShockSpeeds d = initial_shock_speeds(spec);
  std::vector<ShockPositions> out;
  for (double t : times)
    out.push_back({damped_exact_position(d.minus, eps, t), damped_exact_position(d.plus, eps, t)});
  return out;
}

std::shared_ptr<const ExpansionData> expansion_for(const ProblemSpec& spec) {
  return solve_asymptotic(spec, spec.epsilon).data_ptr();
}

} // namespace

double damped_exact_position(double Dbar, double eps, double t) {
  return Dbar * (-std::expm1(-eps * t)) / eps;
}

std::string CompareReport::to_json() const {
  json j;
  j["epsilon"] = eps;
  j["cells"] = cells;
  j["e_minus"] = num(e_minus);
  j["e_plus"] = num(e_plus);
  j["grid_error_estimate"] = num(grid_error_estimate);
  j["status"] = !error.empty() ? "error" : (passed ? "pass" : "fail");
  if (!error.empty()) j["error"] = error;
  json rows = json::array();
  for (const auto& r : this->rows)
    rows.push_back({{"t", r.t}, {"x_minus", r.x_minus}, {"x_plus", r.x_plus},
                    {"s_minus", r.s_minus}, {"s_plus", r.s_plus}, {"bias_minus", r.bias_minus},
                    {"bias_plus", r.bias_plus}});
  j["times"] = rows;
  return j.dump(2);
}

CompareReport run_compare(const ProblemSpec& spec, std::shared_ptr<const ExpansionData> expansion,
                          const CompareOptions& o) {
  if (!(o.eps > 0.0)) throw SpecError("epsilon must be positive");
  if (!expansion) expansion = expansion_for(spec);
  const std::vector<double> times = oracle_times(spec);
  if (o.oracle == Oracle::DampedExact) {
    const auto exact = exact_positions(spec, o.eps, times);
    return assemble(spec, *expansion, o, times, {&exact, nullptr, nullptr, nullptr});
  }
  std::vector<OracleJob> jobs;
  add_jobs(jobs, o.eps, o);
  if (o.baseline) add_jobs(jobs, 0.0, o);
  run_jobs(spec, jobs, o);
  CompareReport r = member_report(spec, *expansion, o, times, jobs);
  if (!r.error.empty()) throw NumericalError(r.error);
  return r;
}

double loglog_slope(const std::vector<double>& eps, const std::vector<double>& e) {
  const std::size_t n = std::min(eps.size(), e.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(eps[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string SweepReport::to_json() const {
  json j;
  j["slope"] = num(slope);
  j["ratios"] = json::array();
  for (double r : ratios) j["ratios"].push_back(num(r));
  j["grid_ok"] = grid_ok;
  j["status"] = passed ? "pass" : "fail";
  json ms = json::array();
  for (const auto& m : members) ms.push_back(json::parse(m.to_json()));
  j["members"] = ms;
  return j.dump(2);
}

SweepReport sweep_epsilon(const ProblemSpec& spec, const std::vector<double>& eps_list,
                          const CompareOptions& base) {
  if (eps_list.size() < 3) throw std::invalid_argument("sweep needs at least three epsilon values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("epsilon values must be decreasing");
  }
  const auto expansion = expansion_for(spec);
  const std::vector<double> times = oracle_times(spec);

  SweepReport rep;
  if (base.oracle == Oracle::DampedExact) {
    for (double eps : eps_list) {
      CompareOptions o = base;
      o.eps = eps;
      try {
        rep.members.push_back(run_compare(spec, expansion, o));
      } catch (const std::exception& e) {
        CompareReport r;
        r.eps = eps;
        r.error = e.what();
        rep.members.push_back(r);
      }
    }
  } else {
    std::vector<OracleJob> jobs;
    for (double eps : eps_list) add_jobs(jobs, eps, base);
    if (base.baseline) add_jobs(jobs, 0.0, base);
    run_jobs(spec, jobs, base);
    for (double eps : eps_list) {
      CompareOptions o = base;
      o.eps = eps;
      rep.members.push_back(member_report(spec, *expansion, o, times, jobs));
    }
  }

  bool complete = true;
  std::vector<double> es, ee;
  rep.grid_ok = true;
  for (const auto& m : rep.members) {
    if (!m.error.empty()) {
      complete = false;
      continue;
    }
    es.push_back(m.eps);
    ee.push_back(m.e());
    if (!(m.grid_error_estimate < m.e() / 10)) rep.grid_ok = false;
  }
  for (std::size_t i = 0; i + 1 < rep.members.size(); ++i) {
    const auto& a = rep.members[i];
    const auto& b = rep.members[i + 1];
    rep.ratios.push_back(a.error.empty() && b.error.empty() ? a.e() / b.e()
                                                            : std::numeric_limits<double>::quiet_NaN());
  }
  rep.slope = loglog_slope(es, ee);
  rep.passed = complete && rep.grid_ok && rep.slope >= 1.8 && rep.slope <= 2.2;
  return rep;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct Args {
  std::string config;
  std::string out = "out";
  double eps = 0.0;
  std::vector<double> eps_list;
  int cells = 0;
  double dt = 0.0;
  int workers = 0;
  bool no_baseline = false;
  std::string oracle = "fv";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ProblemSpec load(const Args& a) {
  ProblemSpec spec = load_spec_file(a.config);
  if (a.dt > 0.0) spec.numerics.dt = a.dt;
  return spec;
}

bool validate_or_report(const ProblemSpec& spec) {
  const ValidationReport rep = validate(spec);
  if (rep.ok()) return true;
  std::cerr << rep.to_text();
  for (const auto& c : rep.checks)
    if (c.mandatory && !c.passed) std::cerr << "failing check: " << c.name << '\n';
  return false;
}

Oracle parse_oracle(const std::string& s) {
  if (s == "fv") return Oracle::FiniteVolume;
  if (s == "damped-exact") return Oracle::DampedExact;
  throw UsageError("unknown oracle '" + s + "' (expected fv or damped-exact)");
}

std::string fields_csv(const AsymptoticSolution& sol, const ProblemSpec& spec) {
  std::string out = "t,x,u0,v0,u1,v1,u,v\n";
  const int npts = 401;
  const Interval d = spec.numerics.fv_domain;
  for (double t : default_output_times(spec)) {
    for (int i = 0; i < npts; ++i) {
      const double x = d.lo + d.width() * i / (npts - 1);
      const auto a = sol.leading(x, t);
      const auto b = sol.first(x, t);
      out += csv_row({t, x, a.u, a.v, b.u, b.v, a.u + sol.epsilon() * b.u, a.v + sol.epsilon() * b.v});
    }
  }
  return out;
}

int cmd_validate(const Args& a) {
  const ProblemSpec spec = load(a);
  const ValidationReport rep = validate(spec);
  std::cout << rep.to_text();
  if (!a.out.empty()) write_file_atomic(std::filesystem::path(a.out) / "validation.json", rep.to_json() + "\n");
  return rep.ok() ? kExitOk : kExitValidation;
}

int cmd_solve(const Args& a) {
  const ProblemSpec spec = load(a);
  if (!validate_or_report(spec)) return kExitValidation;
  const double eps = a.eps > 0.0 ? a.eps : spec.epsilon;
  const AsymptoticSolution sol = solve_asymptotic(spec, eps);
  const std::filesystem::path dir(a.out);
  std::ostringstream shocks;
  write_shock_csv(shocks, sol.data().minus, sol.data().plus);
  write_file_atomic(dir / "shocks.csv", shocks.str());
  write_file_atomic(dir / "fields.csv", fields_csv(sol, spec));
  const JumpResidual res = hugoniot_residual(sol, sol.snapshot_times());
  const double T = spec.horizon;
  json j;
  j["epsilon"] = eps;
  j["T"] = T;
  j["s_minus_T"] = sol.shock_position(Side::Minus, T);
  j["s_plus_T"] = sol.shock_position(Side::Plus, T);
  j["s1_minus_T"] = sol.shock(Side::Minus).correction(T);
  j["s1_plus_T"] = sol.shock(Side::Plus).correction(T);
  j["hugoniot_residual"] = {{"max_abs", res.max_abs}, {"t", res.t}, {"side", side_name(res.side)},
                            {"condition", res.condition}};
  write_file_atomic(dir / "solve.json", j.dump(2) + "\n");
  char line[256];
  std::snprintf(line, sizeof line, "s-(T) = %.17g\ns+(T) = %.17g\n", sol.shock_position(Side::Minus, T),
                sol.shock_position(Side::Plus, T));
  std::cout << line;
  return kExitOk;
}

int cmd_reference(const Args& a) {
  const ProblemSpec spec = load(a);
  if (!validate_or_report(spec)) return kExitValidation;
  const double eps = a.eps > 0.0 ? a.eps : spec.epsilon;
  ReferenceOptions opt;
  opt.cells = a.cells;
  const GridSolution sol = run_reference(spec, eps, opt);
  const std::filesystem::path dir(a.out);
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    std::ostringstream os;
    write_snapshot_csv(os, sol, static_cast<int>(k));
    char name[64];
    std::snprintf(name, sizeof name, "reference_%03zu.csv", k);
    write_file_atomic(dir / name, os.str());
  }
  std::ostringstream ex;
  write_extraction_csv(ex, sol);
  write_file_atomic(dir / "extraction.csv", ex.str());
  std::cout << ex.str();
  return kExitOk;
}

int cmd_compare(const Args& a) {
  const ProblemSpec spec = load(a);
  if (!validate_or_report(spec)) return kExitValidation;
  CompareOptions o;
  o.eps = a.eps;
  o.cells = a.cells;
  o.oracle = parse_oracle(a.oracle);
  o.baseline = !a.no_baseline;
  o.workers = a.workers;
  const AsymptoticSolution sol = solve_asymptotic(spec, a.eps);
  const CompareReport r = run_compare(spec, sol.data_ptr(), o);
  const std::filesystem::path dir(a.out);
  std::ostringstream shocks;
  write_shock_csv(shocks, sol.data().minus, sol.data().plus);
  write_file_atomic(dir / "shocks.csv", shocks.str());
  write_file_atomic(dir / "fields.csv", fields_csv(sol, spec));
  std::string cmp = "t,x_minus,x_plus,s_minus,s_plus,bias_minus,bias_plus,coarse_minus,coarse_plus\n";
  for (const auto& row : r.rows)
    cmp += csv_row({row.t, row.x_minus, row.x_plus, row.s_minus, row.s_plus, row.bias_minus,
                    row.bias_plus, row.coarse_minus, row.coarse_plus});
  write_file_atomic(dir / "comparison.csv", cmp);
  write_file_atomic(dir / "compare.json", r.to_json() + "\n");
  char line[256];
  std::snprintf(line, sizeof line, "e_minus = %.6g\ne_plus = %.6g\ngrid_error_estimate = %.6g\n%s\n",
                r.e_minus, r.e_plus, r.grid_error_estimate, r.passed ? "pass" : "FAIL");
  std::cout << line;
  return r.passed ? kExitOk : kExitNumerical;
}

int cmd_sweep(const Args& a) {
  if (a.eps_list.size() < 3) throw UsageError("sweep needs at least three epsilon values");
  for (std::size_t i = 1; i < a.eps_list.size(); ++i)
    if (!(a.eps_list[i] < a.eps_list[i - 1])) throw UsageError("epsilon values must be decreasing");
  const ProblemSpec spec = load(a);
  if (!validate_or_report(spec)) return kExitValidation;
  CompareOptions o;
  o.cells = a.cells;
  o.oracle = parse_oracle(a.oracle);
  o.baseline = !a.no_baseline;
  o.workers = a.workers;
  const SweepReport r = sweep_epsilon(spec, a.eps_list, o);
  const std::filesystem::path dir(a.out);
  std::string table = "epsilon,e_minus,e_plus,grid_error_estimate\n";
  for (const auto& m : r.members) table += csv_row({m.eps, m.e_minus, m.e_plus, m.grid_error_estimate});
  write_file_atomic(dir / "sweep.csv", table);
  write_file_atomic(dir / "sweep.json", r.to_json() + "\n");
  std::cout << table;
  char line[128];
  std::snprintf(line, sizeof line, "slope = %.6g\n%s\n", r.slope, r.passed ? "pass" : "FAIL");
  std::cout << line;
  for (const auto& m : r.members)
    if (!m.error.empty()) std::cerr << "epsilon " << m.eps << ": " << m.error << '\n';
  return r.passed ? kExitOk : kExitNumerical;
}

} // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"First-order shock asymptotics for perturbed 2x2 hyperbolic systems"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* sub) {
    sub->add_option("config", a.config, "JSON problem configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--dt", a.dt, "marching time step override")->check(CLI::PositiveNumber);
  };
  auto* validate_cmd = app.add_subcommand("validate", "check the structural hypotheses");
  common(validate_cmd);
  auto* solve_cmd = app.add_subcommand("solve", "asymptotic shock curves and fields");
  common(solve_cmd);
  solve_cmd->add_option("--eps", a.eps, "small parameter (default: config epsilon)")->check(CLI::PositiveNumber);
  auto* ref_cmd = app.add_subcommand("reference", "finite-volume reference solution");
  common(ref_cmd);
  ref_cmd->add_option("--eps", a.eps, "small parameter (default: config epsilon)")->check(CLI::PositiveNumber);
  ref_cmd->add_option("--cells", a.cells, "number of cells")->check(CLI::PositiveNumber);
  auto* cmp_cmd = app.add_subcommand("compare", "asymptotic shocks against the oracle");
  common(cmp_cmd);
  cmp_cmd->add_option("--eps", a.eps, "small parameter")->required()->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--cells", a.cells, "number of cells")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--oracle", a.oracle, "fv or damped-exact");
  cmp_cmd->add_option("--workers", a.workers, "concurrent finite-volume runs")->check(CLI::PositiveNumber);
  cmp_cmd->add_flag("--no-baseline", a.no_baseline, "skip the eps = 0 bias correction");
  auto* sweep_cmd = app.add_subcommand("sweep", "epsilon sweep with log-log slope");
  common(sweep_cmd);
  sweep_cmd->add_option("--eps", a.eps_list, "decreasing epsilon list, comma separated")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--cells", a.cells, "number of cells")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--workers", a.workers, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--oracle", a.oracle, "fv or damped-exact");
  sweep_cmd->add_flag("--no-baseline", a.no_baseline, "skip the eps = 0 bias correction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string subcommand;
  for (const auto* sub : app.get_subcommands()) subcommand = sub->get_name();
  int code = kExitOk;
  std::string error;
  try {
    if (*validate_cmd) code = cmd_validate(a);
    else if (*solve_cmd) code = cmd_solve(a);
    else if (*ref_cmd) code = cmd_reference(a);
    else if (*cmp_cmd) code = cmd_compare(a);
    else if (*sweep_cmd) code = cmd_sweep(a);
  } catch (const UsageError& e) {
    error = std::string("usage error: ") + e.what();
    code = kExitUsage;
  } catch (const SpecError& e) {
    error = std::string("invalid configuration: ") + e.what();
    code = kExitValidation;
  } catch (const ParseError& e) {
    error = std::string("invalid configuration: ") + e.what();
    code = kExitValidation;
  } catch (const NumericalError& e) {
    error = std::string("numerical failure: ") + e.what();
    code = kExitNumerical;
  } catch (const EvalError& e) {
    error = std::string("numerical failure: ") + e.what();
    code = kExitNumerical;
  } catch (const std::exception& e) {
    error = std::string("error: ") + e.what();
    code = kExitNumerical;
  }
  if (!error.empty()) std::cerr << error << '\n';
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json m;
  m["subcommand"] = subcommand;
  m["config"] = a.config;
  m["out"] = a.out;
  json over = json::object();
  if (a.eps > 0.0) over["eps"] = a.eps;
  if (!a.eps_list.empty()) over["eps"] = a.eps_list;
  if (a.dt > 0.0) over["dt"] = a.dt;
  if (a.cells > 0) over["fv_cells"] = a.cells;
  if (a.workers > 0) over["workers"] = a.workers;
  m["overrides"] = over;
  m["exit_status"] = code;
  if (!error.empty()) m["error"] = error;
  m["seconds"] = secs;
  try {
    write_file_atomic(std::filesystem::path(a.out) / "manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "cannot write the run manifest: " << e.what() << '\n';
  }
  std::fprintf(stderr, "done in %.2f s, exit %d\n", secs, code);
  return code;
}

} // namespace shockexp
