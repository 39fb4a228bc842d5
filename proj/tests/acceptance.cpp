// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "random_expr.hpp"
#include "shockexp/characteristics.hpp"
#include "shockexp/cli.hpp"
#include "shockexp/corrections.hpp"
#include "shockexp/hugoniot.hpp"
#include "shockexp/reference.hpp"
#include "specs.hpp"

using namespace shockexp;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Closed-form shocks of the decoupled example: s0 = D t, s1 = -D t^2 / 2.
Outcome decoupled_shocks() {
  const ProblemSpec spec = load_spec_file(config_path("decoupled.json"));
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  double err = 0.0;
  for (Side s : {Side::Minus, Side::Plus}) {
    const double D = s == Side::Minus ? 0.5 : 2.5;
    const ShockCurve& c = sol.shock(s);
    for (int k = 0; k <= c.grid.steps; ++k) {
      const double t = c.grid.t(k);
      err = std::max({err, std::abs(c.s0[k] - D * t), std::abs(c.s1[k] + 0.5 * D * t * t)});
    }
    // Expansion of D (1 - exp(-eps t)) / eps to first order in eps.
    const double t = spec.horizon, e = 1e-4;
    const double exact = damped_exact_position(D, e, t);
    err = std::max(err, std::abs(sol.with_epsilon(e).shock_position(s, t) - exact) - e * e * D * t * t * t);
  }
  return {err <= 1e-6, fmt("dt=%g max|s-exact|=%.3e", spec.numerics.dt, err)};
}

Outcome decoupled_corrections() {
  const ProblemSpec spec = load_spec_file(config_path("decoupled.json"));
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  const FirstOrderFields f = sol.first_order_fields();
  double err = 0.0;
  for (int i = 1; i <= 10; ++i) {
    const double t = 0.05 * i;
    // u0 and v0 in the left, inner and right regions, clear of the shifted shocks.
    const struct { double x, u0, v0; } pts[] = {
        {-0.4, 1, 3}, {0.5 * t - 0.03, 1, 3}, {0.5 * t + 0.03, 0, 3}, {1.5 * t, 0, 3},
        {2.5 * t - 0.03, 0, 3}, {2.5 * t + 0.03, 0, 2}, {1.9, 0, 2}};
    for (const auto& p : pts) {
      const FirstOrderValues v = eval_first_order(f, p.x, t);
      err = std::max({err, std::abs(v.u1 + t * p.u0), std::abs(v.v1 + t * p.v0)});
    }
    err = std::max(err, std::abs(sol.traces(Side::Plus, t).u1_in));
    err = std::max(err, std::abs(sol.traces(Side::Minus, t).v1_in + 3 * t));
  }
  return {err <= 1e-6, fmt("max|u1+t u0|,|v1+t v0| over regions and inner data = %.3e", err)};
}

Outcome zero_sources() {
  SpecText t = coupled_text();
  t.f = "0";
  t.g = "0";
  const ProblemSpec spec = make_spec(t);
  const AsymptoticSolution sol = solve_asymptotic(spec, 0.1);
  double worst = 0.0;
  for (Side s : {Side::Minus, Side::Plus}) {
    const ShockCurve& c = sol.shock(s);
    for (int k = 0; k < c.levels(); ++k) worst = std::max({worst, std::abs(c.s1[k]), std::abs(c.D1[k])});
  }
  for (const auto& snap : sol.data().inner.snapshots) {
    for (double v : snap.u1.values()) worst = std::max(worst, std::abs(v));
    for (double v : snap.v1.values()) worst = std::max(worst, std::abs(v));
  }
  const FirstOrderFields f = sol.first_order_fields();
  for (double tt = 0.1; tt <= spec.horizon; tt += 0.1)
    for (double x = -0.9; x <= 3.9; x += 0.1) {
      const FirstOrderValues v = eval_first_order(f, x, tt);
      worst = std::max({worst, std::abs(v.u1), std::abs(v.v1)});
    }
  return {worst <= 1e-12, fmt("max first-order magnitude %.3e", worst)};
}

Outcome residual_scaling() {
  const ProblemSpec spec = load_spec_file(config_path("coupled.json"));
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  std::vector<double> times;
  for (int i = 1; i <= 40; ++i) times.push_back(spec.horizon * i / 40);
  const std::vector<double> eps = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> res;
  for (double e : eps) res.push_back(hugoniot_residual(sol.with_epsilon(e), times).max_abs);
  const double slope = loglog_slope(eps, res);
  return {slope >= 1.9, fmt("slope %.3f (residual %.3e at eps=0.1, %.3e at 0.0125)", slope, res[0], res[3])};
}

Outcome coupled_sweep() {
  const ProblemSpec spec = load_spec_file(config_path("coupled.json"));
  CompareOptions o;
  o.cells = 16384;
  const SweepReport r = sweep_epsilon(spec, {0.08, 0.04, 0.02}, o);
  for (const auto& m : r.members)
    if (!m.error.empty()) return {false, "member eps=" + std::to_string(m.eps) + " failed: " + m.error};
  const double ratio = r.ratios.at(0);
  bool grid = true;
  for (int i = 0; i < 2; ++i) grid = grid && r.members[i].grid_error_estimate < r.members[i].e() / 10;
  std::string d = fmt("e(0.08)=%.3e e(0.04)=%.3e ratio %.3f", r.members[0].e(), r.members[1].e(), ratio);
  d += fmt(", grid error %.2e and %.2e", r.members[0].grid_error_estimate, r.members[1].grid_error_estimate);
  d += fmt(", slope %.3f", r.slope);
  return {ratio >= 3 && ratio <= 5 && grid, d};
}

Outcome characteristics() {
  SpecText t = decoupled_text();
  t.u_left = t.u_right = "x";
  t.horizon = 1.0;
  t.numerics.state_u = {-2, 2};
  t.numerics.state_v = {1, 4};
  double err_u = 0.0;
  {
    const ProblemSpec spec = make_spec(t);
    for (double tt = 0.0; tt <= 1.0; tt += 0.125)
      for (double x = -1.5; x <= 1.5; x += 0.25) {
        const UState s = u0_eval(spec, Region::OuterRight, x, tt);
        err_u = std::max({err_u, std::abs(s.u0 - x / (1 + tt)), std::abs(s.u0_x - 1 / (1 + tt))});
      }
  }
  t.mu = "2*u+v";
  t.u_right = "0.2*x";
  t.v_right = "2.5+0.3*sin(x)";
  t.numerics.fan_count = 256;
  t.numerics.state_u = {-0.5, 0.5};
  t.numerics.state_v = {2.0, 3.0};
  const ProblemSpec spec = make_spec(t);
  const CharField fan = build_v_fan(spec, Region::OuterRight);
  const int k = fan.grid.steps;
  double err_j = 0.0;
  for (std::size_t j = 1; j + 1 < fan.curve_count(); ++j) {
    if (!fan.alive(k, j + 1)) continue;
    const double hm = fan.feet[j] - fan.feet[j - 1], hp = fan.feet[j + 1] - fan.feet[j];
    if (hp > 0.05) continue;
    const double fd = (hm * hm * fan.x(k, j + 1) - hp * hp * fan.x(k, j - 1) +
                       (hp * hp - hm * hm) * fan.x(k, j)) /
                      (hm * hp * (hm + hp));
    err_j = std::max(err_j, std::abs(fd - fan.jacobian(k, j)) / std::abs(fan.jacobian(k, j)));
  }
  for (double xi : {0.05, 0.4, 1.2}) {
    const double h = 1e-5;
    const auto a = integrate_v_characteristic(spec, Region::OuterRight, xi + h, fan.grid, 1.0);
    const auto b = integrate_v_characteristic(spec, Region::OuterRight, xi - h, fan.grid, 1.0);
    const auto c = integrate_v_characteristic(spec, Region::OuterRight, xi, fan.grid, 1.0);
    err_j = std::max(err_j, std::abs((a.first - b.first) / (2 * h) - c.second) / std::abs(c.second));
  }
  return {err_u <= 1e-10 && err_j <= 1e-4, fmt("u0 error %.3e, Jacobian relative error %.3e", err_u, err_j)};
}

Outcome derivatives() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  const Var vars[3] = {Var::U, Var::V, Var::X};
  const double h = 1e-3;
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Expression e = Expression::parse(random_expression(rng, 4));
    const Var var = vars[n % 3];
    const double p[3] = {pt(rng), pt(rng), pt(rng)};
    auto at = [&](double shift) {
      double q[3] = {p[0], p[1], p[2]};
      q[static_cast<int>(var)] += shift;
      return e(q[0], q[1], q[2]);
    };
    // Fourth-order central difference.
    const double fd = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
    const double exact = e.derivative(var)(p[0], p[1], p[2]);
    worst = std::max(worst, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
  }
  return {worst <= 1e-7, fmt("1000 pairs, max error %.3e relative to max(1,|d|)", worst)};
}

Outcome conservation() {
  ProblemSpec spec = load_spec_file(config_path("coupled.json"));
  ReferenceOptions opt;
  opt.cells = 1024;
  double worst = 0.0;
  int steps = 0;
  opt.on_step = [&](const StepBalance& b) {
    for (int c = 0; c < 2; ++c)
      worst = std::max(worst, std::abs(b.after[c] - b.before[c] - b.boundary[c] - b.source[c]));
    ++steps;
  };
  run_reference(spec, 0.08, opt);
  return {worst <= 1e-10, fmt("%g steps, max imbalance %.3e", steps, worst)};
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"decoupled shocks s0, s1", decoupled_shocks},
      {"decoupled interior corrections", decoupled_corrections},
      {"zero sources", zero_sources},
      {"jump residual scaling", residual_scaling},
      {"coupled epsilon sweep", coupled_sweep},
      {"characteristic solver", characteristics},
      {"expression derivatives", derivatives},
      {"reference conservation", conservation},
  };
  int failed = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", n, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.passed;
  }
  return failed == 0 ? 0 : 1;
}
