#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "shockexp/hugoniot.hpp"
#include "specs.hpp"

using namespace shockexp;

namespace {

TraceSet decoupled_minus(double t) {
  TraceSet tr;
  tr.side = Side::Minus;
  tr.t = t;
  tr.D0 = 0.5;
  tr.u0 = 1;
  tr.u0_in = 0;
  tr.v0 = 3;
  tr.v0_in = 3;
  tr.u1 = -t;
  tr.v1 = -3 * t;
  tr.u1_in = 0;
  return tr;
}

TraceSet decoupled_plus(double t) {
  TraceSet tr;
  tr.side = Side::Plus;
  tr.t = t;
  tr.D0 = 2.5;
  tr.u0 = 0;
  tr.u0_in = 0;
  tr.v0 = 2;
  tr.v0_in = 3;
  tr.u1 = 0;
  tr.v1 = -2 * t;
  tr.u1_in = 0;
  tr.v1_in = -3 * t;
  return tr;
}

// Hand derivatives of Phi = -1/(u+v), Psi = ln(u+v) - u/(u+v).
struct CoupledPair {
  static double Phi(double u, double v) { return -1 / (u + v); }
  static double Phi_u(double u, double v) { return 1 / ((u + v) * (u + v)); }
  static double Phi_v(double u, double v) { return Phi_u(u, v); }
  static double Psi_u(double u, double v) { return u / ((u + v) * (u + v)); }
  static double Psi_v(double u, double v) { return (2 * u + v) / ((u + v) * (u + v)); }
};

// The order-eps Phi jump condition, solved for v1_in by hand.
double oracle_v1_in(const TraceSet& tr, double s1, double D1) {
  using P = CoupledPair;
  const double uo = tr.u0, vo = tr.v0, ui = tr.u0_in, vi = tr.v0_in;
  const double Uo = tr.u1 + tr.u0_x * s1, Vo = tr.v1 + tr.v0_x * s1;
  const double Ui = tr.u1_in + tr.u0_x_in * s1;
  const double known_phi = P::Phi_u(uo, vo) * Uo + P::Phi_v(uo, vo) * Vo - P::Phi_u(ui, vi) * Ui -
                           P::Phi_v(ui, vi) * tr.v0_x_in * s1;
  const double known_psi = P::Psi_u(uo, vo) * Uo + P::Psi_v(uo, vo) * Vo - P::Psi_u(ui, vi) * Ui -
                           P::Psi_v(ui, vi) * tr.v0_x_in * s1;
  // D1 dPhi + D0 (known_phi - Phi_v~ x) = known_psi - Psi_v~ x
  const double dphi = P::Phi(uo, vo) - P::Phi(ui, vi);
  return (D1 * dphi + tr.D0 * known_phi - known_psi) / (tr.D0 * P::Phi_v(ui, vi) - P::Psi_v(ui, vi));
}

// Same equation solved for D1 with every first-order trace known.
double oracle_D1(const TraceSet& tr, double s1) {
  using P = CoupledPair;
  const double uo = tr.u0, vo = tr.v0, ui = tr.u0_in, vi = tr.v0_in;
  const double Uo = tr.u1 + tr.u0_x * s1, Vo = tr.v1 + tr.v0_x * s1;
  const double Ui = tr.u1_in + tr.u0_x_in * s1, Vi = tr.v1_in + tr.v0_x_in * s1;
  const double lin_phi = P::Phi_u(uo, vo) * Uo + P::Phi_v(uo, vo) * Vo - P::Phi_u(ui, vi) * Ui -
                         P::Phi_v(ui, vi) * Vi;
  const double lin_psi = P::Psi_u(uo, vo) * Uo + P::Psi_v(uo, vo) * Vo - P::Psi_u(ui, vi) * Ui -
                         P::Psi_v(ui, vi) * Vi;
  return (lin_psi - tr.D0 * lin_phi) / (P::Phi(uo, vo) - P::Phi(ui, vi));
}

TraceSet random_coupled_trace(std::mt19937_64& rng, Side side) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  TraceSet tr;
  tr.side = side;
  tr.u0 = side == Side::Minus ? 1.0 + 0.1 * d(rng) : 0.1 * d(rng);
  tr.u0_in = side == Side::Minus ? 0.1 * d(rng) : tr.u0;
  tr.v0 = 2.5 + 0.5 * d(rng);
  tr.v0_in = side == Side::Minus ? tr.v0 + 0.1 * d(rng) : tr.v0 + 0.8;
  tr.D0 = side == Side::Minus ? 0.5 : 2.4;
  tr.u0_x = d(rng);
  tr.u0_x_in = d(rng);
  tr.v0_x = d(rng);
  tr.v0_x_in = d(rng);
  tr.u1 = d(rng);
  tr.v1 = d(rng);
  tr.u1_in = d(rng);
  tr.v1_in = d(rng);
  return tr;
}

} // namespace

TEST_CASE("step 1 on synthetic traces") {
  const ProblemSpec spec = make_spec(decoupled_text());
  TraceSet tr = decoupled_plus(0.3);
  tr.u1 = 0.3;
  tr.u0_x = 0.2;
  tr.u0_x_in = 0.0;
  CHECK(step1_inner_u1_boundary(spec.coeff, tr, 0.5) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(step1_inner_u1_boundary(spec.coeff, decoupled_plus(0.3), 0.0) == 0.0);
  tr.u0_x = 0.0;
  CHECK(step1_inner_u1_boundary(spec.coeff, tr, 0.0) == doctest::Approx(0.3));
  // Characteristic speed equal to the shock speed.
  tr.D0 = 0.0;
  CHECK_THROWS_AS(step1_inner_u1_boundary(spec.coeff, tr, 0.5), NumericalError);
}

TEST_CASE("step 1 agrees with the reduced formula") {
  const ProblemSpec spec = make_spec(coupled_text());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const TraceSet tr = random_coupled_trace(rng, Side::Plus);
    const double s1 = d(rng);
    const double reduced = tr.u1 + (tr.u0_x - tr.u0_x_in) * s1;
    CHECK(std::abs(step1_inner_u1_boundary(spec.coeff, tr, s1) - reduced) <= 1e-12);
  }
}

TEST_CASE("step 3") {
  SpecText t = decoupled_text();
  const ProblemSpec spec = make_spec(t);
  for (double tt : {0.1, 0.4}) {
    CHECK(step3_D1_minus(spec.coeff, decoupled_minus(tt), -0.25 * tt * tt) ==
          doctest::Approx(-0.5 * tt).epsilon(1e-14));
  }
  TraceSet tr = decoupled_minus(0.0);
  tr.u0 = 2;
  tr.u0_in = 1;
  tr.D0 = 1.5;
  tr.u1 = 1;
  tr.u1_in = 0;
  CHECK(step3_D1_minus(spec.coeff, tr, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
  tr.u1 = 0;
  CHECK(step3_D1_minus(spec.coeff, tr, 0.0) == 0.0);
  tr.u0_in = 2;
  CHECK_THROWS_AS(step3_D1_minus(spec.coeff, tr, 0.0), NumericalError);
}

TEST_CASE("step 4 decoupled and reduced") {
  const ProblemSpec spec = make_spec(decoupled_text());
  for (double tt : {0.1, 0.4})
    for (double D1 : {-1.0, 0.0, 3.0})
      CHECK(step4_inner_v1_boundary(spec.coeff, decoupled_minus(tt), -0.25 * tt * tt, D1) ==
            doctest::Approx(-3 * tt).epsilon(1e-13));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    TraceSet tr = decoupled_minus(0.3);
    tr.v0 = tr.v0_in = 2.5 + 0.5 * d(rng);
    tr.v0_x = d(rng);
    tr.v0_x_in = d(rng);
    tr.v1 = d(rng);
    const double s1 = d(rng);
    const double reduced = tr.v1 + (tr.v0_x - tr.v0_x_in) * s1;
    CHECK(std::abs(step4_inner_v1_boundary(spec.coeff, tr, s1, d(rng)) - reduced) <= 1e-12);
  }
}

TEST_CASE("step 4 coupled against an independent solve") {
  const ProblemSpec spec = make_spec(coupled_text());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const TraceSet tr = random_coupled_trace(rng, Side::Minus);
    const double s1 = d(rng), D1 = d(rng);
    const double a = step4_inner_v1_boundary(spec.coeff, tr, s1, D1);
    CHECK(a == doctest::Approx(oracle_v1_in(tr, s1, D1)).epsilon(1e-10));
  }
  // The D1 term carries the Phi jump across the u-shock.
  TraceSet tr = random_coupled_trace(rng, Side::Minus);
  CHECK(step4_inner_v1_boundary(spec.coeff, tr, 0.1, 1.0) !=
        doctest::Approx(step4_inner_v1_boundary(spec.coeff, tr, 0.1, 0.0)));
}

TEST_CASE("step 6") {
  const ProblemSpec spec = make_spec(decoupled_text());
  for (double tt : {0.1, 0.4})
    CHECK(step6_D1_plus(spec.coeff, decoupled_plus(tt), -1.25 * tt * tt) ==
          doctest::Approx(-2.5 * tt).epsilon(1e-13));
  TraceSet zero = decoupled_plus(0.2);
  zero.v1 = zero.v1_in = 0.0;
  CHECK(step6_D1_plus(spec.coeff, zero, 0.0) == 0.0);

  const ProblemSpec coupled = make_spec(coupled_text());
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const TraceSet tr = random_coupled_trace(rng, Side::Plus);
    const double s1 = d(rng);
    CHECK(step6_D1_plus(coupled.coeff, tr, s1) == doctest::Approx(oracle_D1(tr, s1)).epsilon(1e-10));
  }
  TraceSet collapsed = decoupled_plus(0.1);
  collapsed.v0_in = collapsed.v0;
  CHECK_THROWS_AS(step6_D1_plus(spec.coeff, collapsed, 0.0), NumericalError);
}

TEST_CASE("leading shocks of the decoupled example") {
  const ProblemSpec spec = make_spec(decoupled_text());
  const auto outer = build_outer_fields(spec);
  const LeadingSolution lead = solve_leading(*outer);
  const TimeGrid& g = lead.minus.grid;
  for (int k = 0; k <= g.steps; k += 50) {
    CHECK(lead.minus.s0[k] == doctest::Approx(0.5 * g.t(k)).epsilon(1e-12));
    CHECK(lead.plus.s0[k] == doctest::Approx(2.5 * g.t(k)).epsilon(1e-12));
  }
}

TEST_CASE("equal states collapse the jump") {
  SpecText t = decoupled_text();
  t.u_right = "1";
  const ProblemSpec spec = make_spec(t);
  const auto outer = build_outer_fields(spec);
  CHECK_THROWS_AS(solve_leading(*outer), NumericalError);
  CHECK_THROWS_AS(solve_asymptotic(spec, 0.05), SpecError);
}

TEST_CASE("decoupled first-order march") {
  const ProblemSpec spec = make_spec(decoupled_text());
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  const ShockCurve& m = sol.shock(Side::Minus);
  const ShockCurve& p = sol.shock(Side::Plus);
  double err = 0.0;
  for (int k = 0; k <= m.grid.steps; ++k) {
    const double t = m.grid.t(k);
    err = std::max({err, std::abs(m.s1[k] + 0.25 * t * t), std::abs(p.s1[k] + 1.25 * t * t),
                    std::abs(m.D1[k] + 0.5 * t), std::abs(p.D1[k] + 2.5 * t)});
  }
  CHECK(err <= 1e-6);
  CHECK(m.correction(0.5) == doctest::Approx(-0.0625).epsilon(1e-6));
  CHECK(p.correction(0.5) == doctest::Approx(-0.3125).epsilon(1e-6));
}

TEST_CASE("traces of the decoupled example") {
  const ProblemSpec spec = make_spec(decoupled_text());
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  TraceSet m = sol.traces(Side::Minus, 0.4);
  CHECK(m.u0 == 1.0);
  CHECK(m.u0_in == 0.0);
  CHECK(m.v0 == 3.0);
  CHECK(m.v0_in == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.u0_x == 0.0);
  CHECK(m.v0_x == 0.0);
  CHECK(std::abs(m.v0_x_in) <= 1e-12);
  CHECK(m.u1 == doctest::Approx(-0.4).epsilon(1e-12));
  TraceSet p = sol.traces(Side::Plus, 0.4);
  CHECK(p.u0 == 0.0);
  CHECK(p.u0_in == 0.0);
  CHECK(p.v0 == 2.0);
  CHECK(p.v0_in == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p.v1 == doctest::Approx(-0.8).epsilon(1e-12));
  TraceSet z = sol.traces(Side::Plus, 0.0);
  CHECK(z.u1 == 0.0);
  CHECK(z.v1 == 0.0);
}

TEST_CASE("zero sources give a zero first order") {
  SpecText t = coupled_text();
  t.f = "0";
  t.g = "0";
  t.horizon = 0.5;
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
  CHECK(worst <= 1e-12);
}

TEST_CASE("coupled example: residual order, speeds and ordering") {
  const ProblemSpec spec = make_spec(coupled_text());
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  std::vector<double> times;
  for (int i = 1; i <= 20; ++i) times.push_back(spec.horizon * i / 20);

  const double eps[4] = {0.1, 0.05, 0.025, 0.0125};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double e : eps) {
    const JumpResidual r = hugoniot_residual(sol.with_epsilon(e), times);
    const double x = std::log(e), y = std::log(r.max_abs);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  CHECK(slope >= 1.9);

  for (Side s : {Side::Minus, Side::Plus}) {
    const ShockCurve& c = sol.shock(s);
    const double dt = c.grid.dt;
    for (int k = 1; k + 1 < c.levels(); ++k)
      CHECK(std::abs((c.s0[k + 1] - c.s0[k - 1]) / (2 * dt) - c.D0[k]) <= 10 * dt * dt);
  }
  for (int k = 1; k < sol.shock(Side::Minus).levels(); ++k) {
    const double t = sol.shock(Side::Minus).grid.t(k);
    CHECK(sol.shock_position(Side::Minus, t) < sol.shock_position(Side::Plus, t));
  }
}

TEST_CASE("second-order convergence in dt") {
  // Constant states are integrated exactly at any dt; smooth data are not.
  SpecText t = coupled_text();
  t.horizon = 0.5;
  t.u_left = "1+0.1*sin(x)";
  t.u_right = "0.1*sin(2*x)";
  t.v_left = "3+0.2*x";
  t.v_right = "2+0.2*cos(x)";
  t.numerics.fan_count = 256;
  double s1m[3], s1p[3];
  for (int i = 0; i < 3; ++i) {
    t.numerics.dt = 4e-3 / (1 << i);
    const ProblemSpec spec = make_spec(t);
    const AsymptoticSolution sol = solve_asymptotic(spec, 0.04);
    s1m[i] = sol.shock(Side::Minus).correction(0.5);
    s1p[i] = sol.shock(Side::Plus).correction(0.5);
  }
  const double rm = (s1m[0] - s1m[1]) / (s1m[1] - s1m[2]);
  const double rp = (s1p[0] - s1p[1]) / (s1p[1] - s1p[2]);
  CAPTURE(rm);
  CAPTURE(rp);
  CHECK(rm >= 3.5);
  CHECK(rm <= 4.5);
  CHECK(rp >= 3.5);
  CHECK(rp <= 4.5);
}

TEST_CASE("shock CSV") {
  const ProblemSpec spec = make_spec(decoupled_text());
  const AsymptoticSolution sol = solve_asymptotic(spec, spec.epsilon);
  std::ostringstream os;
  write_shock_csv(os, sol.shock(Side::Minus), sol.shock(Side::Plus));
  const std::string s = os.str();
  CHECK(s.rfind("t,s0_minus,D0_minus,s1_minus,D1_minus,s0_plus,D0_plus,s1_plus,D1_plus\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : s) lines += ch == '\n';
  CHECK(lines == static_cast<std::size_t>(sol.shock(Side::Minus).levels()) + 1);
}
