#include <doctest.h>

#include <cmath>

#include "shockexp/model.hpp"
#include "specs.hpp"

using namespace shockexp;

namespace {

bool check_passed(const ValidationReport& r, const char* name) {
  const CheckResult* c = r.find(name);
  REQUIRE(c != nullptr);
  return c->passed;
}

} // namespace

TEST_CASE("example configurations load and validate") {
  for (const char* name : {"decoupled.json", "coupled.json"}) {
    CAPTURE(name);
    const ProblemSpec spec = load_spec_file(config_path(name));
    const ValidationReport r = validate(spec);
    CHECK(r.ok());
    for (const auto& c : r.checks) CHECK_MESSAGE(c.passed, c.name);
  }
}

TEST_CASE("derivatives are precomputed") {
  const ProblemSpec spec = make_spec(coupled_text());
  const auto& c = spec.coeff;
  // Hand derivatives of Phi = -1/(u+v) and Psi = ln(u+v) - u/(u+v).
  const double u = 0.3, v = 2.1, s = u + v;
  CHECK(c.Phi_u(u, v) == doctest::Approx(1 / (s * s)));
  CHECK(c.Psi_u(u, v) == doctest::Approx(u / (s * s)));
  CHECK(c.Psi_v(u, v) == doctest::Approx((2 * u + v) / (s * s)));
  CHECK(c.mu_u(u, v) == 2.0);
  CHECK(c.Lambda_u(u) == doctest::Approx(u));
}

TEST_CASE("decoupled checks and initial speeds") {
  const ProblemSpec spec = make_spec(decoupled_text());
  const ValidationReport r = validate(spec);
  CHECK(r.ok());
  const InitialShockSpeeds d = initial_shock_speeds(spec);
  CHECK(d.minus == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(d.plus == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(d.inner_v == 3.0);
}

TEST_CASE("inner v of the coupled u-shock satisfies the Phi jump condition") {
  const ProblemSpec spec = make_spec(coupled_text());
  const auto& c = spec.coeff;
  const InitialShockSpeeds d = initial_shock_speeds(spec);
  const double v = d.inner_v;
  CHECK(v != doctest::Approx(3.0));
  CHECK(d.minus * (c.Phi(1, 3) - c.Phi(0, v)) == doctest::Approx(c.Psi(1, 3) - c.Psi(0, v)).epsilon(1e-12));
  // Phi independent of u: v passes unchanged.
  const ProblemSpec dec = make_spec(decoupled_text());
  CHECK(minus_inner_v(dec.coeff, 1.0, 3.0, 0.0, 0.5, 2.0) == 3.0);
}

TEST_CASE("epsilon must be positive") {
  SpecText t = decoupled_text();
  t.epsilon = 0.0;
  CHECK_THROWS_WITH_AS(make_spec(t), "epsilon must be positive", SpecError);
  t = decoupled_text();
  t.horizon = -1;
  CHECK_THROWS_AS(make_spec(t), SpecError);
  t = decoupled_text();
  t.numerics.dt = 0;
  CHECK_THROWS_AS(make_spec(t), SpecError);
  t = decoupled_text();
  t.numerics.fan_count = 8;
  CHECK_THROWS_AS(make_spec(t), SpecError);
  t = decoupled_text();
  t.numerics.fv_cfl = 1.0;
  CHECK_THROWS_AS(make_spec(t), SpecError);
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(load_spec("not json"), SpecError);
  CHECK_THROWS_AS(load_spec("[1, 2]"), SpecError);
  CHECK_THROWS_AS(load_spec(R"({"lambda": "u"})"), SpecError);
  CHECK_THROWS_AS(load_spec_file(config_path("missing.json")), SpecError);
}

TEST_CASE("malformed expression in a config") {
  SpecText t = decoupled_text();
  t.f = "-u+";
  CHECK_THROWS_AS(make_spec(t), ParseError);
  t = decoupled_text();
  t.lambda = "u+v";
  CHECK_THROWS_AS(make_spec(t), SpecError);
}

TEST_CASE("overlapping speed ranges fail hyperbolicity") {
  SpecText t = decoupled_text();
  t.v_left = "0.5";
  t.v_right = "0.2";
  t.numerics.state_v = {0.1, 0.6};
  const ValidationReport r = validate(make_spec(t));
  CHECK_FALSE(r.ok());
  CHECK_FALSE(check_passed(r, "strict_hyperbolicity"));
}

TEST_CASE("incompatible conservation pair") {
  SpecText t = decoupled_text();
  t.mu = "2*u+v";
  const ValidationReport r = validate(make_spec(t));
  CHECK_FALSE(r.ok());
  CHECK_FALSE(check_passed(r, "compat_Psi_v"));
  CHECK(r.find("compat_Psi_v")->residual > 1e-9);
  CHECK(check_passed(r, "compat_Psi_u"));
}

TEST_CASE("Lax and ordering failures") {
  SpecText t = decoupled_text();
  t.u_left = "0";
  t.u_right = "1"; // expansive u jump
  ValidationReport r = validate(make_spec(t));
  CHECK_FALSE(check_passed(r, "lax_minus"));
  t = decoupled_text();
  t.v_left = "2";
  t.v_right = "3";
  r = validate(make_spec(t));
  CHECK_FALSE(check_passed(r, "lax_plus"));
  t = decoupled_text();
  t.u_right = "1";
  r = validate(make_spec(t));
  CHECK_FALSE(check_passed(r, "initial_jumps"));
}

TEST_CASE("focusing data is reported") {
  SpecText t = decoupled_text();
  t.u_right = "-3*x";
  t.horizon = 0.5;
  const ValidationReport r = validate(make_spec(t));
  CHECK_FALSE(check_passed(r, "no_focusing"));
}

TEST_CASE("validate is pure") {
  const ProblemSpec spec = load_spec_file(config_path("coupled.json"));
  CHECK(validate(spec).to_json() == validate(spec).to_json());
  CHECK(validate(spec).to_text() == validate(spec).to_text());
}
