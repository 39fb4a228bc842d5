#ifndef SHOCKEXP_MODEL_HPP
#define SHOCKEXP_MODEL_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shockexp/errors.hpp"
#include "shockexp/expr.hpp"

namespace shockexp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Coefficient functions of the system
///   u_t + lambda(u) u_x = eps f(u,v),  v_t + mu(u,v) v_x = eps g(u,v)
/// together with its conservation pair
///   u_t + Lambda(u)_x = eps f,  Phi(u,v)_t + Psi(u,v)_x = eps (Phi_u f + Phi_v g)
/// and every partial derivative the solvers need.
struct Coefficients {
  Expression lambda, lambda_u;
  Expression mu, mu_u, mu_v;
  Expression f, g;
  Expression Lambda, Lambda_u;
  Expression Phi, Phi_u, Phi_v;
  Expression Psi, Psi_u, Psi_v;
};

/// One smooth piece of initial data, a function of x, with its slope.
struct InitialPiece {
  Expression value;
  Expression slope;
  double operator()(double x) const { return value(0.0, 0.0, x); }
  double derivative(double x) const { return slope(0.0, 0.0, x); }
};

/// Initial data for u and v on x<0 (left) and x>0 (right).
struct PiecewiseInitial {
  InitialPiece u_left, u_right, v_left, v_right;
};

struct NumericsConfig {
  double dt = 1e-3;
  int fan_count = 256;
  double newton_tol = 1e-13;
  int newton_max_iter = 60;
  int fv_cells = 4096;
  double fv_cfl = 0.45;
  Interval fv_domain{-1.0, 1.0};
  int fv_outputs = 10;
  Interval state_u{0.0, 1.0};
  Interval state_v{0.0, 1.0};
  /// Number of stored time snapshots of the inner (wedge) fields.
  int inner_snapshots = 64;
};

struct ProblemSpec {
  Coefficients coeff;
  PiecewiseInitial initial;
  double epsilon = 0.0;
  double horizon = 0.0;
  NumericsConfig numerics;

  /// Raw expression text keyed by configuration field name.
  std::vector<std::pair<std::string, std::string>> sources;
};

/// Parses a JSON configuration document. Throws SpecError for schema and
/// parameter violations, ParseError for malformed expressions.
ProblemSpec load_spec(std::string_view document);
ProblemSpec load_spec_file(const std::filesystem::path& path);

/// Builds a spec from expression strings; used by tests and by load_spec.
struct SpecText {
  std::string lambda, mu, f, g, Lambda, Phi, Psi;
  std::string u_left, u_right, v_left, v_right;
  double epsilon = 0.05;
  double horizon = 0.5;
  NumericsConfig numerics;
};
ProblemSpec make_spec(const SpecText& text);

struct CheckResult {
  std::string name;
  bool passed = true;
  bool mandatory = true;
  double residual = 0.0;
  std::string location;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  const CheckResult* find(std::string_view name) const;
  std::string to_text() const;
  std::string to_json() const;
};

/// Samples the structural hypotheses of the problem: compatibility of the
/// conservation pair, strict hyperbolicity, Lax conditions and ordering of
/// the two initial shocks, transversality of inner characteristics, and
/// absence of focusing up to the horizon.
ValidationReport validate(const ProblemSpec& spec);

/// Leading shock speeds at t = 0 from the Rankine-Hugoniot quotients of the
/// initial states.
struct InitialShockSpeeds {
  double minus = 0.0;
  double plus = 0.0;
  double inner_v = 0.0; // v between the shocks
};
InitialShockSpeeds initial_shock_speeds(const ProblemSpec& spec);

/// v on the inner side of the u-shock: the root of
///   D (Phi(uo, vo) - Phi(ui, v)) = Psi(uo, vo) - Psi(ui, v)
/// with D the u-shock speed. Equals vo when Phi does not depend on u.
double minus_inner_v(const Coefficients& c, double uo, double vo, double ui, double D,
                     double guess);

/// Largest |lambda|, |mu| over the state box.
double max_wave_speed(const ProblemSpec& spec);

} // namespace shockexp

#endif
