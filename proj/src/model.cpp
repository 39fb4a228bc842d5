#include "shockexp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace shockexp {

using nlohmann::json;

namespace {

constexpr double kCompatibilityTol = 1e-9;
constexpr int kStateSamples = 21;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string state_loc(double u, double v) { return "u=" + fmt(u) + ", v=" + fmt(v); }

const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw SpecError("missing field '" + ctx + key + "'");
  return j.at(key);
}

std::string require_string(const json& j, const char* key, const std::string& ctx = "") {
  const json& v = require(j, key, ctx);
  if (!v.is_string()) throw SpecError("field '" + ctx + key + "' must be a string");
  return v.get<std::string>();
}

double require_number(const json& j, const char* key, const std::string& ctx = "") {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) throw SpecError("field '" + ctx + key + "' must be a number");
  return v.get<double>();
}

int require_int(const json& j, const char* key, const std::string& ctx = "") {
  const json& v = require(j, key, ctx);
  if (!v.is_number_integer()) throw SpecError("field '" + ctx + key + "' must be an integer");
  return v.get<int>();
}

Interval require_interval(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw SpecError("field '" + ctx + key + "' must be a [lo, hi] pair");
  Interval iv{v[0].get<double>(), v[1].get<double>()};
  if (!(iv.lo < iv.hi)) throw SpecError("field '" + ctx + key + "' must satisfy lo < hi");
  return iv;
}

Expression parse_field(const std::string& name, const std::string& text,
                       std::initializer_list<Var> allowed) {
  Expression e;
  try {
    e = Expression::parse(text);
  } catch (const ParseError& err) {
    throw ParseError("in '" + name + "': " + err.what(), err.offset());
  }
  for (Var v : {Var::U, Var::V, Var::X}) {
    if (e.depends_on(v) && std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw SpecError("expression '" + name + "' may not depend on '" + var_name(v) + "'");
  }
  return e;
}

InitialPiece make_piece(const std::string& name, const std::string& text) {
  InitialPiece p;
  p.value = parse_field(name, text, {Var::X});
  p.slope = p.value.derivative(Var::X);
  return p;
}

void check_numerics(const NumericsConfig& n) {
  if (!(n.dt > 0.0)) throw SpecError("dt must be positive");
  if (n.fan_count < 16) throw SpecError("fan_count must be at least 16");
  if (!(n.newton_tol > 0.0)) throw SpecError("newton_tol must be positive");
  if (n.newton_max_iter < 1) throw SpecError("newton_max_iter must be at least 1");
  if (n.fv_cells < 16) throw SpecError("fv_cells must be at least 16");
  if (!(n.fv_cfl > 0.0 && n.fv_cfl < 1.0)) throw SpecError("fv_cfl must lie in (0, 1)");
  if (!(n.fv_domain.lo < n.fv_domain.hi)) throw SpecError("fv_domain must satisfy lo < hi");
  if (n.fv_outputs < 1) throw SpecError("fv_outputs must be at least 1");
  if (n.inner_snapshots < 2) throw SpecError("inner_snapshots must be at least 2");
}

// Samples fn over a kStateSamples^2 grid covering the state box and returns
// the worst (largest) value with its location. Evaluation errors are
// reported as infinite residuals.
struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  std::string location;
  std::string error;
};

Worst sample_box(const ProblemSpec& spec, const std::function<double(double, double)>& fn) {
  const auto& box_u = spec.numerics.state_u;
  const auto& box_v = spec.numerics.state_v;
  Worst w;
  for (int i = 0; i < kStateSamples; ++i) {
    const double u = box_u.lo + box_u.width() * i / (kStateSamples - 1);
    for (int j = 0; j < kStateSamples; ++j) {
      const double v = box_v.lo + box_v.width() * j / (kStateSamples - 1);
      double r;
      try {
        r = fn(u, v);
      } catch (const EvalError& e) {
        w.value = std::numeric_limits<double>::infinity();
        w.location = state_loc(u, v);
        w.error = e.what();
        return w;
      }
      if (!(r <= w.value) || std::isnan(r)) {
        if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
        w.value = r;
        w.location = state_loc(u, v);
      }
    }
  }
  return w;
}

CheckResult residual_check(const std::string& name, const ProblemSpec& spec,
                           const std::function<double(double, double)>& fn) {
  Worst w = sample_box(spec, fn);
  CheckResult c;
  c.name = name;
  c.residual = w.value;
  c.location = w.error.empty() ? w.location : w.location + " (" + w.error + ")";
  c.passed = w.value <= kCompatibilityTol;
  return c;
}

template <class Fn>
CheckResult margin_check(const std::string& name, bool mandatory, Fn&& fn) {
  CheckResult c;
  c.name = name;
  c.mandatory = mandatory;
  try {
    auto [margin, loc] = fn();
    c.residual = margin;
    c.location = loc;
    c.passed = margin > 0.0;
  } catch (const std::exception& e) {
    c.passed = false;
    c.residual = -std::numeric_limits<double>::infinity();
    c.location = e.what();
  }
  return c;
}

} // namespace

ProblemSpec make_spec(const SpecText& t) {
  ProblemSpec spec;
  auto& c = spec.coeff;
  c.lambda = parse_field("lambda", t.lambda, {Var::U});
  c.lambda_u = c.lambda.derivative(Var::U);
  c.mu = parse_field("mu", t.mu, {Var::U, Var::V});
  c.mu_u = c.mu.derivative(Var::U);
  c.mu_v = c.mu.derivative(Var::V);
  c.f = parse_field("f", t.f, {Var::U, Var::V});
  c.g = parse_field("g", t.g, {Var::U, Var::V});
  c.Lambda = parse_field("Lambda", t.Lambda, {Var::U});
  c.Lambda_u = c.Lambda.derivative(Var::U);
  c.Phi = parse_field("Phi", t.Phi, {Var::U, Var::V});
  c.Phi_u = c.Phi.derivative(Var::U);
  c.Phi_v = c.Phi.derivative(Var::V);
  c.Psi = parse_field("Psi", t.Psi, {Var::U, Var::V});
  c.Psi_u = c.Psi.derivative(Var::U);
  c.Psi_v = c.Psi.derivative(Var::V);
  spec.initial.u_left = make_piece("initial.u_left", t.u_left);
  spec.initial.u_right = make_piece("initial.u_right", t.u_right);
  spec.initial.v_left = make_piece("initial.v_left", t.v_left);
  spec.initial.v_right = make_piece("initial.v_right", t.v_right);

  if (!(t.epsilon > 0.0)) throw SpecError("epsilon must be positive");
  if (!(t.horizon > 0.0)) throw SpecError("T must be positive");
  spec.epsilon = t.epsilon;
  spec.horizon = t.horizon;
  check_numerics(t.numerics);
  spec.numerics = t.numerics;
  spec.sources = {{"lambda", t.lambda},      {"mu", t.mu},
                  {"f", t.f},                {"g", t.g},
                  {"Lambda", t.Lambda},      {"Phi", t.Phi},
                  {"Psi", t.Psi},            {"initial.u_left", t.u_left},
                  {"initial.u_right", t.u_right}, {"initial.v_left", t.v_left},
                  {"initial.v_right", t.v_right}};
  return spec;
}

ProblemSpec load_spec(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("configuration must be a JSON object");

  SpecText t;
  t.lambda = require_string(j, "lambda");
  t.mu = require_string(j, "mu");
  t.f = require_string(j, "f");
  t.g = require_string(j, "g");
  t.Lambda = require_string(j, "Lambda");
  t.Phi = require_string(j, "Phi");
  t.Psi = require_string(j, "Psi");
  const json& init = require(j, "initial", "");
  t.u_left = require_string(init, "u_left", "initial.");
  t.u_right = require_string(init, "u_right", "initial.");
  t.v_left = require_string(init, "v_left", "initial.");
  t.v_right = require_string(init, "v_right", "initial.");
  t.epsilon = require_number(j, "epsilon");
  t.horizon = require_number(j, "T");

  const json& num = require(j, "numerics", "");
  const std::string nc = "numerics.";
  NumericsConfig& n = t.numerics;
  n.dt = require_number(num, "dt", nc);
  n.fan_count = require_int(num, "fan_count", nc);
  n.newton_tol = require_number(num, "newton_tol", nc);
  n.fv_cells = require_int(num, "fv_cells", nc);
  n.fv_cfl = require_number(num, "fv_cfl", nc);
  n.fv_domain = require_interval(num, "fv_domain", nc);
  const json& box = require(num, "state_box", nc);
  n.state_u = require_interval(box, "u", nc + "state_box.");
  n.state_v = require_interval(box, "v", nc + "state_box.");
  if (num.contains("newton_max_iter")) n.newton_max_iter = require_int(num, "newton_max_iter", nc);
  if (num.contains("fv_outputs")) n.fv_outputs = require_int(num, "fv_outputs", nc);
  if (num.contains("inner_snapshots")) n.inner_snapshots = require_int(num, "inner_snapshots", nc);

  return make_spec(t);
}

ProblemSpec load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open configuration '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_spec(ss.str());
}

InitialShockSpeeds initial_shock_speeds(const ProblemSpec& spec) {
  const auto& c = spec.coeff;
  const auto& ini = spec.initial;
  const double ul = ini.u_left(0.0), ur = ini.u_right(0.0);
  const double vl = ini.v_left(0.0), vr = ini.v_right(0.0);
  InitialShockSpeeds s;
  if (ul == ur) throw NumericalError("u has no jump at x=0");
  s.minus = (c.Lambda(ul) - c.Lambda(ur)) / (ul - ur);
  s.inner_v = minus_inner_v(c, ul, vl, ur, s.minus, vl);
  // Plus shock: u is continuous (right state), v jumps from the inner
  // value to the right value.
  const double dphi = c.Phi(ur, vr) - c.Phi(ur, s.inner_v);
  if (dphi == 0.0) throw NumericalError("Phi has no jump across the v-shock at x=0");
  s.plus = (c.Psi(ur, vr) - c.Psi(ur, s.inner_v)) / dphi;
  return s;
}

double minus_inner_v(const Coefficients& c, double uo, double vo, double ui, double D,
                     double guess) {
  const double phi_o = c.Phi(uo, vo), psi_o = c.Psi(uo, vo);
  auto G = [&](double v) { return D * (phi_o - c.Phi(ui, v)) - (psi_o - c.Psi(ui, v)); };
  if (!c.Phi.depends_on(Var::U)) return vo;
  double v = std::isfinite(guess) ? guess : vo;
  for (int it = 0; it < 100; ++it) {
    const double r = G(v);
    const double d = c.Psi_v(ui, v) - D * c.Phi_v(ui, v);
    if (!(std::abs(d) > 1e-12))
      throw NumericalError("inner v at the u-shock: characteristic tangent to the shock");
    double step = r / d;
    const double cap = 0.25 * (1.0 + std::abs(v));
    if (std::abs(step) > cap) step = std::copysign(cap, step);
    v -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(v))) return v;
  }
  if (std::abs(G(v)) <= 1e-13 * (1.0 + std::abs(phi_o) + std::abs(psi_o))) return v;
  throw NumericalError("inner v at the u-shock: Newton iteration did not converge");
}

double max_wave_speed(const ProblemSpec& spec) {
  const auto& c = spec.coeff;
  Worst w = sample_box(spec, [&](double u, double v) {
    return std::max(std::abs(c.lambda(u)), std::abs(c.mu(u, v)));
  });
  if (!std::isfinite(w.value)) throw NumericalError("wave speed undefined at " + w.location);
  return w.value;
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed || !c.mandatory; });
}

const CheckResult* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-4s %s residual=%.6g", c.name.c_str(),
                  c.passed ? "ok" : "FAIL", c.mandatory ? "          " : "(advisory)",
                  c.residual);
    os << line;
    if (!c.location.empty()) os << " at " << c.location;
    os << '\n';
  }
  os << (ok() ? "validation passed\n" : "validation FAILED\n");
  return os.str();
}

std::string ValidationReport::to_json() const {
  json j = json::object();
  for (const auto& c : checks) {
    json entry;
    entry["status"] = c.passed ? "pass" : "fail";
    entry["mandatory"] = c.mandatory;
    entry["residual"] = std::isfinite(c.residual) ? json(c.residual) : json(nullptr);
    entry["location"] = c.location;
    j[c.name] = entry;
  }
  json out;
  out["status"] = ok() ? "pass" : "fail";
  out["checks"] = j;
  return out.dump(2);
}

ValidationReport validate(const ProblemSpec& spec) {
  const auto& c = spec.coeff;
  const auto& ini = spec.initial;
  ValidationReport rep;

  // (a) conservation pair compatibility and invertibility of Phi in v.
  rep.checks.push_back(residual_check("compat_Lambda", spec, [&](double u, double) {
    return std::abs(c.Lambda_u(u) - c.lambda(u));
  }));
  rep.checks.push_back(residual_check("compat_Psi_u", spec, [&](double u, double v) {
    return std::abs(c.Psi_u(u, v) - c.lambda(u) * c.Phi_u(u, v));
  }));
  rep.checks.push_back(residual_check("compat_Psi_v", spec, [&](double u, double v) {
    return std::abs(c.Psi_v(u, v) - c.mu(u, v) * c.Phi_v(u, v));
  }));
  rep.checks.push_back(margin_check("phi_v_nonzero", true, [&]() {
    Worst lo = sample_box(spec, [&](double u, double v) { return -c.Phi_v(u, v); });
    Worst hi = sample_box(spec, [&](double u, double v) { return c.Phi_v(u, v); });
    if (!std::isfinite(lo.value) || !std::isfinite(hi.value))
      throw EvalError("Phi_v undefined at " + (std::isfinite(lo.value) ? hi.location : lo.location));
    // Phi_v keeps one sign: either max < 0 or min > 0.
    const double min_v = -lo.value, max_v = hi.value;
    if (min_v > 0.0) return std::pair{min_v, lo.location};
    return std::pair{-max_v, hi.location};
  }));

  // (b) strict hyperbolicity lambda < mu.
  rep.checks.push_back(margin_check("strict_hyperbolicity", true, [&]() {
    Worst w = sample_box(spec, [&](double u, double v) { return c.lambda(u) - c.mu(u, v); });
    if (!std::isfinite(w.value)) throw EvalError("speeds undefined at " + w.location);
    return std::pair{-w.value, w.location};
  }));

  const double ul = ini.u_left(0.0), ur = ini.u_right(0.0);
  const double vl = ini.v_left(0.0), vr = ini.v_right(0.0);

  rep.checks.push_back(margin_check("initial_jumps", true, [&]() {
    return std::pair{std::min(std::abs(ul - ur), std::abs(vl - vr)),
                     std::string("x=0")};
  }));

  // (c) Lax conditions for both initial shocks.
  rep.checks.push_back(margin_check("lax_minus", true, [&]() {
    const double d = initial_shock_speeds(spec).minus;
    const double m = std::min(c.lambda(ul) - d, d - c.lambda(ur));
    return std::pair{m, "D0-(0)=" + fmt(d)};
  }));
  rep.checks.push_back(margin_check("lax_plus", true, [&]() {
    const double d = initial_shock_speeds(spec).plus;
    const double m = std::min(c.mu(ur, initial_shock_speeds(spec).inner_v) - d, d - c.mu(ur, vr));
    return std::pair{m, "D0+(0)=" + fmt(d)};
  }));

  // (d) ordering of the two shocks.
  rep.checks.push_back(margin_check("shock_ordering", true, [&]() {
    const auto s = initial_shock_speeds(spec);
    return std::pair{s.plus - s.minus, "D0-(0)=" + fmt(s.minus) + ", D0+(0)=" + fmt(s.plus)};
  }));

  // (e) inner characteristics leave the shock that feeds them.
  rep.checks.push_back(margin_check("transversality", true, [&]() {
    const auto s = initial_shock_speeds(spec);
    const double m = std::min(s.plus - c.lambda(ur), c.mu(ur, s.inner_v) - s.minus);
    return std::pair{m, "inner state " + state_loc(ur, s.inner_v)};
  }));

  // (f) no focusing of u-characteristics up to T (advisory).
  rep.checks.push_back(margin_check("no_focusing", false, [&]() {
    const double spread = 3.0 * spec.horizon * max_wave_speed(spec);
    double worst = std::numeric_limits<double>::infinity();
    std::string loc;
    constexpr int n = 401;
    for (int side = 0; side < 2; ++side) {
      const InitialPiece& piece = side == 0 ? ini.u_left : ini.u_right;
      for (int i = 0; i < n; ++i) {
        const double xi = (side == 0 ? -1.0 : 1.0) * spread * i / (n - 1);
        const double a = c.lambda_u(piece(xi)) * piece.derivative(xi);
        // 1 + t*a is linear in t, so its minimum over [0, T] is at an end.
        const double m = std::min(1.0, 1.0 + spec.horizon * a);
        if (m < worst) {
          worst = m;
          loc = "xi=" + fmt(xi) + ", t=" + fmt(spec.horizon);
        }
      }
    }
    return std::pair{worst, loc};
  }));

  return rep;
}

} // namespace shockexp
