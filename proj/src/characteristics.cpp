#include "shockexp/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace shockexp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Refinement is requested when dx/dxi varies by more than this factor
// across a bracketing pair of curves.
constexpr double kJacobianRatioLimit = 4.0;

struct Hermite {
  double a, h, x0, x1, d0, d1; // d0, d1 are dx/dxi at the ends

  double value(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * x1 +
           (s3 - s2) * h * d1;
  }
  double slope(double s) const { // dx/dxi
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * x0 + (3 * s2 - 4 * s + 1) * h * d0 + (-6 * s2 + 6 * s) * x1 +
            (3 * s2 - 2 * s) * h * d1) /
           h;
  }

  /// s in [0,1] with value(s) = x; x0 <= x <= x1 assumed.
  double invert(double x) const {
    double lo = 0.0, hi = 1.0;
    double s = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.5;
    for (int it = 0; it < 60; ++it) {
      const double r = value(s) - x;
      if (r == 0.0) return s;
      if (r < 0.0) lo = s;
      else hi = s;
      const double d = slope(s) * h;
      double next = (d > 0.0) ? s - r / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) < 1e-15) return next;
      s = next;
    }
    return s;
  }
};

} // namespace

const char* region_name(Region r) { return r == Region::OuterLeft ? "OuterLeft" : "OuterRight"; }

TimeGrid TimeGrid::make(double horizon, double requested_dt) {
  if (!(horizon > 0.0) || !(requested_dt > 0.0)) throw SpecError("time grid needs T > 0 and dt > 0");
  TimeGrid g;
  g.steps = std::max(1, static_cast<int>(std::ceil(horizon / requested_dt - 1e-9)));
  g.dt = horizon / g.steps;
  return g;
}

int TimeGrid::level_below(double t) const {
  int k = static_cast<int>(std::floor(t / dt));
  return std::clamp(k, 0, steps - 1);
}

// ---------------------------------------------------------------------------

OuterUField::OuterUField(const ProblemSpec& spec, Region region)
    : spec_(&spec), region_(region),
      piece_(region == Region::OuterLeft ? &spec.initial.u_left : &spec.initial.u_right) {
  constant_data_ = piece_->value.is_constant();
  constant_value_ = constant_data_ ? (*piece_)(0.0) : 0.0;
}

UState OuterUField::eval(double x, double t, double guess) const {
  const auto& c = spec_->coeff;
  if (constant_data_) {
    return {constant_value_, 0.0, x - c.lambda(constant_value_) * t};
  }
  const InitialPiece& data = *piece_;
  // F(xi) = xi + lambda(u_init(xi)) t - x is increasing while characteristics
  // do not focus.
  auto F = [&](double xi) { return xi + c.lambda(data(xi)) * t - x; };
  auto dF = [&](double xi) { return 1.0 + t * c.lambda_u(data(xi)) * data.derivative(xi); };

  double xi = std::isfinite(guess) ? guess : x - c.lambda(data(0.0)) * t;
  double lo, hi, flo, fhi;
  try {
    double f0 = F(xi);
    if (f0 == 0.0) {
      lo = hi = xi;
      flo = fhi = 0.0;
    } else {
      double step = std::max(1e-3, std::abs(F(xi)));
      double other = xi;
      double fo = f0;
      const double dir = f0 > 0.0 ? -1.0 : 1.0;
      int it = 0;
      do {
        other = xi + dir * step;
        fo = F(other);
        step *= 2.0;
        if (++it > 80) throw NumericalError("root not bracketed");
      } while ((fo > 0.0) == (f0 > 0.0) && fo != 0.0);
      lo = std::min(xi, other);
      hi = std::max(xi, other);
      flo = dir < 0 ? fo : f0;
      fhi = dir < 0 ? f0 : fo;
    }
  } catch (const EvalError& e) {
    throw NumericalError("u0 root not bracketed at x=" + fmt(x) + ", t=" + fmt(t) + " in " +
                         region_name(region_) + ": " + e.what());
  } catch (const NumericalError&) {
    throw NumericalError("u0 root not bracketed at x=" + fmt(x) + ", t=" + fmt(t) + " in " +
                         region_name(region_));
  }
  if (flo > 0.0 || fhi < 0.0)
    throw NumericalError("u0 root not bracketed at x=" + fmt(x) + ", t=" + fmt(t));

  const double tol = spec_->numerics.newton_tol;
  const int max_iter = spec_->numerics.newton_max_iter + 200; // bisection fallback needs room
  if (lo != hi) {
    xi = std::clamp(xi, lo, hi);
    for (int it = 0; it < max_iter; ++it) {
      const double r = F(xi);
      if (r == 0.0) break;
      if (r < 0.0) lo = xi;
      else hi = xi;
      const double d = dF(xi);
      double next = (d > 0.0) ? xi - r / d : 0.5 * (lo + hi);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      const double change = std::abs(next - xi);
      xi = next;
      if (change <= tol * (1.0 + std::abs(xi)) || hi - lo <= tol * (1.0 + std::abs(xi))) break;
      if (it == max_iter - 1) throw NumericalError("u0 root search did not converge");
    }
  }

  UState s;
  s.foot = xi;
  s.u0 = data(xi);
  const double slope = data.derivative(xi);
  const double den = 1.0 + t * c.lambda_u(s.u0) * slope;
  if (!(den > 0.0))
    throw NumericalError("characteristics focus at x=" + fmt(x) + ", t=" + fmt(t) +
                         " (1 + t lambda_u u0' = " + fmt(den) + ")");
  s.u0_x = slope / den;
  return s;
}

UState u0_eval(const ProblemSpec& spec, Region region, double x, double t) {
  return OuterUField(spec, region).eval(x, t);
}

std::vector<double> fan_feet(int count, double spread) {
  if (count < 3) throw SpecError("a fan needs at least 3 curves");
  const int n_neg = (count - 1) / 2;
  const int n_pos = count - 1 - n_neg;
  constexpr double ratio = 40.0; // last spacing / first spacing
  auto side = [&](int n) {
    std::vector<double> pts;
    if (n <= 0) return pts;
    const double q = n > 1 ? std::pow(ratio, 1.0 / (n - 1)) : 1.0;
    const double denom = n > 1 ? (std::pow(q, n) - 1.0) : 1.0;
    for (int k = 1; k <= n; ++k) pts.push_back(spread * (n > 1 ? (std::pow(q, k) - 1.0) / denom : 1.0));
    return pts;
  };
  std::vector<double> feet;
  auto neg = side(n_neg);
  for (auto it = neg.rbegin(); it != neg.rend(); ++it) feet.push_back(-*it);
  feet.push_back(0.0);
  for (double p : side(n_pos)) feet.push_back(p);
  return feet;
}

double fan_spread(const ProblemSpec& spec) {
  return 3.0 * spec.horizon * std::max(max_wave_speed(spec), 1e-3);
}

// ---------------------------------------------------------------------------

namespace {

struct VRhs {
  const ProblemSpec& spec;
  const OuterUField& uf;
  double value, slope;
  mutable double guess;

  void operator()(double t, double x, double J, double& dx, double& dJ) const {
    const auto& c = spec.coeff;
    UState us = uf.eval(x, t, guess);
    guess = us.foot;
    dx = c.mu(us.u0, value);
    dJ = c.mu_u(us.u0, value) * us.u0_x * J + c.mu_v(us.u0, value) * slope;
  }
};

void rk4_vstep(const VRhs& rhs, double t, double dt, double& x, double& J) {
  double k1x, k1J, k2x, k2J, k3x, k3J, k4x, k4J;
  rhs(t, x, J, k1x, k1J);
  rhs(t + 0.5 * dt, x + 0.5 * dt * k1x, J + 0.5 * dt * k1J, k2x, k2J);
  rhs(t + 0.5 * dt, x + 0.5 * dt * k2x, J + 0.5 * dt * k2J, k3x, k3J);
  rhs(t + dt, x + dt * k3x, J + dt * k3J, k4x, k4J);
  x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
  J += dt / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
}

const InitialPiece& v_data(const ProblemSpec& spec, Region region) {
  return region == Region::OuterLeft ? spec.initial.v_left : spec.initial.v_right;
}

} // namespace

std::pair<double, double> integrate_v_characteristic(const ProblemSpec& spec, Region region,
                                                     double foot, const TimeGrid& grid,
                                                     double t_end) {
  OuterUField uf(spec, region);
  const InitialPiece& data = v_data(spec, region);
  VRhs rhs{spec, uf, data(foot), data.derivative(foot), foot};
  double x = foot, J = 1.0, t = 0.0;
  while (t < t_end - 1e-14 * std::max(1.0, t_end)) {
    const double h = std::min(grid.dt, t_end - t);
    rk4_vstep(rhs, t, h, x, J);
    t += h;
  }
  return {x, J};
}

CharField build_v_fan(const ProblemSpec& spec, Region region) {
  CharField fan;
  fan.region = region;
  fan.family = Family::V;
  fan.grid = TimeGrid::make(spec.horizon, spec.numerics.dt);
  fan.spec_ = &spec;
  fan.data_ = &v_data(spec, region);

  const auto all_feet = fan_feet(spec.numerics.fan_count, fan_spread(spec));
  for (double xi : all_feet) {
    try {
      const double val = (*fan.data_)(xi);
      const double sl = fan.data_->derivative(xi);
      fan.feet.push_back(xi);
      fan.values.push_back(val);
      fan.slopes.push_back(sl);
    } catch (const EvalError&) {
      // data formula undefined here; no curve
    }
  }
  const std::size_t n = fan.feet.size();
  if (n < 2) throw NumericalError("v fan has fewer than two valid feet");
  const int levels = fan.grid.steps + 1;
  fan.x_.assign(static_cast<std::size_t>(levels) * n, std::numeric_limits<double>::quiet_NaN());
  fan.jac_.assign(fan.x_.size(), std::numeric_limits<double>::quiet_NaN());
  fan.alive_until_.assign(n, fan.grid.steps);

  OuterUField uf(spec, region);
  for (std::size_t j = 0; j < n; ++j) {
    VRhs rhs{spec, uf, fan.values[j], fan.slopes[j], fan.feet[j]};
    double x = fan.feet[j], J = 1.0;
    fan.x_[j] = x;
    fan.jac_[j] = J;
    for (int k = 0; k < fan.grid.steps; ++k) {
      try {
        rk4_vstep(rhs, fan.grid.t(k), fan.grid.dt, x, J);
      } catch (const std::exception&) {
        fan.alive_until_[j] = k;
        break;
      }
      if (!std::isfinite(x) || !(J > 0.0)) {
        fan.alive_until_[j] = k;
        break;
      }
      fan.x_[(k + 1) * n + j] = x;
      fan.jac_[(k + 1) * n + j] = J;
    }
  }

  // Alive curves must form one contiguous, ordered block at every level.
  for (int k = 0; k <= fan.grid.steps; ++k) {
    std::size_t lo = 0;
    while (lo < n && !fan.alive(k, lo)) ++lo;
    std::size_t hi = n;
    while (hi > lo && !fan.alive(k, hi - 1)) --hi;
    if (hi - lo < 2)
      throw NumericalError(std::string("v fan collapsed in ") + region_name(region) +
                           " at t=" + fmt(fan.grid.t(k)));
    for (std::size_t j = lo; j < hi; ++j) {
      if (!fan.alive(k, j))
        throw NumericalError(std::string("v characteristic failed inside the fan in ") +
                             region_name(region) + " at t=" + fmt(fan.grid.t(k)) +
                             ", foot=" + fmt(fan.feet[j]));
      if (j + 1 < hi && !(fan.x(k, j + 1) > fan.x(k, j)))
        throw NumericalError(std::string("v characteristics focus in ") + region_name(region) +
                             " at t=" + fmt(fan.grid.t(k)) + " near x=" + fmt(fan.x(k, j)));
    }
  }
  return fan;
}

FanSample CharField::eval(double xq, double t) const {
  const std::size_t n = feet.size();
  const int k = grid.level_below(t);
  const double th = std::clamp((t - grid.t(k)) / grid.dt, 0.0, 1.0);
  auto pos = [&](std::size_t j) { return (1.0 - th) * x(k, j) + th * x(k + 1, j); };
  auto jac = [&](std::size_t j) { return (1.0 - th) * jacobian(k, j) + th * jacobian(k + 1, j); };

  std::size_t lo = 0;
  while (lo < n && !(alive(k + 1, lo) && alive(k, lo))) ++lo;
  std::size_t hi = n;
  while (hi > lo && !(alive(k + 1, hi - 1) && alive(k, hi - 1))) --hi;
  if (hi - lo < 2 || xq < pos(lo) || xq > pos(hi - 1))
    throw NumericalError("point x=" + fmt(xq) + ", t=" + fmt(t) + " outside the " +
                         region_name(region) + " v fan hull");

  // Binary search for pos(j) <= xq <= pos(j+1).
  std::size_t a = lo, b = hi - 1;
  while (b - a > 1) {
    const std::size_t m = (a + b) / 2;
    if (pos(m) <= xq) a = m;
    else b = m;
  }

  Hermite H{feet[a], feet[a + 1] - feet[a], pos(a), pos(a + 1), jac(a), jac(a + 1)};
  const double ratio = std::max(H.d0, H.d1) / std::min(H.d0, H.d1);
  FanSample out;
  out.lower = static_cast<int>(a);
  if (ratio > kJacobianRatioLimit) {
    // One level of local refinement: trace the midpoint characteristic.
    const double mid_foot = 0.5 * (feet[a] + feet[a + 1]);
    auto [xm, Jm] = integrate_v_characteristic(*spec_, region, mid_foot, grid, t);
    Hermite sub = xq <= xm ? Hermite{feet[a], mid_foot - feet[a], H.x0, xm, H.d0, Jm}
                           : Hermite{mid_foot, feet[a + 1] - mid_foot, xm, H.x1, Jm, H.d1};
    const double r2 = std::max(sub.d0, sub.d1) / std::min(sub.d0, sub.d1);
    if (r2 > kJacobianRatioLimit)
      throw NumericalError("v fan too coarse near x=" + fmt(xq) + ", t=" + fmt(t));
    H = sub;
  }
  const double s = H.invert(xq);
  out.foot = H.a + s * H.h;
  out.jacobian = H.slope(s);
  out.value = (*data_)(out.foot);
  out.value_x = data_->derivative(out.foot) / out.jacobian;
  out.weight = (xq - pos(a)) / std::max(pos(a + 1) - pos(a), 1e-300);
  return out;
}

FanSample v0_eval(const CharField& fan, double x, double t) { return fan.eval(x, t); }

void CharField::write_csv(std::ostream& os) const {
  os << "region,family,xi,t,x,J,value\n";
  char line[256];
  for (std::size_t j = 0; j < feet.size(); ++j) {
    for (int k = 0; k <= grid.steps; ++k) {
      if (!alive(k, j)) break;
      std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", region_name(region),
                    family == Family::U ? "u" : "v", feet[j], grid.t(k), x(k, j), jacobian(k, j),
                    values[j]);
      os << line;
    }
  }
}

} // namespace shockexp
