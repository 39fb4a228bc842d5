#include "shockexp/corrections.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <string>

namespace shockexp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

const InitialPiece& u_data(const ProblemSpec& spec, Region region) {
  return region == Region::OuterLeft ? spec.initial.u_left : spec.initial.u_right;
}

} // namespace

// ---------------------------------------------------------------------------
// Outer u correction

OuterCorrectionU build_u1(const ProblemSpec& spec, Region region, const CharField& v_fan) {
  const auto& c = spec.coeff;
  const InitialPiece& data = u_data(spec, region);
  OuterCorrectionU out;
  out.region = region;
  out.grid = v_fan.grid;

  for (double xi : fan_feet(spec.numerics.fan_count, fan_spread(spec))) {
    try {
      const double u = data(xi);
      const double sl = data.derivative(xi);
      const double sp = c.lambda(u);
      out.feet.push_back(xi);
      out.u0.push_back(u);
      out.slope.push_back(sl);
      out.speed.push_back(sp);
    } catch (const EvalError&) {
    }
  }
  const std::size_t n = out.feet.size();
  if (n < 2) throw NumericalError("u correction fan has fewer than two valid feet");
  const TimeGrid& g = out.grid;
  out.w_.assign(static_cast<std::size_t>(g.steps + 1) * n, std::numeric_limits<double>::quiet_NaN());
  out.alive_until_.assign(n, g.steps);

  for (std::size_t j = 0; j < n; ++j) {
    const double u = out.u0[j];
    const double lu = c.lambda_u(u);
    const double sl = out.slope[j];
    auto source = [&](double t) {
      const double x = out.x(j, t);
      const double v0 = v_fan.eval(x, t).value;
      return c.f(u, v0);
    };
    auto decay = [&](double t) {
      const double den = 1.0 + t * lu * sl;
      if (!(den > 0.0)) throw NumericalError("u characteristics focus");
      return -lu * sl / den;
    };
    double w = 0.0;
    out.w_[j] = w;
    try {
      double f_now = source(0.0);
      double a_now = decay(0.0);
      for (int k = 0; k < g.steps; ++k) {
        const double t = g.t(k), h = g.dt;
        const double f_mid = source(t + 0.5 * h), a_mid = decay(t + 0.5 * h);
        const double f_end = source(t + h), a_end = decay(t + h);
        const double k1 = a_now * w + f_now;
        const double k2 = a_mid * (w + 0.5 * h * k1) + f_mid;
        const double k3 = a_mid * (w + 0.5 * h * k2) + f_mid;
        const double k4 = a_end * (w + h * k3) + f_end;
        w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        out.w_[(k + 1) * n + j] = w;
        f_now = f_end;
        a_now = a_end;
      }
    } catch (const std::exception&) {
      int last = 0;
      while (last < g.steps && std::isfinite(out.w_[(last + 1) * n + j])) ++last;
      out.alive_until_[j] = last;
    }
  }
  // Lines are monotone in xi for all t in [0, T] iff they are at t=0 and t=T.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (!(out.x(j + 1, g.horizon()) > out.x(j, g.horizon())))
      throw NumericalError(std::string("u characteristics focus in ") + region_name(region) +
                           " near foot " + fmt(out.feet[j]));
  }
  return out;
}

double OuterCorrectionU::eval(double xq, double t) const {
  const std::size_t n = feet.size();
  const int k = grid.level_below(t);
  const double th = std::clamp((t - grid.t(k)) / grid.dt, 0.0, 1.0);
  if (xq < x(0, t) || xq > x(n - 1, t))
    throw NumericalError("point x=" + fmt(xq) + ", t=" + fmt(t) + " outside the " +
                         region_name(region) + " u-correction hull");
  std::size_t a = 0, b = n - 1;
  while (b - a > 1) {
    const std::size_t m = (a + b) / 2;
    if (x(m, t) <= xq) a = m;
    else b = m;
  }
  if (!(alive(k + 1, a) && alive(k + 1, a + 1)))
    throw NumericalError("point x=" + fmt(xq) + ", t=" + fmt(t) + " outside the live " +
                         region_name(region) + " u-correction hull");
  auto wt = [&](std::size_t j) { return (1.0 - th) * w(k, j) + th * w(k + 1, j); };
  const double xa = x(a, t), xb = x(a + 1, t);
  const double s = xb > xa ? (xq - xa) / (xb - xa) : 0.0;
  return (1.0 - s) * wt(a) + s * wt(a + 1);
}

void OuterCorrectionU::write_csv(std::ostream& os) const {
  os << "region,family,xi,t,x,u1\n";
  char line[256];
  for (std::size_t j = 0; j < feet.size(); ++j) {
    for (int k = 0; k <= grid.steps; ++k) {
      if (!alive(k, j)) break;
      std::snprintf(line, sizeof line, "%s,u,%.17g,%.17g,%.17g,%.17g\n", region_name(region),
                    feet[j], grid.t(k), x(j, grid.t(k)), w(k, j));
      os << line;
    }
  }
}

// ---------------------------------------------------------------------------
// Outer v correction

OuterCorrectionV build_v1(const ProblemSpec& spec, Region region, const CharField& v_fan,
                          const OuterCorrectionU& u1) {
  const auto& c = spec.coeff;
  OuterCorrectionV out;
  out.region = region;
  out.fan = &v_fan;
  const std::size_t n = v_fan.curve_count();
  const TimeGrid& g = v_fan.grid;
  out.w_.assign(static_cast<std::size_t>(g.steps + 1) * n, std::numeric_limits<double>::quiet_NaN());
  out.alive_until_.assign(n, g.steps);
  OuterUField uf(spec, region);

  for (std::size_t j = 0; j < n; ++j) {
    const double val = v_fan.values[j];
    const double sl = v_fan.slopes[j];
    double guess = v_fan.feet[j];
    // Same RK4 as the fan itself, with the correction w carried alongside.
    auto rhs = [&](double t, double x, double J, double w, double& dx, double& dJ, double& dw) {
      UState us = uf.eval(x, t, guess);
      guess = us.foot;
      const double mu_u = c.mu_u(us.u0, val), mu_v = c.mu_v(us.u0, val);
      dx = c.mu(us.u0, val);
      dJ = mu_u * us.u0_x * J + mu_v * sl;
      const double v0x = sl / J;
      const double u1v = u1.eval(x, t);
      dw = -mu_v * v0x * w - mu_u * v0x * u1v + c.g(us.u0, val);
    };
    double x = v_fan.feet[j], J = 1.0, w = 0.0;
    out.w_[j] = 0.0;
    int k = 0;
    try {
      for (; k < g.steps && v_fan.alive(k + 1, j); ++k) {
        const double t = g.t(k), h = g.dt;
        double k1x, k1J, k1w, k2x, k2J, k2w, k3x, k3J, k3w, k4x, k4J, k4w;
        rhs(t, x, J, w, k1x, k1J, k1w);
        rhs(t + 0.5 * h, x + 0.5 * h * k1x, J + 0.5 * h * k1J, w + 0.5 * h * k1w, k2x, k2J, k2w);
        rhs(t + 0.5 * h, x + 0.5 * h * k2x, J + 0.5 * h * k2J, w + 0.5 * h * k2w, k3x, k3J, k3w);
        rhs(t + h, x + h * k3x, J + h * k3J, w + h * k3w, k4x, k4J, k4w);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        J += h / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
        w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
        out.w_[(k + 1) * n + j] = w;
      }
    } catch (const std::exception&) {
    }
    out.alive_until_[j] = k;
  }
  return out;
}

double OuterCorrectionV::eval(double xq, double t) const {
  const FanSample s = fan->eval(xq, t);
  const TimeGrid& g = fan->grid;
  const int k = g.level_below(t);
  const double th = std::clamp((t - g.t(k)) / g.dt, 0.0, 1.0);
  const std::size_t a = static_cast<std::size_t>(s.lower);
  if (!(alive(k + 1, a) && alive(k + 1, a + 1)))
    throw NumericalError("point x=" + fmt(xq) + ", t=" + fmt(t) + " outside the live " +
                         region_name(region) + " v-correction hull");
  auto wt = [&](std::size_t j) { return (1.0 - th) * w(k, j) + th * w(k + 1, j); };
  const double fa = fan->feet[a], fb = fan->feet[a + 1];
  const double r = (s.foot - fa) / (fb - fa);
  return (1.0 - r) * wt(a) + r * wt(a + 1);
}

void OuterCorrectionV::write_csv(std::ostream& os) const {
  os << "region,family,xi,t,x,v1\n";
  char line[256];
  const TimeGrid& g = fan->grid;
  for (std::size_t j = 0; j < fan->curve_count(); ++j) {
    for (int k = 0; k <= g.steps; ++k) {
      if (!alive(k, j)) break;
      std::snprintf(line, sizeof line, "%s,v,%.17g,%.17g,%.17g,%.17g\n", region_name(region),
                    fan->feet[j], g.t(k), fan->x(k, j), w(k, j));
      os << line;
    }
  }
}

std::shared_ptr<const OuterFields> build_outer_fields(const ProblemSpec& spec) {
  auto out = std::make_shared<OuterFields>(spec);
  auto build_region = [&spec](Region r, CharField& fan, OuterCorrectionU& u1, OuterCorrectionV& v1) {
    fan = build_v_fan(spec, r);
    u1 = build_u1(spec, r, fan);
    v1 = build_v1(spec, r, fan, u1);
  };
  auto left = std::async(std::launch::async, build_region, Region::OuterLeft, std::ref(out->v_left),
                         std::ref(out->u1_left), std::ref(out->v1_left));
  build_region(Region::OuterRight, out->v_right, out->u1_right, out->v1_right);
  left.get();
  return out;
}

// ---------------------------------------------------------------------------
// Profiles and inner history

void Profile::clear() {
  x_.clear();
  val_.clear();
  slope_.clear();
  has_slope_ = false;
}

void Profile::reserve(std::size_t n) {
  x_.reserve(n);
  val_.reserve(n);
}

void Profile::push(double x, double value) {
  if (!x_.empty()) {
    if (std::abs(x - x_.back()) <= 1e-13 * (1.0 + std::abs(x))) return;
    if (x < x_.back())
      throw NumericalError("inner characteristics cross near x=" + fmt(x));
  }
  x_.push_back(x);
  val_.push_back(value);
}

void Profile::push(double x, double value, double slope) {
  const std::size_t before = x_.size();
  push(x, value);
  if (x_.size() != before) {
    slope_.push_back(slope);
    has_slope_ = true;
  }
}

double Profile::eval(double xq) const {
  const std::size_t n = x_.size();
  if (n == 0) throw NumericalError("empty inner profile");
  const bool hermite = has_slope_ && slope_.size() == n;
  if (n == 1) return val_[0] + (hermite ? slope_[0] * (xq - x_[0]) : 0.0);
  if (xq <= x_[0] || xq >= x_[n - 1]) {
    const bool left = xq <= x_[0];
    const std::size_t e = left ? 0 : n - 1;
    if (hermite) return val_[e] + slope_[e] * (xq - x_[e]);
    const std::size_t o = left ? 1 : n - 2;
    const double sec = (val_[o] - val_[e]) / (x_[o] - x_[e]);
    return val_[e] + sec * (xq - x_[e]);
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
  const std::size_t b = static_cast<std::size_t>(it - x_.begin());
  const std::size_t a = b - 1;
  const double h = x_[b] - x_[a];
  const double s = (xq - x_[a]) / h;
  if (!hermite) return (1.0 - s) * val_[a] + s * val_[b];
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * val_[a] + (s3 - 2 * s2 + s) * h * slope_[a] +
         (-2 * s3 + 3 * s2) * val_[b] + (s3 - s2) * h * slope_[b];
}

InnerFieldHistory::Values InnerFieldHistory::eval(double x, double t) const {
  if (snapshots.empty()) throw NumericalError("no inner snapshots stored");
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (t < snapshots.front().t - tol || t > snapshots.back().t + tol)
    throw NumericalError("t=" + fmt(t) + " outside the stored inner snapshots");
  auto at = [&](const InnerSnapshot& s) {
    Values v;
    v.u1 = s.u1.eval(x);
    v.v0 = s.v0.eval(x);
    v.v0_x = s.v0_x.eval(x);
    v.v1 = s.v1.eval(x);
    return v;
  };
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), t,
                             [](const InnerSnapshot& s, double tv) { return s.t < tv; });
  if (it == snapshots.end()) return at(snapshots.back());
  if (std::abs(it->t - t) <= tol || it == snapshots.begin()) return at(*it);
  const InnerSnapshot& hi = *it;
  const InnerSnapshot& lo = *(it - 1);
  const double th = (t - lo.t) / (hi.t - lo.t);
  const Values a = at(lo), b = at(hi);
  Values v;
  v.u1 = (1 - th) * a.u1 + th * b.u1;
  v.v0 = (1 - th) * a.v0 + th * b.v0;
  v.v0_x = (1 - th) * a.v0_x + th * b.v0_x;
  v.v1 = (1 - th) * a.v1 + th * b.v1;
  return v;
}

FieldRegion locate(const FirstOrderFields& f, double x, double t) {
  if (x < f.minus->position(t, f.epsilon)) return FieldRegion::OuterLeft;
  if (x > f.plus->position(t, f.epsilon)) return FieldRegion::OuterRight;
  return FieldRegion::Inner;
}

FirstOrderValues eval_first_order(const FirstOrderFields& f, double x, double t) {
  switch (locate(f, x, t)) {
  case FieldRegion::OuterLeft:
    return {f.outer->u1_left.eval(x, t), f.outer->v1_left.eval(x, t)};
  case FieldRegion::OuterRight:
    return {f.outer->u1_right.eval(x, t), f.outer->v1_right.eval(x, t)};
  case FieldRegion::Inner: {
    const auto v = f.inner->eval(x, t);
    return {v.u1, v.v1};
  }
  }
  return {};
}

} // namespace shockexp
