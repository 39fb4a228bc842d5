#include "shockexp/hugoniot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "shockexp/errors.hpp"

namespace shockexp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Hermite {
  double value, slope;
};

Hermite hermite(double t0, double h, double y0, double d0, double y1, double d1, double t) {
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double v = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
                   (s3 - s2) * h * d1;
  const double dv = ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * h * d0 + (-6 * s2 + 6 * s) * y1 +
                     (3 * s2 - 2 * s) * h * d1) /
                    h;
  return {v, dv};
}

Hermite sample(const TimeGrid& g, const std::vector<double>& y, const std::vector<double>& d, double t) {
  if (y.empty()) throw NumericalError("empty shock curve");
  if (y.size() == 1) return {y[0], d[0]};
  const int last = static_cast<int>(y.size()) - 1;
  const double tc = std::clamp(t, 0.0, g.t(last));
  const int k = std::min(g.level_below(tc), last - 1);
  return hermite(g.t(k), g.dt, y[k], d[k], y[k + 1], d[k + 1], tc);
}

template <class R>
double solve_linear(R residual, const char* what) {
  const double r0 = residual(0.0);
  const double a = residual(1.0) - r0;
  if (!(std::abs(a) > kJumpGuard))
    throw NumericalError(std::string(what) + ": degenerate coefficient " + fmt(a));
  return -r0 / a;
}

double at_level(const std::vector<double>& y, const TimeGrid& g, double t) {
  if (y.empty()) return kNaN;
  const int last = static_cast<int>(y.size()) - 1;
  if (last == 0) return y[0];
  const double tc = std::clamp(t, 0.0, g.t(last));
  const int k = std::min(g.level_below(tc), last - 1);
  const double th = (tc - g.t(k)) / g.dt;
  return (1 - th) * y[k] + th * y[k + 1];
}

/// Outer traces and inner leading values at x = s0 of one shock. Inner
/// first-order traces are left to the caller.
TraceSet outer_traces(const OuterFields& o, Side side, double t, double s0, double D0, double v0_in,
                      double v0_x_in) {
  TraceSet tr;
  tr.side = side;
  tr.t = t;
  tr.s0 = s0;
  tr.D0 = D0;
  if (side == Side::Minus) {
    const UState out = o.u_left.eval(s0, t);
    const UState in = o.u_right.eval(s0, t);
    const FanSample vs = o.v_left.eval(s0, t);
    tr.u0 = out.u0;
    tr.u0_x = out.u0_x;
    tr.u0_in = in.u0;
    tr.u0_x_in = in.u0_x;
    tr.v0 = vs.value;
    tr.v0_x = vs.value_x;
    tr.u1 = o.u1_left.eval(s0, t);
    tr.v1 = o.v1_left.eval(s0, t);
  } else {
    const UState u = o.u_right.eval(s0, t);
    const FanSample vs = o.v_right.eval(s0, t);
    tr.u0 = tr.u0_in = u.u0;
    tr.u0_x = tr.u0_x_in = u.u0_x;
    tr.v0 = vs.value;
    tr.v0_x = vs.value_x;
    tr.u1 = o.u1_right.eval(s0, t);
    tr.v1 = o.v1_right.eval(s0, t);
  }
  tr.v0_in = v0_in;
  tr.v0_x_in = v0_x_in;
  return tr;
}

double plus_speed(const Coefficients& c, double u, double v_out, double v_in) {
  const double dphi = c.Phi(u, v_out) - c.Phi(u, v_in);
  if (!(std::abs(dphi) > kJumpGuard)) throw NumericalError("plus shock: jump of Phi collapsed");
  return (c.Psi(u, v_out) - c.Psi(u, v_in)) / dphi;
}

} // namespace

// ---------------------------------------------------------------------------
// Shock curves

double ShockCurve::leading(double t) const { return sample(grid, s0, D0, t).value; }
double ShockCurve::correction(double t) const { return sample(grid, s1, D1, t).value; }
double ShockCurve::leading_speed(double t) const { return sample(grid, s0, D0, t).slope; }
double ShockCurve::correction_speed(double t) const { return sample(grid, s1, D1, t).slope; }

// ---------------------------------------------------------------------------
// First-order jump conditions

double u_jump_residual(const Coefficients& c, const TraceSet& tr, double s1, double D1) {
  const double Uo = tr.u1 + tr.u0_x * s1;
  const double Ui = tr.u1_in + tr.u0_x_in * s1;
  return D1 * (tr.u0 - tr.u0_in) + tr.D0 * (Uo - Ui) -
         (c.Lambda_u(tr.u0) * Uo - c.Lambda_u(tr.u0_in) * Ui);
}

double phi_jump_residual(const Coefficients& c, const TraceSet& tr, double s1, double D1) {
  const double Uo = tr.u1 + tr.u0_x * s1, Ui = tr.u1_in + tr.u0_x_in * s1;
  const double Vo = tr.v1 + tr.v0_x * s1, Vi = tr.v1_in + tr.v0_x_in * s1;
  const double uo = tr.u0, vo = tr.v0, ui = tr.u0_in, vi = tr.v0_in;
  const double dphi = c.Phi(uo, vo) - c.Phi(ui, vi);
  const double lin_phi = c.Phi_u(uo, vo) * Uo + c.Phi_v(uo, vo) * Vo - c.Phi_u(ui, vi) * Ui -
                         c.Phi_v(ui, vi) * Vi;
  const double lin_psi = c.Psi_u(uo, vo) * Uo + c.Psi_v(uo, vo) * Vo - c.Psi_u(ui, vi) * Ui -
                         c.Psi_v(ui, vi) * Vi;
  return D1 * dphi + tr.D0 * lin_phi - lin_psi;
}

double step1_inner_u1_boundary(const Coefficients& c, const TraceSet& plus, double s1_plus) {
  if (std::abs(plus.u0 - plus.u0_in) > kJumpGuard)
    throw NumericalError("step 1: u0 is not continuous at the plus shock");
  TraceSet tr = plus;
  return solve_linear(
      [&](double x) {
        tr.u1_in = x;
        return u_jump_residual(c, tr, s1_plus, 0.0);
      },
      "step 1");
}

double step3_D1_minus(const Coefficients& c, const TraceSet& minus, double s1_minus) {
  if (!std::isfinite(minus.u1_in)) throw NumericalError("step 3: inner u1 trace missing");
  return solve_linear([&](double d) { return u_jump_residual(c, minus, s1_minus, d); }, "step 3");
}

double step4_inner_v1_boundary(const Coefficients& c, const TraceSet& minus, double s1_minus,
                               double D1_minus) {
  if (!std::isfinite(minus.u1_in)) throw NumericalError("step 4: inner u1 trace missing");
  TraceSet tr = minus;
  return solve_linear(
      [&](double x) {
        tr.v1_in = x;
        return phi_jump_residual(c, tr, s1_minus, D1_minus);
      },
      "step 4");
}

double step6_D1_plus(const Coefficients& c, const TraceSet& plus, double s1_plus) {
  if (!std::isfinite(plus.u1_in) || !std::isfinite(plus.v1_in))
    throw NumericalError("step 6: inner traces missing");
  return solve_linear([&](double d) { return phi_jump_residual(c, plus, s1_plus, d); }, "step 6");
}

// ---------------------------------------------------------------------------
// Leading march

LeadingMarcher::LeadingMarcher(const OuterFields& outer)
    : outer_(&outer), grid_(outer.v_left.grid) {
  try {
    finish_level();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("leading march at t=0: ") + e.what());
  }
}

LeadingMarcher::MinusData LeadingMarcher::minus_boundary(double t, double sm) const {
  const auto& c = outer_->spec->coeff;
  const UState uo = outer_->u_left.eval(sm, t);
  const UState ui = outer_->u_right.eval(sm, t);
  const double jump = uo.u0 - ui.u0;
  if (!(std::abs(jump) > kJumpGuard)) throw NumericalError("minus shock: jump of u collapsed");
  const double D = (c.Lambda(uo.u0) - c.Lambda(ui.u0)) / jump;
  const FanSample vs = outer_->v_left.eval(sm, t);
  const double vo = vs.value;
  const double vi = minus_inner_v(c, uo.u0, vo, ui.u0, D, std::isfinite(v_guess_) ? v_guess_ : vo);
  v_guess_ = vi;

  // Implicit differentiation of
  //   G = D(uo, ui) (Phi(uo, vo) - Phi(ui, vi)) - (Psi(uo, vo) - Psi(ui, vi)) = 0
  // along the shock, where each outer quantity q changes at the rate
  // (D - speed) q_x.
  const double dphi = c.Phi(uo.u0, vo) - c.Phi(ui.u0, vi);
  const double D_uo = (c.lambda(uo.u0) - D) / jump;
  const double D_ui = (D - c.lambda(ui.u0)) / jump;
  const double G_vi = c.Psi_v(ui.u0, vi) - D * c.Phi_v(ui.u0, vi);
  const double G_vo = D * c.Phi_v(uo.u0, vo) - c.Psi_v(uo.u0, vo);
  const double G_uo = D_uo * dphi + D * c.Phi_u(uo.u0, vo) - c.Psi_u(uo.u0, vo);
  const double G_ui = D_ui * dphi - D * c.Phi_u(ui.u0, vi) + c.Psi_u(ui.u0, vi);
  if (!(std::abs(G_vi) > kJumpGuard))
    throw NumericalError("minus shock: inner v characteristics tangent to the shock");
  const double duo = (D - c.lambda(uo.u0)) * uo.u0_x;
  const double dui = (D - c.lambda(ui.u0)) * ui.u0_x;
  const double dvo = (D - c.mu(uo.u0, vo)) * vs.value_x;
  const double dvi = -(G_uo * duo + G_ui * dui + G_vo * dvo) / G_vi;
  const double gap = D - c.mu(ui.u0, vi);
  if (!(std::abs(gap) > kJumpGuard))
    throw NumericalError("minus shock: inner v characteristics tangent to the shock");
  return {D, vi, dvi / gap};
}

void LeadingMarcher::rates(double t, const Stage& y, Stage& dy, double* Dm, double* Dp) const {
  const auto& c = outer_->spec->coeff;
  const MinusData mb = minus_boundary(t, y.sm);
  const std::size_t n = curves_.size();
  dy.x.resize(n);
  dy.p.resize(n);
  Profile prof;
  prof.reserve(n + 1);
  prof.push(y.sm, mb.v, mb.p);
  for (std::size_t i = n; i-- > 0;) prof.push(y.x[i], curves_[i].v0, y.p[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const UState us = outer_->u_right.eval(y.x[i], t, curves_[i].foot);
    const double v = curves_[i].v0;
    dy.x[i] = c.mu(us.u0, v);
    dy.p[i] = -(c.mu_u(us.u0, v) * us.u0_x + c.mu_v(us.u0, v) * y.p[i]) * y.p[i];
  }
  const UState up = outer_->u_right.eval(y.sp, t);
  const double v_out = outer_->v_right.eval(y.sp, t).value;
  dy.sm = mb.D;
  dy.sp = plus_speed(c, up.u0, v_out, prof.eval(y.sp));
  if (Dm) *Dm = dy.sm;
  if (Dp) *Dp = dy.sp;
}

void LeadingMarcher::finish_level() {
  const auto& c = outer_->spec->coeff;
  const double t = grid_.t(level_);
  const MinusData mb = minus_boundary(t, s_minus_);
  D_minus_ = mb.D;
  InnerVCurve nc;
  nc.launch = level_;
  nc.x = s_minus_;
  nc.p = mb.p;
  nc.v0 = mb.v;
  nc.foot = kNaN;
  curves_.push_back(nc);
  for (auto& cv : curves_) {
    const UState us = outer_->u_right.eval(cv.x, t, cv.foot);
    cv.u0 = us.u0;
    cv.u0_x = us.u0_x;
    cv.foot = us.foot;
  }
  v0_profile_.clear();
  vx_profile_.clear();
  v0_profile_.reserve(curves_.size());
  vx_profile_.reserve(curves_.size());
  for (auto it = curves_.rbegin(); it != curves_.rend(); ++it) {
    v0_profile_.push(it->x, it->v0, it->p);
    vx_profile_.push(it->x, it->p);
  }
  const UState up = outer_->u_right.eval(s_plus_, t);
  const double v_out = outer_->v_right.eval(s_plus_, t).value;
  D_plus_ = plus_speed(c, up.u0, v_out, v0_profile_.eval(s_plus_));

  // Keep at least two curves beyond s+ plus a margin so that the plus
  // shock stays inside the interpolation range.
  const double margin = 0.1 * (s_plus_ - s_minus_);
  while (curves_.size() > 3 && curves_[2].x > s_plus_ + margin) curves_.pop_front();
}

void LeadingMarcher::advance() {
  if (level_ >= grid_.steps) throw NumericalError("leading march beyond the horizon");
  const double t = grid_.t(level_), h = grid_.dt;
  const std::size_t n = curves_.size();
  Stage y0;
  y0.sm = s_minus_;
  y0.sp = s_plus_;
  y0.x.resize(n);
  y0.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y0.x[i] = curves_[i].x;
    y0.p[i] = curves_[i].p;
  }
  auto shift = [&](const Stage& d, double a) {
    Stage y = y0;
    y.sm += a * d.sm;
    y.sp += a * d.sp;
    for (std::size_t i = 0; i < n; ++i) {
      y.x[i] += a * d.x[i];
      y.p[i] += a * d.p[i];
    }
    return y;
  };
  try {
    Stage k1, k2, k3, k4;
    rates(t, y0, k1, nullptr, nullptr);
    rates(t + 0.5 * h, shift(k1, 0.5 * h), k2, nullptr, nullptr);
    rates(t + 0.5 * h, shift(k2, 0.5 * h), k3, nullptr, nullptr);
    rates(t + h, shift(k3, h), k4, nullptr, nullptr);
    s_minus_ += h / 6 * (k1.sm + 2 * k2.sm + 2 * k3.sm + k4.sm);
    s_plus_ += h / 6 * (k1.sp + 2 * k2.sp + 2 * k3.sp + k4.sp);
    for (std::size_t i = 0; i < n; ++i) {
      curves_[i].x += h / 6 * (k1.x[i] + 2 * k2.x[i] + 2 * k3.x[i] + k4.x[i]);
      curves_[i].p += h / 6 * (k1.p[i] + 2 * k2.p[i] + 2 * k3.p[i] + k4.p[i]);
    }
    ++level_;
    if (!(s_minus_ < s_plus_)) throw NumericalError("shocks meet");
    finish_level();
  } catch (const NumericalError& e) {
    throw NumericalError("leading march at t=" + fmt(t) + " (level " + std::to_string(level_) +
                         "): " + e.what());
  }
}

namespace {

int snapshot_stride(const ProblemSpec& spec, const TimeGrid& g) {
  return std::max(1, g.steps / std::max(1, spec.numerics.inner_snapshots));
}

bool record_level(int level, int stride, const TimeGrid& g) {
  return level % stride == 0 || level == g.steps;
}

ShockCurve empty_curve(Side side, const TimeGrid& g) {
  ShockCurve c;
  c.side = side;
  c.grid = g;
  const std::size_t n = static_cast<std::size_t>(g.steps + 1);
  c.s0.reserve(n);
  c.D0.reserve(n);
  c.s1.reserve(n);
  c.D1.reserve(n);
  return c;
}

} // namespace

LeadingSolution solve_leading(const OuterFields& outer) {
  LeadingMarcher m(outer);
  const TimeGrid& g = m.grid();
  const int stride = snapshot_stride(*outer.spec, g);
  LeadingSolution out;
  out.minus = empty_curve(Side::Minus, g);
  out.plus = empty_curve(Side::Plus, g);
  for (;;) {
    out.minus.s0.push_back(m.s_minus());
    out.minus.D0.push_back(m.D_minus());
    out.plus.s0.push_back(m.s_plus());
    out.plus.D0.push_back(m.D_plus());
    out.minus.s1.push_back(0.0);
    out.minus.D1.push_back(0.0);
    out.plus.s1.push_back(0.0);
    out.plus.D1.push_back(0.0);
    if (record_level(m.level(), stride, g)) {
      InnerSnapshot s;
      s.t = m.t();
      s.level = m.level();
      s.v0 = m.v0_profile();
      s.v0_x = m.v0_x_profile();
      out.snapshots.push_back(std::move(s));
    }
    if (m.level() == g.steps) break;
    m.advance();
  }
  return out;
}

// ---------------------------------------------------------------------------
// First-order march

namespace {

/// Inner u-characteristic launched from the plus shock. It is a straight
/// line of the right problem, so its leading data are known in closed form.
struct InnerUCurve {
  int launch = 0;
  double foot = 0.0, speed = 0.0, u0 = 0.0, lu = 0.0, slope = 0.0;
  double w = 0.0, w_start = 0.0, rate = 0.0, rate_start = 0.0;

  double x(double t) const { return foot + speed * t; }
  double u0_x(double t) const {
    const double den = 1.0 + t * lu * slope;
    if (!(den > 0.0)) throw NumericalError("inner u characteristics focus");
    return slope / den;
  }
};

class FirstOrderMarch {
public:
  FirstOrderMarch(std::shared_ptr<const OuterFields> outer, const InnerBoundaryData* boundary)
      : outer_(std::move(outer)), c_(outer_->spec->coeff), boundary_(boundary), lead_(*outer_) {
    const TimeGrid& g = lead_.grid();
    const std::size_t n = static_cast<std::size_t>(g.steps + 1);
    vw_.assign(n, 0.0);
    vw_start_.assign(n, 0.0);
    vrate_.assign(n, 0.0);
    vrate_start_.assign(n, 0.0);
  }

  std::shared_ptr<const ExpansionData> run();

private:
  struct ChainOut {
    double u1_in_plus = 0, u1_in_minus = 0, D1m = 0, v1_in_minus = 0, v1_in_plus = 0, D1p = 0;
  };

  void launch_u_curve();
  ChainOut chain(double s1m, double s1p);
  void compute_rates();
  Profile u1_profile(double t) const;
  Profile v1_profile() const;
  void record(const ChainOut& co, double s1m, double s1p);

  template <class F>
  auto guarded(const char* step, F f) {
    try {
      return f();
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(step) + ": " + e.what());
    } catch (const EvalError& e) {
      throw NumericalError(std::string(step) + ": " + e.what());
    }
  }

  std::shared_ptr<const OuterFields> outer_;
  const Coefficients& c_;
  const InnerBoundaryData* boundary_;
  LeadingMarcher lead_;
  std::deque<InnerUCurve> ucurves_;
  std::vector<double> vw_, vw_start_, vrate_, vrate_start_; // indexed by v-curve launch level
  std::shared_ptr<ExpansionData> out_;
};

void FirstOrderMarch::launch_u_curve() {
  const double t = lead_.t();
  const UState us = outer_->u_right.eval(lead_.s_plus(), t,
                                         ucurves_.empty() ? kNaN : ucurves_.back().foot);
  InnerUCurve cv;
  cv.launch = lead_.level();
  cv.foot = us.foot;
  cv.u0 = us.u0;
  cv.speed = c_.lambda(us.u0);
  cv.lu = c_.lambda_u(us.u0);
  cv.slope = outer_->u_right.data().derivative(us.foot);
  if (outer_->spec->initial.u_right.value.is_constant()) cv.slope = 0.0;
  ucurves_.push_back(cv);
}

Profile FirstOrderMarch::u1_profile(double t) const {
  Profile p;
  p.reserve(ucurves_.size());
  for (const auto& cv : ucurves_) p.push(cv.x(t), cv.w);
  return p;
}

Profile FirstOrderMarch::v1_profile() const {
  Profile p;
  const auto& cs = lead_.curves();
  p.reserve(cs.size());
  for (auto it = cs.rbegin(); it != cs.rend(); ++it) p.push(it->x, vw_[it->launch]);
  return p;
}

FirstOrderMarch::ChainOut FirstOrderMarch::chain(double s1m, double s1p) {
  const OuterFields& o = *outer_;
  const double t = lead_.t();
  const double sm = lead_.s_minus(), sp = lead_.s_plus();
  ChainOut co;

  TraceSet plus = guarded("step 1", [&] {
    return outer_traces(o, Side::Plus, t, sp, lead_.D_plus(), lead_.v0_profile().eval(sp),
                        lead_.v0_x_profile().eval(sp));
  });
  co.u1_in_plus = guarded("step 1", [&] {
    return boundary_ ? boundary_->u1_plus(t) : step1_inner_u1_boundary(c_, plus, s1p);
  });
  ucurves_.back().w = co.u1_in_plus;

  const Profile up = guarded("step 2", [&] { return u1_profile(t); });
  co.u1_in_minus = up.eval(sm);

  const auto& vcs = lead_.curves();
  TraceSet minus = guarded("step 3", [&] {
    return outer_traces(o, Side::Minus, t, sm, lead_.D_minus(), vcs.back().v0, vcs.back().p);
  });
  minus.u1_in = co.u1_in_minus;
  co.D1m = guarded("step 3", [&] { return step3_D1_minus(c_, minus, s1m); });

  co.v1_in_minus = guarded("step 4", [&] {
    return boundary_ ? boundary_->v1_minus(t) : step4_inner_v1_boundary(c_, minus, s1m, co.D1m);
  });
  vw_[vcs.back().launch] = co.v1_in_minus;

  co.v1_in_plus = guarded("step 5", [&] { return v1_profile().eval(sp); });

  plus.u1_in = co.u1_in_plus;
  plus.v1_in = co.v1_in_plus;
  co.D1p = guarded("step 6", [&] { return step6_D1_plus(c_, plus, s1p); });

  guarded("inner transport", [&] {
    compute_rates();
    return 0;
  });
  return co;
}

void FirstOrderMarch::compute_rates() {
  const double t = lead_.t();
  const Profile& v0p = lead_.v0_profile();
  for (auto& cv : ucurves_) {
    const double v0 = v0p.eval(cv.x(t));
    cv.rate = -cv.lu * cv.u0_x(t) * cv.w + c_.f(cv.u0, v0);
  }
  const Profile up = u1_profile(t);
  for (const auto& cv : lead_.curves()) {
    const double mu_u = c_.mu_u(cv.u0, cv.v0), mu_v = c_.mu_v(cv.u0, cv.v0);
    const double w = vw_[cv.launch];
    vrate_[cv.launch] = -mu_v * cv.p * w - mu_u * cv.p * up.eval(cv.x) + c_.g(cv.u0, cv.v0);
  }
}

void FirstOrderMarch::record(const ChainOut& co, double s1m, double s1p) {
  out_->minus.s0.push_back(lead_.s_minus());
  out_->minus.D0.push_back(lead_.D_minus());
  out_->minus.s1.push_back(s1m);
  out_->minus.D1.push_back(co.D1m);
  out_->plus.s0.push_back(lead_.s_plus());
  out_->plus.D0.push_back(lead_.D_plus());
  out_->plus.s1.push_back(s1p);
  out_->plus.D1.push_back(co.D1p);
  auto& b = out_->boundary;
  b.u1_in_plus.push_back(co.u1_in_plus);
  b.u1_in_minus.push_back(co.u1_in_minus);
  b.v1_in_minus.push_back(co.v1_in_minus);
  b.v1_in_plus.push_back(co.v1_in_plus);
}

std::shared_ptr<const ExpansionData> FirstOrderMarch::run() {
  const TimeGrid g = lead_.grid();
  const int stride = snapshot_stride(*outer_->spec, g);
  out_ = std::make_shared<ExpansionData>();
  out_->outer = outer_;
  out_->minus = empty_curve(Side::Minus, g);
  out_->plus = empty_curve(Side::Plus, g);

  double s1m = 0.0, s1p = 0.0;
  auto fail = [&](const std::exception& e) {
    return NumericalError("first-order march failed at t=" + fmt(lead_.t()) + " (level " +
                          std::to_string(lead_.level()) + "), " + e.what());
  };
  auto commit = [&] {
    for (auto& cv : ucurves_) {
      cv.w_start = cv.w;
      cv.rate_start = cv.rate;
    }
    for (const auto& cv : lead_.curves()) {
      vw_start_[cv.launch] = vw_[cv.launch];
      vrate_start_[cv.launch] = vrate_[cv.launch];
    }
  };
  auto snapshot = [&] {
    if (!record_level(lead_.level(), stride, g)) return;
    InnerSnapshot s;
    s.t = lead_.t();
    s.level = lead_.level();
    s.u1 = u1_profile(s.t);
    s.v0 = lead_.v0_profile();
    s.v0_x = lead_.v0_x_profile();
    s.v1 = v1_profile();
    out_->inner.snapshots.push_back(std::move(s));
  };

  ChainOut co;
  try {
    launch_u_curve();
    co = chain(s1m, s1p);
  } catch (const NumericalError& e) {
    throw fail(e);
  }
  record(co, s1m, s1p);
  snapshot();
  commit();

  while (lead_.level() < g.steps) {
    const int k = lead_.level();
    const double h = g.dt;
    try {
      // Predictor with the rates of level k.
      const double s1m_pred = s1m + h * co.D1m;
      const double s1p_pred = s1p + h * co.D1p;
      lead_.advance();
      for (auto& cv : ucurves_) cv.w = cv.w_start + h * cv.rate_start;
      for (const auto& cv : lead_.curves())
        if (cv.launch <= k) vw_[cv.launch] = vw_start_[cv.launch] + h * vrate_start_[cv.launch];
      launch_u_curve();
      const ChainOut pred = chain(s1m_pred, s1p_pred);

      // Corrector: trapezoidal rule with the predicted rates.
      s1m += 0.5 * h * (co.D1m + pred.D1m);
      s1p += 0.5 * h * (co.D1p + pred.D1p);
      for (auto& cv : ucurves_)
        if (cv.launch <= k) cv.w = cv.w_start + 0.5 * h * (cv.rate_start + cv.rate);
      for (const auto& cv : lead_.curves())
        if (cv.launch <= k)
          vw_[cv.launch] = vw_start_[cv.launch] + 0.5 * h * (vrate_start_[cv.launch] + vrate_[cv.launch]);
      co = chain(s1m, s1p);
    } catch (const NumericalError& e) {
      throw fail(e);
    }
    record(co, s1m, s1p);
    snapshot();
    commit();

    const double t = lead_.t();
    const double margin = 0.1 * (lead_.s_plus() - lead_.s_minus());
    while (ucurves_.size() > 3 && ucurves_[2].x(t) < lead_.s_minus() - margin) ucurves_.pop_front();
  }
  return out_;
}

} // namespace

std::shared_ptr<const ExpansionData> march_first_order(std::shared_ptr<const OuterFields> outer,
                                                       const InnerBoundaryData* boundary) {
  FirstOrderMarch m(std::move(outer), boundary);
  return m.run();
}

InnerFieldHistory build_inner_corrections(std::shared_ptr<const OuterFields> outer,
                                          const InnerBoundaryData& boundary) {
  if (!boundary.u1_plus || !boundary.v1_minus)
    throw SpecError("inner corrections need boundary data for u1 on the plus shock and v1 on the "
                    "minus shock");
  return march_first_order(std::move(outer), &boundary)->inner;
}

AsymptoticSolution solve_asymptotic(const ProblemSpec& spec, double eps) {
  if (!(eps > 0.0)) throw SpecError("epsilon must be positive");
  const ValidationReport report = validate(spec);
  if (!report.ok()) {
    std::string failed;
    for (const auto& ch : report.checks)
      if (ch.mandatory && !ch.passed) failed += (failed.empty() ? "" : ", ") + ch.name;
    throw SpecError("validation failed: " + failed);
  }
  auto outer = build_outer_fields(spec);
  return AsymptoticSolution(march_first_order(std::move(outer)), eps);
}

// ---------------------------------------------------------------------------
// Asymptotic solution

FirstOrderFields AsymptoticSolution::first_order_fields() const {
  FirstOrderFields f;
  f.outer = data_->outer.get();
  f.inner = &data_->inner;
  f.minus = &data_->minus;
  f.plus = &data_->plus;
  f.epsilon = eps_;
  return f;
}

AsymptoticSolution::State AsymptoticSolution::leading(double x, double t) const {
  const OuterFields& o = *data_->outer;
  switch (locate(first_order_fields(), x, t)) {
  case FieldRegion::OuterLeft:
    return {o.u_left.eval(x, t).u0, o.v_left.eval(x, t).value};
  case FieldRegion::OuterRight:
    return {o.u_right.eval(x, t).u0, o.v_right.eval(x, t).value};
  case FieldRegion::Inner:
    return {o.u_right.eval(x, t).u0, data_->inner.eval(x, t).v0};
  }
  return {};
}

AsymptoticSolution::State AsymptoticSolution::first(double x, double t) const {
  const FirstOrderValues v = eval_first_order(first_order_fields(), x, t);
  return {v.u1, v.v1};
}

AsymptoticSolution::State AsymptoticSolution::composite(double x, double t) const {
  const State a = leading(x, t), b = first(x, t);
  return {a.u + eps_ * b.u, a.v + eps_ * b.v};
}

TraceSet AsymptoticSolution::traces(Side side, double t) const {
  const ShockCurve& sc = shock(side);
  const double s0 = sc.leading(t);
  const InnerFieldHistory::Values in = data_->inner.eval(s0, t);
  const auto& b = data_->boundary;
  const TimeGrid& g = sc.grid;
  TraceSet tr;
  if (side == Side::Minus) {
    tr = outer_traces(*data_->outer, side, t, s0, sc.leading_speed(t), in.v0, in.v0_x);
    tr.u1_in = at_level(b.u1_in_minus, g, t);
    tr.v1_in = at_level(b.v1_in_minus, g, t);
  } else {
    tr = outer_traces(*data_->outer, side, t, s0, sc.leading_speed(t), in.v0, in.v0_x);
    tr.u1_in = at_level(b.u1_in_plus, g, t);
    tr.v1_in = at_level(b.v1_in_plus, g, t);
  }
  return tr;
}

std::vector<double> AsymptoticSolution::snapshot_times() const {
  std::vector<double> out;
  out.reserve(data_->inner.snapshots.size());
  for (const auto& s : data_->inner.snapshots) out.push_back(s.t);
  return out;
}

JumpResidual hugoniot_residual(const AsymptoticSolution& sol, const std::vector<double>& times) {
  const auto& c = sol.data().outer->spec->coeff;
  const OuterFields& o = *sol.data().outer;
  const double eps = sol.epsilon();
  JumpResidual worst;
  for (double t : times) {
    for (Side side : {Side::Minus, Side::Plus}) {
      const double x = sol.shock_position(side, t);
      const double D = sol.shock_speed(side, t);
      const InnerFieldHistory::Values in = sol.data().inner.eval(x, t);
      const double ui = o.u_right.eval(x, t).u0 + eps * in.u1;
      const double vi = in.v0 + eps * in.v1;
      double uo, vo;
      if (side == Side::Minus) {
        uo = o.u_left.eval(x, t).u0 + eps * o.u1_left.eval(x, t);
        vo = o.v_left.eval(x, t).value + eps * o.v1_left.eval(x, t);
      } else {
        uo = o.u_right.eval(x, t).u0 + eps * o.u1_right.eval(x, t);
        vo = o.v_right.eval(x, t).value + eps * o.v1_right.eval(x, t);
      }
      const double r1 = std::abs(D * (uo - ui) - (c.Lambda(uo) - c.Lambda(ui)));
      const double r2 =
          std::abs(D * (c.Phi(uo, vo) - c.Phi(ui, vi)) - (c.Psi(uo, vo) - c.Psi(ui, vi)));
      if (r1 > worst.max_abs) worst = {r1, t, side, 1};
      if (r2 > worst.max_abs) worst = {r2, t, side, 2};
    }
  }
  return worst;
}

void write_shock_csv(std::ostream& os, const ShockCurve& minus, const ShockCurve& plus) {
  os << "t,s0_minus,D0_minus,s1_minus,D1_minus,s0_plus,D0_plus,s1_plus,D1_plus\n";
  char line[512];
  const int n = std::min(minus.levels(), plus.levels());
  for (int k = 0; k < n; ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  minus.grid.t(k), minus.s0[k], minus.D0[k], minus.s1[k], minus.D1[k], plus.s0[k],
                  plus.D0[k], plus.s1[k], plus.D1[k]);
    os << line;
  }
}

} // namespace shockexp
