#include "shockexp/reference.hpp"

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

// 6-point Gauss-Legendre on [-1, 1].
constexpr double kGaussX[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                               0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr double kGaussW[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                               0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

template <class F>
double gauss(double a, double b, F f) {
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 6; ++i) s += kGaussW[i] * f(m + r * kGaussX[i]);
  return s * r;
}

} // namespace

double recover_v(const ProblemSpec& spec, double u, double w, double v_guess) {
  const auto& c = spec.coeff;
  const Interval box = spec.numerics.state_v;
  auto g = [&](double v) { return c.Phi(u, v) - w; };
  constexpr double tol = 1e-12;

  double v = std::clamp(std::isfinite(v_guess) ? v_guess : 0.5 * (box.lo + box.hi), box.lo, box.hi);
  for (int it = 0; it < spec.numerics.newton_max_iter; ++it) {
    const double r = g(v);
    if (std::abs(r) <= 1e-14 * (1.0 + std::abs(w))) return v;
    const double d = c.Phi_v(u, v);
    if (!(std::abs(d) > 0.0)) break;
    const double next = v - r / d;
    if (!(next >= box.lo && next <= box.hi)) break;
    const double step = std::abs(next - v);
    v = next;
    if (step <= 1e-15 * (1.0 + std::abs(v))) {
      if (std::abs(g(v)) <= tol) return v;
      break;
    }
  }

  // Bisection over the state box; Phi is monotone in v there.
  double lo = box.lo, hi = box.hi;
  double glo = g(lo), ghi = g(hi);
  if ((glo > 0) == (ghi > 0) && glo != 0.0 && ghi != 0.0)
    throw NumericalError("v recovery: w=" + fmt(w) + " outside the range of Phi(" + fmt(u) +
                         ", v) over the state box");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (std::abs(gm) <= tol && (hi - lo) <= 1e-14 * (1.0 + std::abs(mid))) return mid;
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-16 * (1.0 + std::abs(mid))) break;
  }
  v = 0.5 * (lo + hi);
  if (std::abs(g(v)) <= tol) return v;
  throw NumericalError("v recovery did not converge at u=" + fmt(u) + ", w=" + fmt(w));
}

namespace {

// Newton sweeps over all cells at once; cells that do not settle fall back
// to the scalar recovery.
void recover_v_all(const ProblemSpec& spec, const std::vector<double>& u, const std::vector<double>& w,
                   std::vector<double>& v, std::vector<double>& r, std::vector<double>& d) {
  const auto& c = spec.coeff;
  const Interval box = spec.numerics.state_v;
  const std::size_t n = u.size();
  std::vector<unsigned char> state(n, 0); // 0 active, 1 converged, 2 fallback
  const std::vector<double> guess = v;
  for (int sweep = 0; sweep < 8; ++sweep) {
    c.Phi.evaluate_batch(u.data(), v.data(), r.data(), n);
    c.Phi_v.evaluate_batch(u.data(), v.data(), d.data(), n);
    bool active = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] != 0) continue;
      const double res = r[i] - w[i];
      if (std::abs(res) <= 1e-14 * (1.0 + std::abs(w[i]))) {
        state[i] = 1;
        continue;
      }
      const double next = v[i] - res / d[i];
      if (!(next >= box.lo && next <= box.hi)) {
        state[i] = 2;
        continue;
      }
      const double step = std::abs(next - v[i]);
      v[i] = next;
      if (step <= 1e-15 * (1.0 + std::abs(next)) && std::abs(res) <= 1e-13) state[i] = 1;
      else active = true;
    }
    if (!active) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] != 1) v[i] = recover_v(spec, u[i], w[i], guess[i]);
}

} // namespace

std::vector<double> default_output_times(const ProblemSpec& spec) {
  const int n = spec.numerics.fv_outputs;
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(spec.horizon * i / n);
  return out;
}

GridSolution run_reference(const ProblemSpec& spec, double eps, const ReferenceOptions& opt) {
  if (!(eps >= 0.0)) throw SpecError("epsilon must be nonnegative");
  const auto& c = spec.coeff;
  const auto& num = spec.numerics;
  const int n = opt.cells > 0 ? opt.cells : num.fv_cells;
  if (n < 16) throw SpecError("reference grid needs at least 16 cells");

  GridSolution sol;
  sol.domain = num.fv_domain;
  sol.cells = n;
  sol.dx = num.fv_domain.width() / n;
  sol.epsilon = eps;
  const double dx = sol.dx;

  std::vector<double> outs = opt.output_times.empty() ? default_output_times(spec) : opt.output_times;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (!(outs[i] > 0.0) || (i > 0 && !(outs[i] > outs[i - 1])))
      throw SpecError("output times must be positive and increasing");
  }
  const double dt_min = opt.dt_min > 0.0 ? opt.dt_min : 1e-10 * spec.horizon;

  std::vector<double> u(n), w(n), v(n);
  const auto& ini = spec.initial;
  for (int i = 0; i < n; ++i) {
    const double a = sol.domain.lo + i * dx, b = a + dx;
    double su = 0.0, sw = 0.0;
    auto add = [&](double lo, double hi, const InitialPiece& pu, const InitialPiece& pv) {
      if (!(hi > lo)) return;
      su += gauss(lo, hi, [&](double x) { return pu(x); });
      sw += gauss(lo, hi, [&](double x) { return c.Phi(pu(x), pv(x)); });
    };
    add(a, std::min(b, 0.0), ini.u_left, ini.v_left);
    add(std::max(a, 0.0), b, ini.u_right, ini.v_right);
    u[i] = su / dx;
    w[i] = sw / dx;
    const double xc = 0.5 * (a + b);
    const double guess = xc < 0.0 ? ini.v_left(xc) : ini.v_right(xc);
    v[i] = recover_v(spec, u[i], w[i], guess);
  }

  std::vector<double> F1(n), F2(n), speed(n), flux1(n + 1), flux2(n + 1);
  std::vector<double> mu(n), fs(n), gs(n), pu(n), pv(n), scratch(n);
  double t = 0.0;
  std::size_t next_out = 0;
  while (next_out < outs.size()) {
    c.Lambda.evaluate_batch(u.data(), v.data(), F1.data(), n);
    c.Psi.evaluate_batch(u.data(), v.data(), F2.data(), n);
    c.lambda.evaluate_batch(u.data(), v.data(), speed.data(), n);
    c.mu.evaluate_batch(u.data(), v.data(), mu.data(), n);
    double smax = 0.0;
    for (int i = 0; i < n; ++i) {
      speed[i] = std::max(std::abs(speed[i]), std::abs(mu[i]));
      smax = std::max(smax, speed[i]);
    }
    if (!std::isfinite(smax)) throw NumericalError("reference: wave speed not finite at t=" + fmt(t));
    double dt = smax > 0.0 ? num.fv_cfl * dx / smax : outs[next_out] - t;
    bool hit = false;
    if (t + dt >= outs[next_out] - 1e-14 * std::max(1.0, outs[next_out])) {
      dt = outs[next_out] - t;
      hit = true;
    }
    if (!(dt >= dt_min) && !hit)
      throw NumericalError("reference: time step " + fmt(dt) + " below the minimum at t=" + fmt(t));

    for (int k = 0; k <= n; ++k) {
      const int l = std::max(k - 1, 0), r = std::min(k, n - 1);
      const double a = std::max(speed[l], speed[r]);
      flux1[k] = 0.5 * (F1[l] + F1[r]) - 0.5 * a * (u[r] - u[l]);
      flux2[k] = 0.5 * (F2[l] + F2[r]) - 0.5 * a * (w[r] - w[l]);
    }
    if (eps != 0.0) {
      c.f.evaluate_batch(u.data(), v.data(), fs.data(), n);
      c.g.evaluate_batch(u.data(), v.data(), gs.data(), n);
      c.Phi_u.evaluate_batch(u.data(), v.data(), pu.data(), n);
      c.Phi_v.evaluate_batch(u.data(), v.data(), pv.data(), n);
    }

    StepBalance bal;
    const bool audit = static_cast<bool>(opt.on_step);
    if (audit) {
      bal.t = t;
      bal.dt = dt;
      for (int i = 0; i < n; ++i) {
        bal.before[0] += u[i] * dx;
        bal.before[1] += w[i] * dx;
      }
      bal.boundary[0] = dt * (flux1[0] - flux1[n]);
      bal.boundary[1] = dt * (flux2[0] - flux2[n]);
    }
    const double lam = dt / dx;
    for (int i = 0; i < n; ++i) {
      double s1 = 0.0, s2 = 0.0;
      if (eps != 0.0) {
        s1 = eps * fs[i];
        s2 = eps * (pu[i] * fs[i] + pv[i] * gs[i]);
      }
      u[i] += -lam * (flux1[i + 1] - flux1[i]) + dt * s1;
      w[i] += -lam * (flux2[i + 1] - flux2[i]) + dt * s2;
      if (audit) {
        bal.source[0] += dt * s1 * dx;
        bal.source[1] += dt * s2 * dx;
      }
    }
    try {
      recover_v_all(spec, u, w, v, scratch, mu);
    } catch (const NumericalError& e) {
      throw NumericalError("reference at t=" + fmt(t) + ": " + e.what());
    }
    t = hit ? outs[next_out] : t + dt;
    if (audit) {
      for (int i = 0; i < n; ++i) {
        bal.after[0] += u[i] * dx;
        bal.after[1] += w[i] * dx;
      }
      opt.on_step(bal);
    }
    if (hit) {
      sol.times.push_back(t);
      sol.u.push_back(u);
      sol.w.push_back(w);
      sol.v.push_back(v);
      ++next_out;
    }
  }
  return sol;
}

double front_position(const std::vector<double>& q, double x_lo, double dx, int first, int last,
                      int far_cells) {
  const int n = static_cast<int>(q.size());
  first = std::max(first, 0);
  last = std::min(last, n - 1);
  if (last - first < 2) throw NumericalError("front search window is empty");
  int best = -1;
  double jump = 0.0;
  for (int i = first; i < last; ++i) {
    const double d = std::abs(q[i + 1] - q[i]);
    if (d > jump) {
      jump = d;
      best = i;
    }
  }
  if (best < 0 || jump < 1e-8) throw NumericalError("no front found");
  const int il = std::max(best - far_cells, 0);
  const int ir = std::min(best + 1 + far_cells, n - 1);
  if (std::abs(q[ir] - q[il]) < 1e-8) throw NumericalError("no front found");
  const double mid = 0.5 * (q[il] + q[ir]);
  // Nearest crossing of the mid value to the steepest interface.
  for (int off = 0; off <= far_cells; ++off) {
    for (int j : {best - off, best + off}) {
      if (j < il || j + 1 > ir) continue;
      const double a = q[j] - mid, b = q[j + 1] - mid;
      if (a == 0.0) return x_lo + (j + 0.5) * dx;
      if ((a < 0) != (b < 0)) {
        const double th = a / (a - b);
        return x_lo + (j + 0.5 + th) * dx;
      }
    }
  }
  throw NumericalError("front has no mid-value crossing");
}

ShockPositions extract_shocks(const GridSolution& sol, int index, int far_cells) {
  if (index < 0 || index >= static_cast<int>(sol.times.size()))
    throw NumericalError("no reference output with index " + std::to_string(index));
  const auto& u = sol.u[index];
  const auto& v = sol.v[index];
  const int n = sol.cells;
  ShockPositions s;
  s.x_minus = front_position(u, sol.domain.lo, sol.dx, 0, n - 1, far_cells);
  const int im = static_cast<int>(std::floor((s.x_minus - sol.domain.lo) / sol.dx));
  s.x_plus = front_position(v, sol.domain.lo, sol.dx, im + 10, n - 1, far_cells);
  if (s.x_plus - s.x_minus < 10 * sol.dx)
    throw NumericalError("fronts closer than 10 cells at t=" + fmt(sol.times[index]));
  return s;
}

void write_snapshot_csv(std::ostream& os, const GridSolution& sol, int index) {
  os << "x_center,u,v,w\n";
  char line[256];
  for (int i = 0; i < sol.cells; ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", sol.x_center(i), sol.u[index][i],
                  sol.v[index][i], sol.w[index][i]);
    os << line;
  }
}

void write_extraction_csv(std::ostream& os, const GridSolution& sol, int far_cells) {
  os << "t,x_minus,x_plus\n";
  char line[128];
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const ShockPositions s = extract_shocks(sol, static_cast<int>(k), far_cells);
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", sol.times[k], s.x_minus, s.x_plus);
    os << line;
  }
}

} // namespace shockexp
