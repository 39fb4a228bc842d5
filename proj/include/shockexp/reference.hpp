#ifndef SHOCKEXP_REFERENCE_HPP
#define SHOCKEXP_REFERENCE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "shockexp/model.hpp"

namespace shockexp {

/// Cell averages of the conservative pair (u, w = Phi(u, v)) at the output
/// times, with v recovered per cell.
struct GridSolution {
  Interval domain;
  int cells = 0;
  double dx = 0.0;
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> u, w, v;

  double x_center(int i) const { return domain.lo + (i + 0.5) * dx; }
};

/// Totals of both conserved components around one step, for auditing the
/// discrete balance  after - before = boundary + source.
struct StepBalance {
  double t = 0.0, dt = 0.0;
  double before[2] = {0, 0};
  double after[2] = {0, 0};
  double boundary[2] = {0, 0}; // dt * (flux in at the left - flux out at the right)
  double source[2] = {0, 0};   // dt * eps * sum(S) * dx
};

struct ReferenceOptions {
  std::vector<double> output_times; // increasing, in (0, T]; empty means fv_outputs evenly spaced
  int cells = 0;                    // overrides numerics.fv_cells when positive
  double dt_min = 0.0;              // smallest admissible step; 0 picks 1e-10 * T
  std::function<void(const StepBalance&)> on_step;
};

/// Rusanov scheme for W_t + F(W)_x = eps S(W) with W = (u, Phi),
/// F = (Lambda, Psi), S = (f, Phi_u f + Phi_v g); explicit Euler in time,
/// outflow boundaries, initial averages by Gauss-Legendre quadrature.
GridSolution run_reference(const ProblemSpec& spec, double eps, const ReferenceOptions& options = {});

/// Evenly spaced output times T/n, 2T/n, ..., T.
std::vector<double> default_output_times(const ProblemSpec& spec);

/// v with |Phi(u, v) - w| <= 1e-12 inside state_box.v, by Newton from
/// v_guess with a bisection fallback.
double recover_v(const ProblemSpec& spec, double u, double w, double v_guess);

struct ShockPositions {
  double x_minus = 0.0;
  double x_plus = 0.0;
};

/// Sub-cell positions of the u front (minus shock) and the v front (plus
/// shock) of output `index`: the crossing of the mid value between the far
/// states, sampled `far_cells` cells away from the steepest cell pair.
ShockPositions extract_shocks(const GridSolution& sol, int index, int far_cells = 40);

/// Same extraction on bare cell arrays, searching cells [first, last].
double front_position(const std::vector<double>& q, double x_lo, double dx, int first, int last,
                      int far_cells);

void write_snapshot_csv(std::ostream& os, const GridSolution& sol, int index);
void write_extraction_csv(std::ostream& os, const GridSolution& sol, int far_cells = 40);

} // namespace shockexp

#endif
