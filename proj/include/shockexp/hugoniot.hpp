#ifndef SHOCKEXP_HUGONIOT_HPP
#define SHOCKEXP_HUGONIOT_HPP

#include <deque>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "shockexp/corrections.hpp"
#include "shockexp/shock_curve.hpp"

namespace shockexp {

/// One-sided values at a shock. "outer" is the side away from the wedge
/// (left of the minus shock, right of the plus shock), "in" the wedge side.
struct TraceSet {
  Side side = Side::Minus;
  double t = 0.0;
  double s0 = 0.0, D0 = 0.0;
  double u0 = 0.0, u0_in = 0.0, v0 = 0.0, v0_in = 0.0;
  double u0_x = 0.0, u0_x_in = 0.0, v0_x = 0.0, v0_x_in = 0.0;
  double u1 = 0.0, v1 = 0.0;
  double u1_in = std::numeric_limits<double>::quiet_NaN();
  double v1_in = std::numeric_limits<double>::quiet_NaN();
};

/// Order-eps part of the jump condition of u_t + Lambda(u)_x (left minus
/// right hand side); zero on a consistent first-order solution.
double u_jump_residual(const Coefficients& c, const TraceSet& tr, double s1, double D1);

/// Order-eps part of the jump condition of Phi_t + Psi_x.
double phi_jump_residual(const Coefficients& c, const TraceSet& tr, double s1, double D1);

/// Step 1: inner u correction at the plus shock (u0 continuous there).
double step1_inner_u1_boundary(const Coefficients& c, const TraceSet& plus, double s1_plus);
/// Step 3: first-order speed of the minus shock; needs minus.u1_in.
double step3_D1_minus(const Coefficients& c, const TraceSet& minus, double s1_minus);
/// Step 4: inner v correction at the minus shock.
double step4_inner_v1_boundary(const Coefficients& c, const TraceSet& minus, double s1_minus,
                               double D1_minus);
/// Step 6: first-order speed of the plus shock; needs plus.v1_in.
double step6_D1_plus(const Coefficients& c, const TraceSet& plus, double s1_plus);

/// Guard for every division by a jump or a characteristic-speed gap.
inline constexpr double kJumpGuard = 1e-12;

/// State of one inner v-characteristic launched from the minus shock.
struct InnerVCurve {
  int launch = 0;
  double x = 0.0;
  double p = 0.0;   // leading v_x along the curve
  double v0 = 0.0;  // leading v, constant along the curve
  double u0 = 0.0, u0_x = 0.0, foot = 0.0; // leading u (right problem) at x
};

/**
 * Marches the leading-order shocks together with the inner v field.
 *
 *  ds-/dt = [Lambda(u-) - Lambda(u~)] / (u- - u~)
 *  ds+/dt = [Psi(u, v+) - Psi(u, v~)] / [Phi(u, v+) - Phi(u, v~)]
 *
 * u- and v at the minus shock come from the left problem, u everywhere in
 * the wedge from the right problem. v~ is carried by v-characteristics that
 * leave the minus shock; one is launched per step with v~ from the Phi jump
 * condition of the u-shock (v continuous when Phi does not depend on u) and
 * v~_x from differentiating that condition along the shock:
 *   (D - mu_in) v~_x = d/dt v~(s-(t), t).
 * Along each, dp/dt = -(mu_u u_x + mu_v p) p. The whole system advances by
 * classical RK4; curves beyond the plus shock are dropped once enough
 * remain on that side.
 */
class LeadingMarcher {
public:
  explicit LeadingMarcher(const OuterFields& outer);

  int level() const { return level_; }
  double t() const { return grid_.t(level_); }
  const TimeGrid& grid() const { return grid_; }
  double s_minus() const { return s_minus_; }
  double s_plus() const { return s_plus_; }
  double D_minus() const { return D_minus_; }
  double D_plus() const { return D_plus_; }

  /// Curves ordered oldest first (largest x first); the newest sits on the
  /// minus shock.
  const std::deque<InnerVCurve>& curves() const { return curves_; }
  const Profile& v0_profile() const { return v0_profile_; }
  const Profile& v0_x_profile() const { return vx_profile_; }

  void advance();

private:
  struct Stage {
    double sm = 0.0, sp = 0.0;
    std::vector<double> x, p;
  };
  void rates(double t, const Stage& y, Stage& dy, double* Dm, double* Dp) const;
  struct MinusData {
    double D, v, p;
  };
  MinusData minus_boundary(double t, double sm) const;
  void finish_level();

  const OuterFields* outer_;
  TimeGrid grid_;
  int level_ = 0;
  double s_minus_ = 0.0, s_plus_ = 0.0, D_minus_ = 0.0, D_plus_ = 0.0;
  std::deque<InnerVCurve> curves_;
  Profile v0_profile_, vx_profile_;
  mutable double v_guess_ = std::numeric_limits<double>::quiet_NaN();
};

struct LeadingSolution {
  ShockCurve minus, plus;
  std::vector<InnerSnapshot> snapshots; // v0, v0_x only
};

/// Leading-order shock curves (s0, D0) with the inner leading field.
LeadingSolution solve_leading(const OuterFields& outer);

/// Inner first-order traces recorded at every level of the march.
struct BoundaryHistory {
  std::vector<double> u1_in_plus;   // step 1
  std::vector<double> u1_in_minus;  // step 2
  std::vector<double> v1_in_minus;  // step 4
  std::vector<double> v1_in_plus;   // step 5
};

/// Prescribed inner boundary data replacing steps 1 and 4.
struct InnerBoundaryData {
  std::function<double(double)> u1_plus;
  std::function<double(double)> v1_minus;
};

struct ExpansionData {
  std::shared_ptr<const OuterFields> outer;
  ShockCurve minus, plus;
  BoundaryHistory boundary;
  InnerFieldHistory inner;
};

/**
 * First-order asymptotic solution. The expansion data do not depend on
 * eps; eps only selects the region boundaries s0 + eps*s1 and weights the
 * composite u0 + eps*u1.
 */
class AsymptoticSolution {
public:
  AsymptoticSolution(std::shared_ptr<const ExpansionData> data, double eps)
      : data_(std::move(data)), eps_(eps) {}

  double epsilon() const { return eps_; }
  AsymptoticSolution with_epsilon(double eps) const { return {data_, eps}; }
  const ExpansionData& data() const { return *data_; }
  const std::shared_ptr<const ExpansionData>& data_ptr() const { return data_; }
  const ShockCurve& shock(Side s) const { return s == Side::Minus ? data_->minus : data_->plus; }
  double shock_position(Side s, double t) const { return shock(s).position(t, eps_); }
  double shock_speed(Side s, double t) const {
    return shock(s).leading_speed(t) + eps_ * shock(s).correction_speed(t);
  }

  FirstOrderFields first_order_fields() const;

  struct State {
    double u = 0.0, v = 0.0;
  };
  State leading(double x, double t) const;
  State first(double x, double t) const;
  State composite(double x, double t) const;

  /// boundary_traces at s0(t) of one shock.
  TraceSet traces(Side side, double t) const;

  /// Times at which the inner fields were stored exactly.
  std::vector<double> snapshot_times() const;

private:
  std::shared_ptr<const ExpansionData> data_;
  double eps_;
};

/**
 * Time-marching of steps 1-6 coupled with the inner transport of u1 and v1.
 * At every level: step 1 gives u1~ on the plus shock (new inner u curve),
 * step 2 reads u1~ at the minus shock, step 3 gives D1-, step 4 gives v1~ on
 * the minus shock (new inner v curve), step 5 reads v1~ at the plus shock,
 * step 6 gives D1+. s1 and the inner correction values advance by Heun's
 * method. With `boundary` set, steps 1 and 4 are replaced by the supplied
 * data.
 */
std::shared_ptr<const ExpansionData> march_first_order(std::shared_ptr<const OuterFields> outer,
                                                       const InnerBoundaryData* boundary = nullptr);

/// Inner correction fields for prescribed boundary data (u1 on the plus
/// shock, v1 on the minus shock). Throws SpecError if either is missing.
InnerFieldHistory build_inner_corrections(std::shared_ptr<const OuterFields> outer,
                                          const InnerBoundaryData& boundary);

/// Outer fields, leading march and first-order march in one call.
AsymptoticSolution solve_asymptotic(const ProblemSpec& spec, double eps);

/// Largest |residual| of the exact jump conditions for u and (Phi, Psi),
/// evaluated with the composite expansion at x = s0 + eps*s1 with speed
/// D0 + eps*D1, over both shocks and the given times.
struct JumpResidual {
  double max_abs = 0.0;
  double t = 0.0;
  Side side = Side::Minus;
  int condition = 0; // 1: u law, 2: (Phi, Psi) law
};
JumpResidual hugoniot_residual(const AsymptoticSolution& sol, const std::vector<double>& times);

/// CSV: t, s0_minus, D0_minus, s1_minus, D1_minus, s0_plus, D0_plus, s1_plus, D1_plus.
void write_shock_csv(std::ostream& os, const ShockCurve& minus, const ShockCurve& plus);

} // namespace shockexp

#endif
