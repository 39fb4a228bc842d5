#ifndef SHOCKEXP_CHARACTERISTICS_HPP
#define SHOCKEXP_CHARACTERISTICS_HPP

#include <iosfwd>
#include <limits>
#include <vector>

#include "shockexp/model.hpp"

namespace shockexp {

/// Outer regions: continuation of the Cauchy problem with the left data
/// (OuterLeft) or with the right data (OuterRight).
enum class Region { OuterLeft, OuterRight };
enum class Family { U, V };

const char* region_name(Region r);

/// Uniform marching grid t_k = k*dt, k = 0..steps, with t_steps = T exactly.
struct TimeGrid {
  double dt = 0.0;
  int steps = 0;

  static TimeGrid make(double horizon, double requested_dt);
  double t(int k) const { return k * dt; }
  double horizon() const { return steps * dt; }
  /// Index k with t_k <= t < t_{k+1}, clamped to [0, steps-1].
  int level_below(double t) const;
};

struct UState {
  double u0 = 0.0;
  double u0_x = 0.0;
  double foot = 0.0;
};

/**
 * Leading-order u of one outer region by the implicit characteristic
 * relation x = xi + lambda(u_init(xi)) t. The initial piece is continued
 * across x = 0 by its own formula, so the field is defined wherever that
 * relation has a root.
 */
class OuterUField {
public:
  OuterUField(const ProblemSpec& spec, Region region);

  /// guess, when finite, seeds the root search for the foot.
  UState eval(double x, double t, double guess = std::numeric_limits<double>::quiet_NaN()) const;

  Region region() const { return region_; }
  const InitialPiece& data() const { return *piece_; }

private:
  const ProblemSpec* spec_;
  Region region_;
  const InitialPiece* piece_;
  bool constant_data_;
  double constant_value_;
};

UState u0_eval(const ProblemSpec& spec, Region region, double x, double t);

/// Feet of a fan: `count` points on [-spread, spread], containing 0 and
/// clustered geometrically towards it.
std::vector<double> fan_feet(int count, double spread);

/// Half-width of the foot interval used by fans: three times the distance
/// the fastest wave travels up to the horizon.
double fan_spread(const ProblemSpec& spec);

struct FanSample {
  double value = 0.0;
  double value_x = 0.0;
  double foot = 0.0;
  double jacobian = 1.0;
  int lower = 0;       // index of the curve at or left of the query point
  double weight = 0.0; // position of the query between curve lower and lower+1, in [0,1]
};

/**
 * A fan of v-characteristics launched from t = 0. Curve j starts at foot
 * xi_j carrying v_init(xi_j); positions x(t_k) and J = dx/dxi are stored at
 * every grid level.
 */
class CharField {
public:
  Region region = Region::OuterLeft;
  Family family = Family::V;
  TimeGrid grid;
  std::vector<double> feet;
  std::vector<double> values;
  std::vector<double> slopes;   // v_init'(xi)

  std::size_t curve_count() const { return feet.size(); }
  double x(int level, std::size_t j) const { return x_[level * feet.size() + j]; }
  double jacobian(int level, std::size_t j) const { return jac_[level * feet.size() + j]; }
  bool alive(int level, std::size_t j) const { return level <= alive_until_[j]; }

  /// v0 and v0_x at (x, t); throws NumericalError outside the hull.
  FanSample eval(double x, double t) const;

  void write_csv(std::ostream& os) const;

private:
  friend CharField build_v_fan(const ProblemSpec& spec, Region region);

  const ProblemSpec* spec_ = nullptr;
  const InitialPiece* data_ = nullptr;
  std::vector<double> x_;
  std::vector<double> jac_;
  std::vector<int> alive_until_;
};

/// Integrates dx/dt = mu(u0, v), dJ/dt = mu_u u0_x J + mu_v v_init'(xi) along
/// each curve by classical RK4.
CharField build_v_fan(const ProblemSpec& spec, Region region);

/// Integrates a single v-characteristic from foot xi up to time t_end with
/// the grid's step; returns {x, J} at t_end. Used for on-demand refinement
/// and by tests.
std::pair<double, double> integrate_v_characteristic(const ProblemSpec& spec, Region region,
                                                     double foot, const TimeGrid& grid,
                                                     double t_end);

/// v0_eval
FanSample v0_eval(const CharField& fan, double x, double t);

} // namespace shockexp

#endif
