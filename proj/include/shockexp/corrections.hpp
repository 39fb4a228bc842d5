#ifndef SHOCKEXP_CORRECTIONS_HPP
#define SHOCKEXP_CORRECTIONS_HPP

#include <iosfwd>
#include <memory>
#include <vector>

#include "shockexp/characteristics.hpp"
#include "shockexp/shock_curve.hpp"

namespace shockexp {

/**
 * First-order u correction in an outer region. Curves are the straight
 * u-characteristics x = xi + lambda(u_init(xi)) t; along each one
 *   dw/dt = -lambda_u(u0) u0_x w + f(u0, v0),  w(0) = 0.
 */
class OuterCorrectionU {
public:
  Region region = Region::OuterLeft;
  TimeGrid grid;
  std::vector<double> feet, u0, speed, slope;

  double x(std::size_t j, double t) const { return feet[j] + speed[j] * t; }
  double w(int level, std::size_t j) const { return w_[level * feet.size() + j]; }
  bool alive(int level, std::size_t j) const { return level <= alive_until_[j]; }

  /// Bilinear interpolation in (x, t); throws NumericalError outside the hull.
  double eval(double x, double t) const;
  void write_csv(std::ostream& os) const;

private:
  friend OuterCorrectionU build_u1(const ProblemSpec&, Region, const CharField&);
  std::vector<double> w_;
  std::vector<int> alive_until_;
};

/**
 * First-order v correction in an outer region, carried on the curves of
 * the region's v fan:
 *   dw/dt = -mu_v v0_x w - mu_u v0_x u1 + g(u0, v0),  w(0) = 0.
 */
class OuterCorrectionV {
public:
  Region region = Region::OuterLeft;
  const CharField* fan = nullptr;

  double w(int level, std::size_t j) const { return w_[level * fan->curve_count() + j]; }
  bool alive(int level, std::size_t j) const { return level <= alive_until_[j]; }

  double eval(double x, double t) const;
  void write_csv(std::ostream& os) const;

private:
  friend OuterCorrectionV build_v1(const ProblemSpec&, Region, const CharField&,
                                   const OuterCorrectionU&);
  std::vector<double> w_;
  std::vector<int> alive_until_;
};

OuterCorrectionU build_u1(const ProblemSpec& spec, Region region, const CharField& v_fan);
OuterCorrectionV build_v1(const ProblemSpec& spec, Region region, const CharField& v_fan,
                          const OuterCorrectionU& u1);

/// Leading and first-order fields of both outer regions. Held by pointer:
/// the correction fields refer to the fans stored alongside them.
struct OuterFields {
  explicit OuterFields(const ProblemSpec& s)
      : spec(&s), u_left(s, Region::OuterLeft), u_right(s, Region::OuterRight) {}
  OuterFields(const OuterFields&) = delete;
  OuterFields& operator=(const OuterFields&) = delete;

  const ProblemSpec* spec;
  OuterUField u_left, u_right;
  CharField v_left, v_right;
  OuterCorrectionU u1_left, u1_right;
  OuterCorrectionV v1_left, v1_right;

  const OuterUField& u(Region r) const { return r == Region::OuterLeft ? u_left : u_right; }
  const CharField& v(Region r) const { return r == Region::OuterLeft ? v_left : v_right; }
  const OuterCorrectionU& u1(Region r) const { return r == Region::OuterLeft ? u1_left : u1_right; }
  const OuterCorrectionV& v1(Region r) const { return r == Region::OuterLeft ? v1_left : v1_right; }
};

/// Builds both regions concurrently.
std::shared_ptr<const OuterFields> build_outer_fields(const ProblemSpec& spec);

/**
 * Sorted one-dimensional profile used for the inner (wedge) fields at a
 * fixed time. Interior points use cubic Hermite interpolation when slopes
 * are supplied and linear interpolation otherwise; points outside the node
 * range are extrapolated from the nearest end (first-order Taylor with the
 * stored slope, or the secant of the last two nodes).
 */
class Profile {
public:
  void clear();
  void reserve(std::size_t n);
  /// Nodes must arrive in increasing x; a node within 1e-13 of the previous
  /// one is dropped. Throws NumericalError if the order is violated.
  void push(double x, double value);
  void push(double x, double value, double slope);

  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }
  double front_x() const { return x_.front(); }
  double back_x() const { return x_.back(); }
  double eval(double x) const;
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& values() const { return val_; }

private:
  std::vector<double> x_, val_, slope_;
  bool has_slope_ = false;
};

/// Inner fields at one marching level. The v profiles share the nodes of
/// the boundary-launched v-characteristics; the u profile those of the
/// boundary-launched u-characteristics.
struct InnerSnapshot {
  double t = 0.0;
  int level = 0;
  Profile u1;      // inner u correction
  Profile v0;      // inner leading v (Hermite with its x-derivative)
  Profile v0_x;    // inner leading v_x
  Profile v1;      // inner v correction
};

/// Time-ordered inner snapshots; evaluation interpolates linearly in t.
struct InnerFieldHistory {
  std::vector<InnerSnapshot> snapshots;

  struct Values {
    double v0 = 0.0, v0_x = 0.0, u1 = 0.0, v1 = 0.0;
  };
  Values eval(double x, double t) const;
};

/// Everything eval_first_order needs; the pointers refer to objects owned
/// by the asymptotic solution.
struct FirstOrderFields {
  const OuterFields* outer = nullptr;
  const InnerFieldHistory* inner = nullptr;
  const ShockCurve* minus = nullptr;
  const ShockCurve* plus = nullptr;
  double epsilon = 0.0;
};

enum class FieldRegion { OuterLeft, Inner, OuterRight };

FieldRegion locate(const FirstOrderFields& fields, double x, double t);

struct FirstOrderValues {
  double u1 = 0.0;
  double v1 = 0.0;
};

/// u1, v1 at (x, t); the region is chosen by comparing x with s0 + eps*s1
/// of both shocks.
FirstOrderValues eval_first_order(const FirstOrderFields& fields, double x, double t);

} // namespace shockexp

#endif
