#ifndef SHOCKEXP_SHOCK_CURVE_HPP
#define SHOCKEXP_SHOCK_CURVE_HPP

#include <vector>

#include "shockexp/characteristics.hpp"

namespace shockexp {

enum class Side { Minus, Plus };

inline const char* side_name(Side s) { return s == Side::Minus ? "minus" : "plus"; }

/// One discontinuity line sampled on the marching grid: position s0 and
/// speed D0 at leading order, position s1 and speed D1 of the first-order
/// correction. Position at small parameter eps is s0 + eps*s1.
struct ShockCurve {
  Side side = Side::Minus;
  TimeGrid grid;
  std::vector<double> s0, D0, s1, D1;

  int levels() const { return static_cast<int>(s0.size()); }

  /// Cubic Hermite interpolation in t using the stored speeds.
  double leading(double t) const;
  double correction(double t) const;
  double position(double t, double eps) const { return leading(t) + eps * correction(t); }
  double leading_speed(double t) const;
  double correction_speed(double t) const;
};

} // namespace shockexp

#endif
