#pragma once

#include <vector>

#include "relucalc/numeric.hpp"

namespace relucalc {

// Continuous piecewise-linear function on the real line. Knots are strictly
// increasing and may include points where the slope does not change; there is
// always at least one knot.
struct Cpwl1D {
  Vec breakpoints;
  Vec values;
  Numeric left_slope = 0;
  Numeric right_slope = 0;

  static Cpwl1D affine(const Numeric& a, const Numeric& b);  // a t + b
  static Cpwl1D constant(const Numeric& c) { return affine(0, c); }
  // linear interpolation of (t_i, y_i), constant outside [t_1, t_D]
  static Cpwl1D interpolate(const Vec& t, const Vec& y, const Numeric& left_slope = 0,
                            const Numeric& right_slope = 0);

  void validate() const;
  Numeric operator()(const Numeric& t) const;
  // slope on piece k: 0 is the left ray, breakpoints.size() the right ray
  Numeric slope(size_t k) const;
  // drops knots where the slope does not change
  Cpwl1D canonical() const;
  // knots where the slope actually changes
  Vec kinks() const;
  size_t kink_count() const { return kinks().size(); }
};

// equal as functions on the real line
bool same_function(const Cpwl1D& f, const Cpwl1D& g);
Cpwl1D operator-(const Cpwl1D& f, const Cpwl1D& g);

}  // namespace relucalc
