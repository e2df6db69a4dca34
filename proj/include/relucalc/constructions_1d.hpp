#pragma once

#include <functional>
#include <vector>

#include "relucalc/cpwl1d.hpp"
#include "relucalc/net.hpp"

namespace relucalc {

// H_p: 0 outside [p1, p3], 1 at p2; width 3, depth 1
ReluNet hat(const Numeric& p1, const Numeric& p2, const Numeric& p3);
// hat on [0, 1] with peak at 1/2: 2t_+ - 4(t - 1/2)_+; width 2
ReluNet hat01();
// L-fold composition of hat01; width 2, depth L
ReluNet sawtooth(size_t L);

// one hidden layer of width D - 1 through (t_i, y_i), knots at midpoints
ReluNet shallow_interpolant(const Vec& t, const Vec& y);
// width 3, depth D - 1, linear spline through the data; points in [0, 1]
ReluNet deep_interpolant(const Vec& t, const Vec& y);
// one hidden layer: a neuron per kink, one more unless a ray is flat
// (two for a nonconstant affine g, one for a constant)
ReluNet cpwl_to_net(const Cpwl1D& g);

struct BitExtractPlan {
  size_t n = 4;
  std::vector<int> eps;  // N signs
  std::vector<long> y;   // N + 1 partial sums, y_0 = 0
  Vec Y;                 // n block numbers sum_k eps_{jn+k} 2^{-k-1}
  Numeric delta;         // 2^{-N}

  size_t N() const { return n * n; }
  Numeric t(size_t i) const { return Numeric::rational(long(i), long(N())); }
  void validate() const;

  static BitExtractPlan from_signs(size_t n, std::vector<int> eps);
  // y must satisfy |y_{i+1} - y_i| = 1 and y_{jn} = 0
  static BitExtractPlan from_values(size_t n, const std::vector<long>& y);
};

// width 11 net with eval(t_i) = y_i; built exactly on [0, 1]
ReluNet bit_extract_net(const BitExtractPlan& plan);
SpecialNet bit_extract_special(const BitExtractPlan& plan);
// the uncorrected interpolant before the envelopes are applied
SpecialNet bit_extract_surrogate(const BitExtractPlan& plan);
// envelope height: max(1, sup of the surrogate on the safe region)
Numeric bit_extract_envelope_height(const BitExtractPlan& plan);
// [t_{jn} - delta, t_{jn}) for j = 1..n, where the surrogate is uncontrolled
std::vector<Interval> bit_extract_unsafe_intervals(const BitExtractPlan& plan);

using ScalarOracle = std::function<Numeric(const Numeric&)>;

// coarse interpolant at j/n
Cpwl1D coarse_interpolant(const ScalarOracle& f, size_t n);
// greedy signs for the residual f - coarse_interpolant
BitExtractPlan yarotsky_plan(const ScalarOracle& f, size_t n);
// S_0 + (2/N) S_1 for Lip-1 f on [0, 1]; n even, n >= 4
ReluNet yarotsky_approx(const ScalarOracle& f, size_t n);

}  // namespace relucalc
