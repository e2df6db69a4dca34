#pragma once

#include <vector>

#include "relucalc/net.hpp"

namespace relucalc {

// x -> A x + b, A of shape (target input dim) x (new input dim)
struct AffineMap {
  Matrix A;
  Vec b;

  static AffineMap scaled(size_t d, const Numeric& a, const Vec& c);  // x -> a x + c
  size_t in_dim() const { return A.cols; }
  size_t out_dim() const { return A.rows; }
};

ReluNet parallelize_sum(const std::vector<ReluNet>& nets, const Vec& alpha);
// outer(inner(x)); depth adds
ReluNet concatenate_compose(const ReluNet& outer, const ReluNet& inner);
// appends identity-carry layers ((y)+ - (-y)+) so that depth becomes target
ReluNet extend_depth(const ReluNet& net, size_t target_depth);
SpecialNet add_by_depth(const std::vector<ReluNet>& nets, const Vec& alpha, const Box& R);
ReluNet shift_dilate(const ReluNet& net, const Numeric& a, const Vec& c);
// net(A x + b); only the first hidden layer changes
ReluNet precompose(const ReluNet& net, const AffineMap& map);
// affine map of the output: y -> s*y + t (scalar output)
ReluNet scale_output(const ReluNet& net, const Numeric& s, const Numeric& t = 0);
// sum_i alpha_i T^{(i)} on the interval [lo, hi] (T maps it into itself)
ReluNet power_sum(const ReluNet& T, const Vec& alpha, const Interval& domain = {0, 1});

struct TranslateDilateTerm {
  AffineMap map;
  Numeric coefficient;
};
// sum_j c_j phi(A_j x + b_j) for x in R
ReluNet translate_dilate_sum(const ReluNet& phi, const std::vector<TranslateDilateTerm>& terms, const Box& R);

}  // namespace relucalc
