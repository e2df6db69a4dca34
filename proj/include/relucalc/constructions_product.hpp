#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "relucalc/net.hpp"

namespace relucalc {

// S_n(t) = t - sum_{k<=n} 4^-k H^k(t); width 4, depth n
ReluNet square_net(size_t n);
// Pi_n(x1, x2) = 2 S_n((x1 + x2)/2) - (S_n(x1) + S_n(x2))/2; width 5, depth 3n
ReluNet product_net(size_t n);
// Pi_n^k(x) = Pi_n(x_k, Pi_n^{k-1}); width 3 + k, depth 3(k-1)n.
// With a != 1 the result is a^k Pi_n^k(x / a), meant for [0, a]^k.
ReluNet kproduct_net(size_t k, size_t n, const Numeric& a = 1);

struct MultiIndex {
  std::vector<size_t> nu;
  size_t dim() const { return nu.size(); }
  size_t order() const;
};

// x^nu on [0, 1]^d by a product chain. A variable of exponent one lends its
// channel to the running product, which gives width 3 + d; otherwise 4 + d.
ReluNet monomial_net(const MultiIndex& nu, size_t n);

struct PolynomialTerm {
  MultiIndex nu;
  Numeric c;
};
// sum c_nu x^nu on [0, 1]^d; terms share the source channels and one
// collation channel. Width 3 + d for degree <= 2, 4 + d for degree 3, 5 + d above.
ReluNet polynomial_net(const std::vector<PolynomialTerm>& terms, size_t n);
// upper bound e m 4^-n sum |c_nu| (m the degree)
double polynomial_error_bound(const std::vector<PolynomialTerm>& terms, size_t n);

// Pi_n^d(g_1(x_1), ..., g_d(x_d)); each g_j maps [0, 1] into [0, 1]
ReluNet tensor_net(const std::vector<ReluNet>& factors, size_t n);

// exact N_r(x_1) ... N_r(x_d) from the truncated power sum
Numeric bspline_ref(size_t r, const Vec& x);
// univariate cardinal B-spline of order r (support [0, r])
Numeric bspline1(size_t r, const Numeric& t);

// tensor B-spline surrogate: power chain, truncated powers, T_r, ReLU and a
// clamp at 1, product of the d factors, then min with the tent over [0, r]^d.
// Exactly zero off [0, r]^d for every input.
ReluNet bspline_net(size_t r, size_t d, size_t n);

struct DyadicCube {
  size_t k = 0;
  std::vector<long> j;
  friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
    return std::tie(a.k, a.j) < std::tie(b.k, b.j);
  }
};

struct BsplineCoeffs {
  size_t d = 1;
  std::map<DyadicCube, Numeric> entries;

  // JSON list of {"k": .., "j": [..], "c": "p/q"}
  static BsplineCoeffs from_json(const std::string& text);
  std::string to_json() const;
  // every cube lies in D_k([0,1]^d) for order r
  void validate(size_t r) const;
};

// sum c_I N_r(2^k x - j), exactly
Numeric bspline_sum_ref(const BsplineCoeffs& coeffs, size_t r, const Vec& x);

struct BesovBudget {
  double s = 1, tau = 1, p = 2;
  size_t d = 1;
  size_t L = 4;
  double delta = 0, lambda = 0;

  // fills delta and lambda; throws unless delta > 0 and tau < p
  static BesovBudget make(double s, double tau, double p, size_t d, size_t L);
  double eps(size_t k) const;     // 2 log2(k + 1)
  double J(size_t k) const;       // (s - d/tau) k
  double J_plus(size_t k) const;  // m(j, k) = 0 for j >= J_plus(k)
  // right side R of the accuracy condition (2m + 1) p >= R
  double rhs(long j, size_t k) const;
  // smallest nonnegative m with (2m + 1) p >= rhs(j, k)
  size_t m(long j, size_t k) const;
  size_t beta() const;  // max(1, ceil(2d / (s - delta)))
};

// magnitude class: 2^-j <= |c| < 2^{1-j}; c != 0
long magnitude_class(const Numeric& c);

struct BesovCell {
  long j = 0;
  size_t k = 0;
  size_t count = 0;  // #Lambda(j, k)
  size_t m = 0;
  double J = 0, J_plus = 0;
};

struct BesovReport {
  std::vector<BesovCell> cells;
  size_t A = 0;                      // sum m(j, k) #Lambda(j, k)
  bool zero_beyond_J_plus = true;    // m(j, k) = 0 whenever j >= J_plus(k)
  bool empty_below_J = true;         // Lambda(j, k) empty for j < J_k
  size_t max_m = 0;
  size_t max_m_at_J = 0;             // max over populated k of m(ceil J_k, k)
  size_t approximated = 0;           // cubes with m(I) > 0
  size_t width = 0, depth = 0;
};

struct BesovApproximant {
  SpecialNet net;
  BesovReport report;
};

// report only, no nets
BesovReport besov_report(const BsplineCoeffs& coeffs, const BesovBudget& budget);
// S = sum over m(I) > 0 of c_I N_r^(m(I))(2^k x - j), added by depth on [0, 1]^d
BesovApproximant besov_approximant(const BsplineCoeffs& coeffs, size_t r, const BesovBudget& budget);

}  // namespace relucalc
