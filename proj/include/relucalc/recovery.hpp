#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "relucalc/net.hpp"

namespace relucalc {

using RealVec = std::vector<double>;
using RealMat = std::vector<RealVec>;  // row-major

// ---- min-norm regression and the gradient descent limit ----

struct RegressionInstance {
  Matrix A;      // m x n
  Vec y;         // m
  Vec theta0;    // n
};

// A^T (A A^T)^{-1} y, exact in Exact mode; throws unless A has full row rank
Vec min_norm_solution(const Matrix& A, const Vec& y);
// theta - A^T (A A^T)^{-1} A theta
Vec null_component(const Matrix& A, const Vec& theta);

struct GdOptions {
  double eta = 0;            // 0 selects 1 / (2 lambda_max(A^T A))
  size_t max_steps = 100000;
  double tol = 1e-6;         // sup-norm distance to the predicted limit
  size_t window = 50;        // loss increase over this many steps counts as divergence
};

struct GdResult {
  RealVec theta;             // final iterate
  RealVec limit;             // theta* + P_{W-perp} theta0
  RealVec theta_star;
  double lambda_max = 0;     // of A^T A
  double eta = 0;
  size_t steps = 0;
  double limit_error = 0;    // sup-norm distance of theta to limit
  double null_drift = 0;     // max_k sup-norm of P_{W-perp}(theta^k - theta^0)
  bool converged = false;
  bool diverged = false;
  std::vector<double> loss;  // loss per step, starting at theta0
};

// gradient descent on sum_i (y_i - (A theta)_i)^2; throws if eta >= 1 / lambda_max(A^T A)
GdResult gd_linear_regression(const RegressionInstance& inst, const GdOptions& opts = {});

// ---- toy net training and the empirical tangent kernel ----

// parameters in layer order: weights row-major, then biases
size_t param_count(const ReluNet& net);
RealVec get_params(const ReluNet& net);
ReluNet set_params(const ReluNet& net, const RealVec& theta);
double eval_real(const ReluNet& net, const RealVec& x);
// dS(x; theta)/dtheta by backpropagation; ReLU'(0) = 0
RealVec param_gradient(const ReluNet& net, const RealVec& x);

// Gaussian weights N(0, 2/fan_in), zero biases, widths W, depth L, one output
ReluNet random_net(size_t d, size_t W, size_t L, uint64_t seed);

struct TrainData {
  std::vector<RealVec> x;
  RealVec y;
};
struct TrainResult {
  ReluNet net;
  std::vector<double> loss;  // loss before each step and after the last
  bool diverged = false;
};
// full-batch gradient descent on sum_i (y_i - S(x_i))^2
TrainResult gd_train_net(const ReluNet& net, const TrainData& data, double eta, size_t steps);

// One hidden layer in the tangent-kernel parameterization:
// S(x) = W^{-1/2} sum_j a_j (w_j . x + b_j)_+ with all free parameters N(0, 1).
// scales[l] maps free to stored parameters (stored = scale * free).
struct ScaledNet {
  ReluNet net;
  RealVec scales;
};
ScaledNet ntk_init(size_t d, size_t W, uint64_t seed);

// K(x, x') = 2 sum_l dS(x)/dtheta_l dS(x')/dtheta_l; gradients taken with
// respect to free parameters when scales are given
RealMat empirical_ntk(const ReluNet& net, const std::vector<RealVec>& points, const RealVec& scales = {});
// eigenvalues of a symmetric matrix, ascending
RealVec symmetric_eigenvalues(const RealMat& K);

// ---- linear optimal recovery ----

// Discrete L2: <u, v> = sum_i q_i u_i v_i over sample points.
struct RecoverySetup {
  RealVec weights;               // quadrature weights q_i > 0
  std::vector<RealVec> sigma;    // basis of the linear space Sigma_n
  std::vector<RealVec> omega;    // orthonormal measurement functionals spanning W
  RealVec w;                     // data w_j = <f, omega_j>
  double eps = 0;                // approximation radius of the model class

  void validate() const;
};

struct RecoveryResult {
  RealVec v_star;
  RealVec u_star;
  double mu = 0;                 // reciprocal cosine between Sigma_n and W
  bool mu_infinite = false;
  double R_hat = 0;              // mu (eps^2 - ||u* - v*||^2)^{1/2}; infinite with mu
};

RecoveryResult optimal_recovery_linear(const RecoverySetup& setup);
double inner(const RealVec& q, const RealVec& u, const RealVec& v);
// coefficients <f, omega_j>
RealVec measure(const RecoverySetup& setup, const RealVec& f);
// distance of f to Sigma_n in the weighted norm
double distance_to_sigma(const RecoverySetup& setup, const RealVec& f);

// ---- orthogonal greedy algorithm ----

struct GreedyResult {
  RealVec approximant;
  std::vector<double> error;     // ||f - f_k|| for k = 1..n
  std::vector<size_t> selected;
};
// dictionary elements should have unit norm in the weighted inner product
GreedyResult greedy_hull_approx(const std::vector<RealVec>& dictionary, const RealVec& f, size_t n,
                                const RealVec& weights = {});
// least-squares slope of log error against log k over k in [k_lo, k_hi];
// errors are floored at `floor` before taking logs
double loglog_slope(const std::vector<double>& error, size_t k_lo, size_t k_hi, double floor = 1e-14);

// CSV with header "step,value"
void write_curve_csv(std::ostream& os, const std::vector<double>& curve);

}  // namespace relucalc
