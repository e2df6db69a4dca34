#include "relucalc/recovery.hpp"

#include "relucalc/affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace relucalc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_eigen(const Matrix& A) {
  MatrixXd M(A.rows, A.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) M(long(i), long(j)) = A(i, j).to_double();
  return M;
}

VectorXd to_eigen(const Vec& v) {
  VectorXd r(long(v.size()));
  for (size_t i = 0; i < v.size(); ++i) r(long(i)) = v[i].to_double();
  return r;
}

VectorXd to_eigen(const RealVec& v) { return Eigen::Map<const VectorXd>(v.data(), long(v.size())); }
RealVec to_std(const VectorXd& v) { return RealVec(v.data(), v.data() + v.size()); }

std::vector<Vec> gram_rows(const Matrix& A) {
  std::vector<Vec> G(A.rows, Vec(A.rows));
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.rows; ++k) {
      Numeric s = 0;
      for (size_t j = 0; j < A.cols; ++j) s += A(i, j) * A(k, j);
      G[i][k] = s;
    }
  return G;
}

// A^T (A A^T)^{-1} r
Vec lift(const Matrix& A, const Vec& r) {
  auto G = gram_rows(A);
  if (rank(G) < A.rows) throw std::invalid_argument("A must have full row rank");
  auto z = solve_linear(G, r);
  if (!z) throw std::invalid_argument("A must have full row rank");
  Vec out(A.cols, Numeric(0));
  for (size_t j = 0; j < A.cols; ++j)
    for (size_t i = 0; i < A.rows; ++i) out[j] += A(i, j) * (*z)[i];
  return out;
}

Vec apply(const Matrix& A, const Vec& x) {
  Vec out(A.rows, Numeric(0));
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) out[i] += A(i, j) * x[j];
  return out;
}

double sup_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Forward {
  std::vector<VectorXd> a;  // a[0] = x, a[l] post-activation of hidden layer l
  std::vector<VectorXd> z;  // pre-activations of hidden layers
  double out = 0;
};

std::vector<MatrixXd> weights_of(const ReluNet& net) {
  std::vector<MatrixXd> W;
  for (const auto& lp : net.layers()) W.push_back(to_eigen(lp.weights));
  return W;
}

std::vector<VectorXd> biases_of(const ReluNet& net) {
  std::vector<VectorXd> b;
  for (const auto& lp : net.layers()) b.push_back(to_eigen(lp.bias));
  return b;
}

Forward forward(const std::vector<MatrixXd>& W, const std::vector<VectorXd>& b, const RealVec& x) {
  Forward f;
  f.a.push_back(to_eigen(x));
  for (size_t l = 0; l + 1 < W.size(); ++l) {
    f.z.push_back(W[l] * f.a.back() + b[l]);
    f.a.push_back(f.z.back().cwiseMax(0.0));
  }
  f.out = (W.back() * f.a.back() + b.back())(0);
  return f;
}

RealVec gradient(const std::vector<MatrixXd>& W, const std::vector<VectorXd>& b, const RealVec& x) {
  Forward f = forward(W, b, x);
  const size_t L = W.size() - 1;
  std::vector<MatrixXd> gW(W.size());
  std::vector<VectorXd> gb(W.size());
  VectorXd delta = VectorXd::Ones(1);
  for (size_t l = L + 1; l-- > 0;) {
    gW[l] = delta * f.a[l].transpose();
    gb[l] = delta;
    if (l == 0) break;
    VectorXd back = W[l].transpose() * delta;
    for (long i = 0; i < back.size(); ++i)
      if (!(f.z[l - 1](i) > 0)) back(i) = 0;
    delta = back;
  }
  RealVec g;
  for (size_t l = 0; l <= L; ++l) {
    for (long i = 0; i < gW[l].rows(); ++i)
      for (long j = 0; j < gW[l].cols(); ++j) g.push_back(gW[l](i, j));
    for (long i = 0; i < gb[l].size(); ++i) g.push_back(gb[l](i));
  }
  return g;
}

double train_loss(const std::vector<MatrixXd>& W, const std::vector<VectorXd>& b, const TrainData& data) {
  double s = 0;
  for (size_t i = 0; i < data.x.size(); ++i) {
    double r = data.y[i] - forward(W, b, data.x[i]).out;
    s += r * r;
  }
  return s;
}

// stored parameters back into matrices
void unpack(const RealVec& theta, std::vector<MatrixXd>& W, std::vector<VectorXd>& b) {
  size_t k = 0;
  for (size_t l = 0; l < W.size(); ++l) {
    for (long i = 0; i < W[l].rows(); ++i)
      for (long j = 0; j < W[l].cols(); ++j) W[l](i, j) = theta[k++];
    for (long i = 0; i < b[l].size(); ++i) b[l](i) = theta[k++];
  }
}

RealVec pack(const std::vector<MatrixXd>& W, const std::vector<VectorXd>& b) {
  RealVec theta;
  for (size_t l = 0; l < W.size(); ++l) {
    for (long i = 0; i < W[l].rows(); ++i)
      for (long j = 0; j < W[l].cols(); ++j) theta.push_back(W[l](i, j));
    for (long i = 0; i < b[l].size(); ++i) theta.push_back(b[l](i));
  }
  return theta;
}

VectorXd sqrt_weights(const RealVec& q, size_t N) {
  if (q.empty()) return VectorXd::Ones(long(N));
  if (q.size() != N) throw std::invalid_argument("one quadrature weight per sample");
  VectorXd s = VectorXd::Zero(long(N));
  for (size_t i = 0; i < N; ++i) {
    if (!(q[i] > 0)) throw std::invalid_argument("quadrature weights must be positive");
    s(long(i)) = std::sqrt(q[i]);
  }
  return s;
}

// columns scaled into the Euclidean picture
MatrixXd columns(const std::vector<RealVec>& vs, const VectorXd& sq) {
  MatrixXd M(sq.size(), long(vs.size()));
  for (size_t j = 0; j < vs.size(); ++j) {
    if (long(vs[j].size()) != sq.size()) throw std::invalid_argument("vector length mismatch");
    M.col(long(j)) = to_eigen(vs[j]).cwiseProduct(sq);
  }
  return M;
}

}  // namespace

Vec min_norm_solution(const Matrix& A, const Vec& y) {
  if (A.rows == 0 || A.cols == 0) throw std::invalid_argument("empty system");
  if (y.size() != A.rows) throw std::invalid_argument("y must have one entry per row of A");
  return lift(A, y);
}

Vec null_component(const Matrix& A, const Vec& theta) {
  if (theta.size() != A.cols) throw std::invalid_argument("theta must have one entry per column of A");
  Vec p = lift(A, apply(A, theta));
  Vec out = theta;
  for (size_t j = 0; j < out.size(); ++j) out[j] -= p[j];
  return out;
}

GdResult gd_linear_regression(const RegressionInstance& inst, const GdOptions& opts) {
  const Matrix& A = inst.A;
  if (inst.theta0.size() != A.cols) throw std::invalid_argument("theta0 must have one entry per column of A");
  GdResult res;
  Vec star = min_norm_solution(A, inst.y);
  Vec null0 = null_component(A, inst.theta0);
  res.theta_star = to_std(to_eigen(star));
  VectorXd limit = to_eigen(star) + to_eigen(null0);
  res.limit = to_std(limit);

  const MatrixXd M = to_eigen(A);
  const VectorXd y = to_eigen(inst.y);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M.transpose() * M, Eigen::EigenvaluesOnly);
  res.lambda_max = eig.eigenvalues().maxCoeff();
  res.eta = opts.eta > 0 ? opts.eta : 0.5 / res.lambda_max;
  if (!(res.eta * res.lambda_max < 1)) throw std::invalid_argument("step size must satisfy eta < 1 / lambda_max(A^T A)");

  // projector onto W-perp (null space of A) for the drift check
  const MatrixXd P = MatrixXd::Identity(M.cols(), M.cols()) -
                     M.transpose() * (M * M.transpose()).ldlt().solve(M);
  VectorXd theta = to_eigen(inst.theta0);
  const VectorXd n0 = P * theta;
  auto loss = [&](const VectorXd& t) { return (y - M * t).squaredNorm(); };
  res.loss.push_back(loss(theta));
  for (size_t k = 0; k < opts.max_steps; ++k) {
    theta -= res.eta * 2.0 * M.transpose() * (M * theta - y);
    res.steps = k + 1;
    res.loss.push_back(loss(theta));
    res.null_drift = std::max(res.null_drift, sup_norm(P * theta - n0));
    if (!std::isfinite(res.loss.back()) ||
        (res.loss.size() > opts.window && res.loss.back() > res.loss[res.loss.size() - 1 - opts.window] * (1 + 1e-9) + 1e-300)) {
      res.diverged = true;
      break;
    }
    if (sup_norm(theta - limit) <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.theta = to_std(theta);
  res.limit_error = sup_norm(theta - limit);
  return res;
}

size_t param_count(const ReluNet& net) {
  size_t c = 0;
  for (const auto& lp : net.layers()) c += lp.weights.rows * lp.weights.cols + lp.bias.size();
  return c;
}

RealVec get_params(const ReluNet& net) { return pack(weights_of(net), biases_of(net)); }

ReluNet set_params(const ReluNet& net, const RealVec& theta) {
  if (theta.size() != param_count(net)) throw std::invalid_argument("parameter vector length mismatch");
  std::vector<LayerParams> layers;
  size_t k = 0;
  for (const auto& lp : net.layers()) {
    LayerParams out{Matrix(lp.weights.rows, lp.weights.cols), Vec(lp.bias.size())};
    for (auto& w : out.weights.a) w = Numeric::real(theta[k++]);
    for (auto& b : out.bias) b = Numeric::real(theta[k++]);
    layers.push_back(std::move(out));
  }
  return ReluNet(net.input_dim(), std::move(layers));
}

double eval_real(const ReluNet& net, const RealVec& x) {
  if (x.size() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
  return forward(weights_of(net), biases_of(net), x).out;
}

RealVec param_gradient(const ReluNet& net, const RealVec& x) {
  if (net.output_dim() != 1) throw std::invalid_argument("scalar output required");
  if (x.size() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
  return gradient(weights_of(net), biases_of(net), x);
}

ReluNet random_net(size_t d, size_t W, size_t L, uint64_t seed) {
  if (d == 0 || W == 0 || L == 0) throw std::invalid_argument("d, W and L must be positive");
  std::mt19937_64 rng(seed);
  std::vector<LayerParams> layers;
  size_t fan_in = d;
  for (size_t l = 0; l <= L; ++l) {
    const size_t rows = l == L ? 1 : W;
    std::normal_distribution<double> g(0.0, std::sqrt((l == L ? 1.0 : 2.0) / double(fan_in)));
    LayerParams lp{Matrix(rows, fan_in), Vec(rows, Numeric::real(0))};
    for (auto& w : lp.weights.a) w = Numeric::real(g(rng));
    layers.push_back(std::move(lp));
    fan_in = rows;
  }
  return ReluNet(d, std::move(layers));
}

TrainResult gd_train_net(const ReluNet& net, const TrainData& data, double eta, size_t steps) {
  if (data.x.size() != data.y.size()) throw std::invalid_argument("one target per sample");
  if (net.output_dim() != 1) throw std::invalid_argument("scalar output required");
  auto W = weights_of(net);
  auto b = biases_of(net);
  RealVec theta = pack(W, b);
  TrainResult res{net, {}, false};
  res.loss.push_back(train_loss(W, b, data));
  for (size_t k = 0; k < steps; ++k) {
    RealVec grad(theta.size(), 0.0);
    for (size_t i = 0; i < data.x.size(); ++i) {
      const double r = forward(W, b, data.x[i]).out - data.y[i];
      if (r == 0) continue;
      RealVec g = gradient(W, b, data.x[i]);
      for (size_t j = 0; j < g.size(); ++j) grad[j] += 2 * r * g[j];
    }
    for (size_t j = 0; j < theta.size(); ++j) theta[j] -= eta * grad[j];
    unpack(theta, W, b);
    res.loss.push_back(train_loss(W, b, data));
    if (!std::isfinite(res.loss.back())) {
      res.diverged = true;
      break;
    }
  }
  res.net = set_params(net, theta);
  return res;
}

ScaledNet ntk_init(size_t d, size_t W, uint64_t seed) {
  if (d == 0 || W == 0) throw std::invalid_argument("d and W must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double s = 1.0 / std::sqrt(double(W));
  LayerParams hidden{Matrix(W, d), Vec(W)};
  for (auto& w : hidden.weights.a) w = Numeric::real(g(rng));
  for (auto& b : hidden.bias) b = Numeric::real(g(rng));
  LayerParams out{Matrix(1, W), Vec{Numeric::real(0)}};
  for (auto& a : out.weights.a) a = Numeric::real(s * g(rng));
  RealVec scales(W * d + W, 1.0);
  scales.insert(scales.end(), W, s);
  scales.push_back(1.0);
  return {ReluNet(d, {hidden, out}), scales};
}

RealMat empirical_ntk(const ReluNet& net, const std::vector<RealVec>& points, const RealVec& scales) {
  if (!scales.empty() && scales.size() != param_count(net)) throw std::invalid_argument("one scale per parameter");
  const auto W = weights_of(net);
  const auto b = biases_of(net);
  std::vector<VectorXd> G;
  for (const auto& x : points) {
    VectorXd g = to_eigen(gradient(W, b, x));
    if (!scales.empty()) g = g.cwiseProduct(to_eigen(scales));
    G.push_back(std::move(g));
  }
  RealMat K(points.size(), RealVec(points.size()));
  for (size_t i = 0; i < G.size(); ++i)
    for (size_t j = i; j < G.size(); ++j) K[i][j] = K[j][i] = 2 * G[i].dot(G[j]);
  return K;
}

RealVec symmetric_eigenvalues(const RealMat& K) {
  const long n = long(K.size());
  MatrixXd M(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) M(i, j) = K[size_t(i)].at(size_t(j));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return to_std(eig.eigenvalues());
}

double inner(const RealVec& q, const RealVec& u, const RealVec& v) {
  if (u.size() != v.size()) throw std::invalid_argument("vector length mismatch");
  double s = 0;
  for (size_t i = 0; i < u.size(); ++i) s += (q.empty() ? 1.0 : q[i]) * u[i] * v[i];
  return s;
}

void RecoverySetup::validate() const {
  if (sigma.empty() || omega.empty()) throw std::invalid_argument("Sigma_n and W need nonempty bases");
  const size_t N = omega[0].size();
  sqrt_weights(weights, N);
  if (w.size() != omega.size()) throw std::invalid_argument("one data value per measurement");
  for (size_t i = 0; i < omega.size(); ++i)
    for (size_t j = 0; j < omega.size(); ++j) {
      double g = inner(weights, omega[i], omega[j]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-10) throw std::invalid_argument("measurement system is not orthonormal");
    }
  for (const auto& s : sigma)
    if (s.size() != N) throw std::invalid_argument("basis vector length mismatch");
}

RecoveryResult optimal_recovery_linear(const RecoverySetup& setup) {
  setup.validate();
  const size_t N = setup.omega[0].size();
  const VectorXd sq = sqrt_weights(setup.weights, N);
  const MatrixXd Om = columns(setup.omega, sq);
  const MatrixXd B = columns(setup.sigma, sq);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
  if (qr.rank() < B.cols()) throw std::invalid_argument("degenerate basis of Sigma_n");
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(B.rows(), B.cols());

  RecoveryResult res;
  const MatrixXd cross = Om.transpose() * Q;
  double smin = 0;
  if (cross.cols() <= cross.rows()) {
    Eigen::JacobiSVD<MatrixXd> svd(cross);
    smin = svd.singularValues().minCoeff();
  }
  res.mu_infinite = smin < 1e-12;
  res.mu = res.mu_infinite ? std::numeric_limits<double>::infinity() : 1.0 / smin;

  const VectorXd w = to_eigen(setup.w);
  const VectorXd c = (Om.transpose() * B).completeOrthogonalDecomposition().solve(w);
  const VectorXd v = B * c;
  const VectorXd u = Om * w + v - Om * (Om.transpose() * v);
  res.v_star = to_std(v.cwiseQuotient(sq));
  res.u_star = to_std(u.cwiseQuotient(sq));
  const double gap = (u - v).squaredNorm();
  res.R_hat = res.mu_infinite ? std::numeric_limits<double>::infinity()
                              : res.mu * std::sqrt(std::max(0.0, setup.eps * setup.eps - gap));
  return res;
}

RealVec measure(const RecoverySetup& setup, const RealVec& f) {
  RealVec w;
  for (const auto& om : setup.omega) w.push_back(inner(setup.weights, f, om));
  return w;
}

double distance_to_sigma(const RecoverySetup& setup, const RealVec& f) {
  const VectorXd sq = sqrt_weights(setup.weights, f.size());
  const MatrixXd B = columns(setup.sigma, sq);
  const VectorXd ff = to_eigen(f).cwiseProduct(sq);
  const VectorXd c = B.colPivHouseholderQr().solve(ff);
  return (ff - B * c).norm();
}

GreedyResult greedy_hull_approx(const std::vector<RealVec>& dictionary, const RealVec& f, size_t n,
                                const RealVec& weights) {
  if (dictionary.empty()) throw std::invalid_argument("empty dictionary");
  const VectorXd sq = sqrt_weights(weights, f.size());
  const MatrixXd D = columns(dictionary, sq);
  const VectorXd ff = to_eigen(f).cwiseProduct(sq);
  GreedyResult res;
  VectorXd approx = VectorXd::Zero(ff.size());
  for (size_t k = 0; k < n; ++k) {
    const VectorXd r = ff - approx;
    long best = 0;
    (D.transpose() * r).cwiseAbs().maxCoeff(&best);
    res.selected.push_back(size_t(best));
    MatrixXd S(ff.size(), long(res.selected.size()));
    for (size_t j = 0; j < res.selected.size(); ++j) S.col(long(j)) = D.col(long(res.selected[j]));
    approx = S * S.completeOrthogonalDecomposition().solve(ff);
    res.error.push_back((ff - approx).norm());
  }
  res.approximant = to_std(approx.cwiseQuotient(sq));
  return res;
}

double loglog_slope(const std::vector<double>& error, size_t k_lo, size_t k_hi, double floor) {
  k_hi = std::min(k_hi, error.size());
  if (k_lo == 0 || k_hi <= k_lo) throw std::invalid_argument("need at least two steps in range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t cnt = 0;
  for (size_t k = k_lo; k <= k_hi; ++k) {
    double x = std::log(double(k)), y = std::log(std::max(error[k - 1], floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  return (double(cnt) * sxy - sx * sy) / (double(cnt) * sxx - sx * sx);
}

void write_curve_csv(std::ostream& os, const std::vector<double>& curve) {
  os << "step,value\n";
  os.precision(17);
  for (size_t i = 0; i < curve.size(); ++i) os << i << ',' << curve[i] << '\n';
}

}  // namespace relucalc
