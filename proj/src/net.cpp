#include "relucalc/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relucalc {

ReluNet::ReluNet(size_t input_dim, std::vector<LayerParams> layers) : d_(input_dim), layers_(std::move(layers)) {
  if (d_ == 0) throw std::invalid_argument("input dimension must be positive");
  if (layers_.size() < 2) throw std::invalid_argument("net needs at least one hidden layer and an output layer");
  size_t fan_in = d_;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const auto& lp = layers_[l];
    if (lp.weights.cols != fan_in)
      throw std::invalid_argument("layer " + std::to_string(l + 1) + ": fan-in " + std::to_string(lp.weights.cols) +
                                  " does not match previous fan-out " + std::to_string(fan_in));
    if (lp.weights.rows != lp.bias.size())
      throw std::invalid_argument("layer " + std::to_string(l + 1) + ": bias length differs from row count");
    if (lp.weights.rows == 0) throw std::invalid_argument("layer " + std::to_string(l + 1) + " is empty");
    if (lp.weights.a.size() != lp.weights.rows * lp.weights.cols)
      throw std::invalid_argument("layer " + std::to_string(l + 1) + ": malformed weight storage");
    fan_in = lp.weights.rows;
  }
}

size_t ReluNet::width() const {
  size_t w = 0;
  for (size_t l = 0; l + 1 < layers_.size(); ++l) w = std::max(w, layers_[l].weights.rows);
  return w;
}

bool ReluNet::is_exact() const {
  for (const auto& lp : layers_) {
    for (const auto& x : lp.weights.a)
      if (!x.is_exact()) return false;
    for (const auto& x : lp.bias)
      if (!x.is_exact()) return false;
  }
  return true;
}

Box Box::cube(size_t d, Numeric lo, Numeric hi) {
  Box b;
  b.axes.assign(d, Interval{std::move(lo), std::move(hi)});
  return b;
}

Box Box::unbounded(size_t d) {
  double inf = std::numeric_limits<double>::infinity();
  return cube(d, Numeric::real(-inf), Numeric::real(inf));
}

bool Box::bounded() const {
  for (const auto& a : axes)
    if (!a.lo.is_finite() || !a.hi.is_finite()) return false;
  return true;
}

bool Box::contains(std::span<const Numeric> x) const {
  if (x.size() != axes.size()) return false;
  for (size_t i = 0; i < x.size(); ++i)
    if (x[i] < axes[i].lo || x[i] > axes[i].hi) return false;
  return true;
}

SpecialNet::SpecialNet(ReluNet net, std::vector<ChannelRole> roles, std::optional<Box> domain_hint)
    : net_(std::move(net)), roles_(std::move(roles)), hint_(std::move(domain_hint)) {
  const size_t W = roles_.size();
  const size_t d = net_.input_dim();
  for (size_t l = 0; l < net_.depth(); ++l)
    if (net_.layer_width(l) != W) throw std::invalid_argument("special net must have constant width equal to #roles");
  for (size_t c = 0; c < W; ++c) {
    const auto& r = roles_[c];
    if (r.relu_free && r.kind == ChannelRole::Kind::Compute)
      throw std::invalid_argument("compute channel cannot be ReLU-free");
    if (r.kind != ChannelRole::Kind::Source) continue;
    if (r.coordinate >= d) throw std::invalid_argument("source channel coordinate out of range");
    for (size_t l = 0; l < net_.depth(); ++l) {
      const auto& lp = net_.layer(l);
      size_t want = l == 0 ? r.coordinate : c;
      for (size_t j = 0; j < lp.weights.cols; ++j)
        if (lp.weights(c, j) != Numeric(j == want ? 1 : 0))
          throw std::invalid_argument("source channel " + std::to_string(c) + " does not carry x" +
                                      std::to_string(r.coordinate + 1) + " at layer " + std::to_string(l + 1));
      if (!lp.bias[c].is_zero()) throw std::invalid_argument("source channel with nonzero bias");
    }
  }
  if (hint_ && hint_->dim() != d) throw std::invalid_argument("domain hint dimension mismatch");
}

bool SpecialNet::has_relu_free() const {
  return std::any_of(roles_.begin(), roles_.end(), [](const ChannelRole& r) { return r.relu_free; });
}

size_t param_count_formula(size_t d, size_t d_out, size_t W, size_t L) {
  return (d + 1) * W + W * (W + 1) * (L - 1) + d_out * (W + 1);
}

namespace {

Vec affine(const LayerParams& lp, const Vec& x) {
  Vec z = lp.bias;
  for (size_t i = 0; i < lp.weights.rows; ++i) {
    const Numeric* row = &lp.weights.a[i * lp.weights.cols];
    for (size_t j = 0; j < lp.weights.cols; ++j) {
      if (row[j].is_zero() || x[j].is_zero()) continue;
      z[i] += row[j] * x[j];
    }
  }
  return z;
}

Vec forward(const ReluNet& net, std::span<const Numeric> x, const std::vector<ChannelRole>* roles,
            std::vector<Vec>* pre) {
  if (x.size() != net.input_dim())
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", net expects " +
                                std::to_string(net.input_dim()));
  Vec v(x.begin(), x.end());
  for (size_t l = 0; l < net.depth(); ++l) {
    Vec z = affine(net.layer(l), v);
    if (pre) pre->push_back(z);
    for (size_t i = 0; i < z.size(); ++i)
      if (!(roles && (*roles)[i].relu_free)) z[i] = relu(z[i]);
    v = std::move(z);
  }
  return affine(net.output_layer(), v);
}

}  // namespace

Vec eval(const ReluNet& net, std::span<const Numeric> x) { return forward(net, x, nullptr, nullptr); }

Vec eval(const SpecialNet& net, std::span<const Numeric> x) { return forward(net.net(), x, &net.roles(), nullptr); }

Numeric eval1(const ReluNet& net, const Numeric& t) {
  if (net.input_dim() != 1 || net.output_dim() != 1) throw std::invalid_argument("eval1 needs a scalar net");
  return forward(net, std::span<const Numeric>(&t, 1), nullptr, nullptr)[0];
}

std::vector<Vec> preactivations(const ReluNet& net, std::span<const Numeric> x) {
  std::vector<Vec> pre;
  forward(net, x, nullptr, &pre);
  return pre;
}

NetStats stats(const ReluNet& net) {
  NetStats s;
  s.width = net.width();
  s.depth = net.depth();
  s.param_count = param_count_formula(net.input_dim(), net.output_dim(), s.width, s.depth);
  return s;
}

ReluNet pad_to_width(const ReluNet& net, size_t target) {
  if (target < net.width())
    throw std::invalid_argument("pad target " + std::to_string(target) + " below current width " +
                                std::to_string(net.width()));
  std::vector<LayerParams> out;
  size_t prev_old = net.input_dim(), prev_new = net.input_dim();
  for (size_t l = 0; l <= net.depth(); ++l) {
    const auto& lp = net.layer(l);
    size_t rows = l < net.depth() ? target : lp.weights.rows;
    LayerParams np{Matrix(rows, prev_new), Vec(rows)};
    for (size_t i = 0; i < lp.weights.rows; ++i) {
      for (size_t j = 0; j < prev_old; ++j) np.weights(i, j) = lp.weights(i, j);
      np.bias[i] = lp.bias[i];
    }
    out.push_back(std::move(np));
    prev_old = lp.weights.rows;
    prev_new = rows;
  }
  return ReluNet(net.input_dim(), std::move(out));
}

ReluNet normalize_first_layer(const ReluNet& net) {
  std::vector<LayerParams> layers = net.layers();
  auto& l1 = layers[0];
  auto& l2 = layers[1];
  for (size_t i = 0; i < l1.weights.rows; ++i) {
    Numeric n2 = 0;
    for (size_t j = 0; j < l1.weights.cols; ++j) n2 += l1.weights(i, j) * l1.weights(i, j);
    if (n2.is_zero()) {
      // constant neuron (b)+ moves into the next layer's bias
      Numeric c = relu(l1.bias[i]);
      for (size_t k = 0; k < l2.weights.rows; ++k) {
        if (!c.is_zero()) l2.bias[k] += l2.weights(k, i) * c;
        l2.weights(k, i) = Numeric(0).to_mode(l2.weights(k, i).mode());
      }
      l1.bias[i] = Numeric(0).to_mode(l1.bias[i].mode());
      continue;
    }
    Numeric s;
    if (!exact_sqrt(n2, s)) s = Numeric::real(std::sqrt(n2.to_double()));
    if (s == Numeric(1)) continue;
    for (size_t j = 0; j < l1.weights.cols; ++j) l1.weights(i, j) /= s;
    l1.bias[i] /= s;
    for (size_t k = 0; k < l2.weights.rows; ++k) l2.weights(k, i) *= s;
  }
  return ReluNet(net.input_dim(), std::move(layers));
}

namespace {

// lift relu-free nodes above zero and cancel the shift in the next layer
ReluNet lift_relu_free(const SpecialNet& snet, const std::vector<Vec>& lower) {
  const ReluNet& net = snet.net();
  std::vector<LayerParams> layers = net.layers();
  const auto& roles = snet.roles();
  for (size_t l = 0; l < net.depth(); ++l) {
    auto& next = layers[l + 1];
    for (size_t i = 0; i < layers[l].weights.rows; ++i) {
      if (!roles[i].relu_free) continue;
      const Numeric& a = lower.at(l).at(i);
      if (!a.is_finite()) throw std::runtime_error("interval bound unavailable");
      if (a.sign() >= 0) continue;
      Numeric lift = ceil(-a);
      layers[l].bias[i] += lift;
      for (size_t k = 0; k < next.weights.rows; ++k)
        if (!next.weights(k, i).is_zero()) next.bias[k] -= next.weights(k, i) * lift;
    }
  }
  return ReluNet(net.input_dim(), std::move(layers));
}

void check_box(const SpecialNet& snet, const Box& K) {
  if (K.dim() != snet.net().input_dim()) throw std::invalid_argument("box dimension does not match the net");
  if (!K.bounded()) throw std::invalid_argument("special_to_relu needs a bounded box");
}

}  // namespace

ReluNet special_to_relu(const SpecialNet& snet, const Box& K) {
  check_box(snet, K);
  const ReluNet& net = snet.net();
  if (!snet.has_relu_free()) return net;

  // interval propagation
  std::vector<Vec> lower;
  Vec lo, hi;
  for (const auto& a : K.axes) {
    lo.push_back(a.lo);
    hi.push_back(a.hi);
  }
  const auto& roles = snet.roles();
  for (size_t l = 0; l < net.depth(); ++l) {
    const auto& lp = net.layer(l);
    Vec nlo(lp.weights.rows), nhi(lp.weights.rows);
    for (size_t i = 0; i < lp.weights.rows; ++i) {
      Numeric a = lp.bias[i], b = lp.bias[i];
      for (size_t j = 0; j < lp.weights.cols; ++j) {
        const Numeric& w = lp.weights(i, j);
        int s = w.sign();
        if (s == 0) continue;
        a += w * (s > 0 ? lo[j] : hi[j]);
        b += w * (s > 0 ? hi[j] : lo[j]);
      }
      if (!a.is_finite() || !b.is_finite()) throw std::runtime_error("interval bound unavailable");
      nlo[i] = roles[i].relu_free ? a : relu(a);
      nhi[i] = roles[i].relu_free ? b : relu(b);
    }
    lower.push_back(nlo);
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  return lift_relu_free(snet, lower);
}

ReluNet special_to_relu(const SpecialNet& snet, const Box& K, const std::vector<Vec>& lower) {
  check_box(snet, K);
  if (lower.size() != snet.net().depth()) throw std::invalid_argument("one bound vector per hidden layer");
  if (!snet.has_relu_free()) return snet.net();
  return lift_relu_free(snet, lower);
}

ReluNet to_mode(const ReluNet& net, Mode m) {
  std::vector<LayerParams> layers = net.layers();
  for (auto& lp : layers) {
    for (auto& x : lp.weights.a) x = x.to_mode(m);
    for (auto& x : lp.bias) x = x.to_mode(m);
  }
  return ReluNet(net.input_dim(), std::move(layers));
}

ReluNet zero_net(size_t d, size_t width, size_t depth) {
  std::vector<LayerParams> layers;
  size_t prev = d;
  for (size_t l = 0; l < depth; ++l) {
    layers.push_back({Matrix(width, prev), Vec(width)});
    prev = width;
  }
  layers.push_back({Matrix(1, prev), Vec(1)});
  return ReluNet(d, std::move(layers));
}

FloatEvaluator::FloatEvaluator(const ReluNet& net, std::vector<bool> relu_free)
    : d_(net.input_dim()), relu_free_(std::move(relu_free)) {
  for (const auto& lp : net.layers()) {
    Layer L{lp.weights.rows, lp.weights.cols, {}, {}};
    L.w.reserve(lp.weights.a.size());
    for (const auto& x : lp.weights.a) L.w.push_back(x.to_double());
    for (const auto& x : lp.bias) L.b.push_back(x.to_double());
    layers_.push_back(std::move(L));
  }
}

namespace {
std::vector<bool> relu_free_mask(const SpecialNet& s) {
  std::vector<bool> m;
  for (const auto& r : s.roles()) m.push_back(r.relu_free);
  return m;
}
}  // namespace

FloatEvaluator::FloatEvaluator(const SpecialNet& net) : FloatEvaluator(net.net(), relu_free_mask(net)) {}

std::vector<double> FloatEvaluator::operator()(std::span<const double> x) const {
  if (x.size() != d_) throw std::invalid_argument("input dimension mismatch");
  std::vector<double> v(x.begin(), x.end()), z;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    z.assign(L.b.begin(), L.b.end());
    for (size_t i = 0; i < L.rows; ++i) {
      const double* row = &L.w[i * L.cols];
      double acc = z[i];
      for (size_t j = 0; j < L.cols; ++j) acc += row[j] * v[j];
      z[i] = acc;
    }
    if (l + 1 < layers_.size())
      for (size_t i = 0; i < z.size(); ++i)
        if (!(i < relu_free_.size() && relu_free_[i]) && z[i] < 0) z[i] = 0;
    std::swap(v, z);
  }
  return v;
}

double FloatEvaluator::scalar(std::span<const double> x) const { return (*this)(x)[0]; }

}  // namespace relucalc
