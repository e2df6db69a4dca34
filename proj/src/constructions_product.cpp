#include "relucalc/constructions_product.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "relucalc/calculus.hpp"
#include "relucalc/channel_builder.hpp"

namespace relucalc {

namespace {

using Operand = std::function<Lin()>;

const Numeric kHalf = Numeric::rational(1, 2);
const Numeric kQuarter = Numeric::rational(1, 4);

Lin node(size_t ch) { return Lin::node(ch); }

// A channel that repeats its value each layer; owed is written once first.
struct Held {
  size_t ch = 0;
  bool live = false;
  bool has_owed = false;
  Lin owed;

  void start(size_t c, Lin v) {
    ch = c;
    live = true;
    owed = std::move(v);
    has_owed = true;
  }
  void hold(ChannelNetBuilder& nb) {
    if (!live) return;
    nb.set(ch, has_owed ? owed : node(ch));
    has_owed = false;
  }
  // value as seen from the next layer written
  Lin value() const { return has_owed ? owed : node(ch); }
};

// Drives the sawtooth pair (a, b) and one accumulating channel.
class Emitter {
 public:
  Emitter(ChannelNetBuilder& nb, size_t a, size_t b) : nb_(nb), a_(a), b_(b) {}

  std::function<void()> before, after;

  void restart(size_t ch, Lin base) {
    acc_ = ch;
    pending_ = std::move(base);
    fresh_ = true;
  }

  // n layers adding w sum_k 4^-k H^k(op) + lin op; op is read at the first one
  void pass(const Operand& op, const Numeric& w, const Numeric& lin, size_t n) {
    Numeric q = w;
    for (size_t k = 0; k < n; ++k) {
      nb_.next_layer();
      if (before) before();
      Lin in;
      if (k == 0) {
        in = op();
        if (!lin.is_zero()) pending_ += in * lin;
      } else {
        in = hat();
      }
      nb_.set(a_, in);
      nb_.set(b_, in - kHalf);
      nb_.set(acc_, fresh_ ? pending_ : node(acc_) + pending_);
      fresh_ = false;
      q *= kQuarter;
      pending_ = hat() * q;
      if (after) after();
    }
  }

  Lin value() const { return fresh_ ? pending_ : node(acc_) + pending_; }

 private:
  Lin hat() const { return node(a_) * Numeric(2) + node(b_) * Numeric(-4); }

  ChannelNetBuilder& nb_;
  size_t a_, b_, acc_ = 0;
  Lin pending_;
  bool fresh_ = true;
};

struct Chain {
  std::vector<Operand> factors;  // factors[0] starts the running product
  std::vector<size_t> scratch;   // products between stages and their carries
  size_t fin = SIZE_MAX;         // receives w * product; SIZE_MAX: a scratch channel
  std::function<Lin()> fin_base; // fin's value when the last stage starts
  Numeric w = 1;
};

// Pi_n(f_j, P_{j-1}) for j = 1..m-1; em.value() is the result afterwards
void emit_chain(ChannelNetBuilder& nb, Emitter& em, const Chain& c, size_t n, const std::function<void()>& keep) {
  const size_t m = c.factors.size();
  if (m < 2) throw std::logic_error("chain needs two factors");
  Held carry;
  em.before = keep;
  em.after = [&] { carry.hold(nb); };
  Operand P = c.factors[0];
  for (size_t j = 1; j < m; ++j) {
    const bool last = j + 1 == m;
    if (j >= 2) {
      carry.start(c.scratch.at((j - 2) % 2), em.value());
      P = [&carry] { return carry.value(); };
    }
    const Numeric w = last ? c.w : Numeric(1);
    size_t acc = last && c.fin != SIZE_MAX ? c.fin : c.scratch.at((j - 1) % 2);
    em.restart(acc, last && c.fin_base ? c.fin_base() : Lin{});
    Operand u = c.factors[j];
    Operand mid = [&] { return (u() + P()) * kHalf; };
    em.pass(mid, w * Numeric(-2), w, n);
    em.pass(P, w * kHalf, 0, n);
    em.pass(u, w * kHalf, 0, n);
  }
  em.before = nullptr;
  em.after = nullptr;
}

// channel that repeats input i, reading the raw input at the first layer
Lin reg_value(const ChannelNetBuilder& nb, size_t ch, size_t i) { return nb.layers() == 1 ? Lin::node(i) : node(ch); }

ReluNet finish_on_cube(ChannelNetBuilder& nb, const Lin& out, size_t d) {
  nb.begin_output();
  Box unit = Box::cube(d, 0, 1);
  return special_to_relu(nb.finish(out, unit), unit);
}

long factorial(size_t r) {
  long f = 1;
  for (size_t i = 2; i <= r; ++i) f *= long(i);
  return f;
}

long binomial(size_t r, size_t k) {
  long b = 1;
  for (size_t i = 1; i <= k; ++i) b = b * long(r - k + i) / long(i);
  return b;
}

// block-diagonal stack; net j reads the next input_dim(j) coordinates
ReluNet stack(const std::vector<ReluNet>& nets) {
  size_t L = 0;
  for (const auto& n : nets) L = std::max(L, n.depth());
  std::vector<ReluNet> ext;
  for (const auto& n : nets) ext.push_back(extend_depth(n, L));
  std::vector<LayerParams> layers;
  for (size_t l = 0; l <= L; ++l) {
    size_t rows = 0, cols = 0;
    for (const auto& n : ext) {
      rows += n.layer(l).weights.rows;
      cols += n.layer(l).weights.cols;
    }
    LayerParams lp{Matrix(rows, cols), Vec(rows)};
    size_t r0 = 0, c0 = 0;
    for (const auto& n : ext) {
      const auto& src = n.layer(l);
      for (size_t i = 0; i < src.weights.rows; ++i) {
        for (size_t j = 0; j < src.weights.cols; ++j) lp.weights(r0 + i, c0 + j) = src.weights(i, j);
        lp.bias[r0 + i] = src.bias[i];
      }
      r0 += src.weights.rows;
      c0 += src.weights.cols;
    }
    layers.push_back(std::move(lp));
  }
  size_t d = 0;
  for (const auto& n : ext) d += n.input_dim();
  return ReluNet(d, std::move(layers));
}

void check_n(size_t n) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
}

}  // namespace

ReluNet square_net(size_t n) {
  check_n(n);
  ChannelNetBuilder nb(1, {ChannelRole::source(0), ChannelRole::compute(), ChannelRole::compute(),
                           ChannelRole::collation()});
  Emitter em(nb, 1, 2);
  em.restart(3, Lin{});
  em.pass([&] { return nb.input(0); }, -1, 1, n);
  return finish_on_cube(nb, em.value(), 1);
}

ReluNet product_net(size_t n) { return kproduct_net(2, n); }

ReluNet kproduct_net(size_t k, size_t n, const Numeric& a) {
  if (k < 2) throw std::invalid_argument("kproduct_net needs k >= 2");
  check_n(n);
  if (a.sign() <= 0) throw std::invalid_argument("scale must be positive");
  MultiIndex nu{std::vector<size_t>(k, 1)};
  ReluNet net = monomial_net(nu, n);
  if (a == Numeric(1)) return net;
  Numeric ak = 1;
  for (size_t i = 0; i < k; ++i) ak *= a;
  return scale_output(precompose(net, AffineMap::scaled(k, Numeric(1) / a, Vec(k))), ak);
}

size_t MultiIndex::order() const {
  size_t m = 0;
  for (size_t v : nu) m += v;
  return m;
}

ReluNet monomial_net(const MultiIndex& nu, size_t n) {
  check_n(n);
  const size_t d = nu.dim(), m = nu.order();
  if (d == 0) throw std::invalid_argument("multi-index must have at least one entry");
  if (m < 2) {
    // constant or a single coordinate
    std::vector<ChannelRole> roles;
    for (size_t i = 0; i < d; ++i) roles.push_back(ChannelRole::source(i));
    ChannelNetBuilder nb(d, roles);
    nb.next_layer();
    nb.begin_output();
    Lin out = Lin::constant(1);
    for (size_t i = 0; i < d; ++i)
      if (nu.nu[i]) out = nb.input(i);
    Box unit = Box::cube(d, 0, 1);
    return special_to_relu(nb.finish(out, unit), unit);
  }

  size_t first = SIZE_MAX;
  for (size_t i = 0; i < d && first == SIZE_MAX; ++i)
    if (nu.nu[i] == 1) first = i;
  const bool reuse = first != SIZE_MAX;
  if (!reuse)
    for (size_t i = 0; i < d && first == SIZE_MAX; ++i)
      if (nu.nu[i]) first = i;

  std::vector<ChannelRole> roles;
  for (size_t i = 0; i < d; ++i) roles.push_back(reuse && i == first ? ChannelRole::collation() : ChannelRole::source(i));
  const size_t a = d, b = d + 1, coll = d + 2;
  roles.insert(roles.end(), {ChannelRole::compute(), ChannelRole::compute(), ChannelRole::collation()});
  std::vector<size_t> scratch{coll};
  if (m >= 3) {
    if (reuse) {
      scratch.push_back(first);
    } else {
      scratch.push_back(roles.size());
      roles.push_back(ChannelRole::collation());
    }
  }

  ChannelNetBuilder nb(d, roles);
  Chain c;
  c.factors.push_back(reuse ? Operand([&nb, first] { return reg_value(nb, first, first); })
                            : Operand([&nb, first] { return nb.input(first); }));
  for (size_t i = 0; i < d; ++i)
    for (size_t e = i == first ? 1 : 0; e < nu.nu[i]; ++e) c.factors.push_back([&nb, i] { return nb.input(i); });
  c.scratch = scratch;
  auto keep = [&] {
    if (reuse) nb.set(first, reg_value(nb, first, first));
  };
  Emitter em(nb, a, b);
  emit_chain(nb, em, c, n, keep);
  return finish_on_cube(nb, em.value(), d);
}

ReluNet polynomial_net(const std::vector<PolynomialTerm>& terms, size_t n) {
  check_n(n);
  if (terms.empty()) throw std::invalid_argument("polynomial needs at least one term");
  const size_t d = terms[0].nu.dim();
  size_t m = 0;
  for (const auto& t : terms) {
    if (t.nu.dim() != d) throw std::invalid_argument("all multi-indices must have the same length");
    m = std::max(m, t.nu.order());
  }
  if (d == 0) throw std::invalid_argument("multi-index must have at least one entry");
  if (m >= 2 && (size_t(1) << (n - 1)) < m) throw std::invalid_argument("n is too small: need n >= 1 + log2(m)");

  std::vector<ChannelRole> roles;
  for (size_t i = 0; i < d; ++i) roles.push_back(ChannelRole::source(i));
  const size_t a = d, b = d + 1, poly_ch = d + 2;
  roles.insert(roles.end(), {ChannelRole::compute(), ChannelRole::compute(), ChannelRole::collation()});
  std::vector<size_t> scratch;
  for (size_t s = 0; m >= 3 + s && s < 2; ++s) {
    scratch.push_back(roles.size());
    roles.push_back(ChannelRole::collation());
  }

  ChannelNetBuilder nb(d, roles);
  Emitter em(nb, a, b);
  Held poly;
  Lin linear;
  for (const auto& t : terms) {
    if (t.c.is_zero()) continue;
    if (t.nu.order() < 2) {
      Lin x = Lin::constant(1);
      for (size_t i = 0; i < d; ++i)
        if (t.nu.nu[i]) x = Lin::node(i);  // input index, remapped at the output
      linear += x * t.c;
      continue;
    }
    Chain c;
    for (size_t i = 0; i < d; ++i)
      for (size_t e = 0; e < t.nu.nu[i]; ++e) c.factors.push_back([&nb, i] { return nb.input(i); });
    c.scratch = scratch;
    c.fin = poly_ch;
    c.fin_base = [&poly] { return poly.live ? poly.value() : Lin{}; };
    c.w = t.c;
    emit_chain(nb, em, c, n, [&] { poly.hold(nb); });
    poly.start(poly_ch, em.value());
  }
  if (nb.layers() == 0) nb.next_layer();
  nb.begin_output();
  Lin out = poly.live ? poly.value() : Lin{};
  out.c += linear.c;
  for (const auto& [i, w] : linear.terms) out += nb.input(i) * w;
  Box unit = Box::cube(d, 0, 1);
  return special_to_relu(nb.finish(out, unit), unit);
}

double polynomial_error_bound(const std::vector<PolynomialTerm>& terms, size_t n) {
  size_t m = 0;
  double sum = 0;
  for (const auto& t : terms) {
    m = std::max(m, t.nu.order());
    if (t.nu.order() >= 2) sum += std::abs(t.c.to_double());
  }
  if (m < 2) return 0;
  return std::exp(1.0) * double(m) * std::pow(4.0, -double(n)) * sum;
}

ReluNet tensor_net(const std::vector<ReluNet>& factors, size_t n) {
  check_n(n);
  if (factors.empty()) throw std::invalid_argument("tensor needs at least one factor");
  for (const auto& f : factors)
    if (f.input_dim() != 1 || f.output_dim() != 1) throw std::invalid_argument("tensor factors must be scalar functions of one variable");
  if (factors.size() == 1) return factors[0];
  std::vector<ReluNet> padded;
  for (const auto& f : factors) padded.push_back(f.width() < 3 ? pad_to_width(f, 3) : f);
  return concatenate_compose(kproduct_net(factors.size(), n), stack(padded));
}

// ---- B-splines

Numeric bspline1(size_t r, const Numeric& t) {
  if (r == 0) throw std::invalid_argument("B-spline order must be at least 1");
  Numeric sum = 0;
  for (size_t k = 0; k <= r; ++k) {
    Numeric x = Numeric(long(k)) - t;
    if (x.sign() <= 0) continue;
    Numeric pw = 1;
    for (size_t e = 0; e + 1 < r; ++e) pw *= x;
    Numeric term = pw * Numeric(binomial(r, k));
    if ((r - k) % 2) sum -= term;
    else sum += term;
  }
  return sum / Numeric(factorial(r - 1));
}

Numeric bspline_ref(size_t r, const Vec& x) {
  Numeric v = 1;
  for (const auto& xi : x) v *= bspline1(r, xi);
  return v;
}

namespace {

// t -> (g, u): g the clamped spline surrogate in [0, 1], u = t_+.
// Only g depends on relu-free channels, so u is exact on all of R.
ReluNet spline_factor(size_t r, size_t n) {
  const size_t m = r - 1;
  const size_t u_ch = 0, s_ch = 1, a = 2, b = 3, T_ch = 4;
  std::vector<ChannelRole> roles{ChannelRole::compute(), ChannelRole::compute(), ChannelRole::compute(),
                                 ChannelRole::compute(), ChannelRole::collation()};
  std::vector<size_t> scratch;
  for (size_t s = 0; m >= 3 + s && s < 2; ++s) {
    scratch.push_back(roles.size());
    roles.push_back(ChannelRole::collation());
  }
  ChannelNetBuilder nb(1, roles);
  auto U = [&] { return nb.layers() == 1 ? Lin::node(0) : node(u_ch); };
  Held T, s;
  auto keep = [&] {
    nb.set(u_ch, U());
    s.hold(nb);
    T.hold(nb);
  };
  Emitter em(nb, a, b);
  Numeric rm = 1;
  for (size_t i = 0; i < m; ++i) rm *= Numeric(long(r));
  const Numeric fact(factorial(r - 1));
  // the k = 0 term vanishes on [0, r]
  for (size_t k = 1; k <= r; ++k) {
    Numeric coef = Numeric(binomial(r, k)) / fact;
    if ((r - k) % 2) coef = -coef;
    if (m == 1) {
      nb.next_layer();
      keep();
      nb.set(a, Lin::constant(long(k)) - U());
      T.start(T_ch, (T.live ? node(T_ch) : Lin{}) + node(a) * coef);
      continue;
    }
    nb.next_layer();
    keep();
    nb.set(s_ch, (Lin::constant(long(k)) - U()) * Numeric::rational(1, long(r)));
    s.live = true;
    s.ch = s_ch;
    Chain c;
    for (size_t i = 0; i < m; ++i) c.factors.push_back([] { return node(1); });
    c.scratch = scratch;
    c.fin = T_ch;
    c.fin_base = [&T] { return T.live ? T.value() : Lin{}; };
    c.w = coef * rm;
    emit_chain(nb, em, c, n, keep);
    T.start(T_ch, em.value());
  }
  s.live = false;
  // T_r^+ clamped at 1: 1 - (1 - relu(T))_+
  Lin Tv = T.value();
  T.live = false;
  nb.next_layer();
  keep();
  nb.set(a, Tv);
  nb.next_layer();
  keep();
  nb.set(b, Lin::constant(1) - node(a));
  nb.begin_output();
  Box K = Box::cube(1, 0, long(r));
  return special_to_relu(nb.finish(std::vector<Lin>{Lin::constant(1) - node(b), node(u_ch)}, K), K);
}

// inputs (g_1, u_1, ..., g_d, u_d) -> relu(min(Pi_n^d(g), tent(u_1), ..., tent(u_d)))
ReluNet spline_combine(size_t r, size_t d, size_t n) {
  std::vector<ChannelRole> roles;
  roles.push_back(ChannelRole::collation());  // g_1, later a running product
  for (size_t i = 1; i < d; ++i) roles.push_back(ChannelRole::source(2 * i));
  const size_t a = d, b = d + 1, coll = d + 2, sig = d + 3, tmp = 2 * d + 3;
  roles.insert(roles.end(), {ChannelRole::compute(), ChannelRole::compute(), ChannelRole::collation()});
  for (size_t i = 0; i < 2 * d; ++i) roles.push_back(ChannelRole::compute());
  ChannelNetBuilder nb(2 * d, roles);
  const Numeric rr = Numeric(long(r));
  // tent(u) = (u - (2u - r)_+)_+ over two layers, then repeated
  auto tents = [&] {
    const size_t l = nb.layers();
    for (size_t i = 0; i < d; ++i) {
      if (l == 1) {
        nb.set(sig + i, Lin::node(2 * i + 1));
        nb.set(tmp + i, Lin::node(2 * i + 1) * Numeric(2) - rr);
      } else if (l == 2) {
        nb.set(sig + i, node(sig + i) - node(tmp + i));
      } else {
        nb.set(sig + i, node(sig + i));
      }
    }
  };
  auto keep = [&] {
    nb.set(0, reg_value(nb, 0, 0));
    tents();
  };
  Lin prod;
  if (d == 1) {
    for (int l = 0; l < 2; ++l) {
      nb.next_layer();
      keep();
    }
    prod = node(0);
  } else {
    Chain c;
    c.factors.push_back([&nb] { return reg_value(nb, 0, 0); });
    for (size_t i = 1; i < d; ++i) c.factors.push_back([&nb, i] { return nb.input(2 * i); });
    c.scratch = {coll, 0};
    Emitter em(nb, a, b);
    emit_chain(nb, em, c, n, keep);
    prod = em.value();
  }
  // running min m <- m - (m - tent_i)_+, kept nonnegative so relu carries it
  for (size_t i = 0; i < d; ++i) {
    nb.next_layer();
    tents();
    Lin cur = i == 0 ? prod : node(a) - node(b);
    nb.set(a, cur);
    nb.set(b, cur - node(sig + i));
  }
  nb.begin_output();
  Box K;
  for (size_t i = 0; i < d; ++i) {
    K.axes.push_back({0, 1});
    K.axes.push_back({0, long(r)});
  }
  return special_to_relu(nb.finish(node(a) - node(b), K), K);
}

}  // namespace

ReluNet bspline_net(size_t r, size_t d, size_t n) {
  if (r < 2) throw std::invalid_argument("bspline_net needs r >= 2");
  if (d == 0) throw std::invalid_argument("dimension must be at least 1");
  check_n(n);
  ReluNet f = spline_factor(r, n);
  return concatenate_compose(spline_combine(r, d, n), stack(std::vector<ReluNet>(d, f)));
}

// ---- coefficients and the Besov budget

BsplineCoeffs BsplineCoeffs::from_json(const std::string& text) {
  nlohmann::json js = nlohmann::json::parse(text);
  if (!js.is_array()) throw std::invalid_argument("B-spline coefficients must be a JSON list");
  BsplineCoeffs out;
  bool have_d = false;
  for (const auto& e : js) {
    DyadicCube I;
    long k = e.at("k").get<long>();
    if (k < 0) throw std::invalid_argument("dyadic level must be nonnegative");
    I.k = size_t(k);
    I.j = e.at("j").get<std::vector<long>>();
    if (I.j.empty()) throw std::invalid_argument("lattice offset must be nonempty");
    if (have_d && I.j.size() != out.d) throw std::invalid_argument("lattice offsets have mixed dimensions");
    out.d = I.j.size();
    have_d = true;
    const auto& c = e.at("c");
    Numeric v = c.is_string() ? Numeric::parse(c.get<std::string>()) : Numeric::parse(c.dump());
    if (!out.entries.emplace(I, v).second) throw std::invalid_argument("duplicate dyadic cube");
  }
  return out;
}

std::string BsplineCoeffs::to_json() const {
  nlohmann::json js = nlohmann::json::array();
  for (const auto& [I, c] : entries) js.push_back({{"k", I.k}, {"j", I.j}, {"c", c.str()}});
  return js.dump();
}

void BsplineCoeffs::validate(size_t r) const {
  for (const auto& [I, c] : entries) {
    if (I.j.size() != d) throw std::invalid_argument("lattice offset has the wrong dimension");
    const long hi = (1L << I.k) - 1;
    for (long ji : I.j)
      if (ji <= -long(r) || ji > hi) throw std::invalid_argument("cube support misses [0,1]^d");
  }
}

Numeric bspline_sum_ref(const BsplineCoeffs& coeffs, size_t r, const Vec& x) {
  if (x.size() != coeffs.d) throw std::invalid_argument("point has the wrong dimension");
  Numeric sum = 0;
  for (const auto& [I, c] : coeffs.entries) {
    Vec y(x.size());
    const Numeric scale = Numeric::pow2(long(I.k));
    for (size_t i = 0; i < x.size(); ++i) y[i] = scale * x[i] - Numeric(I.j[i]);
    sum += c * bspline_ref(r, y);
  }
  return sum;
}

BesovBudget BesovBudget::make(double s, double tau, double p, size_t d, size_t L) {
  if (!(s > 0) || !(tau > 0) || !(p >= 1) || d == 0) throw std::invalid_argument("invalid Besov parameters");
  if (!(tau < p)) throw std::invalid_argument("the budget needs tau < p");
  BesovBudget b;
  b.s = s;
  b.tau = tau;
  b.p = p;
  b.d = d;
  b.L = L;
  b.delta = s - double(d) / tau + double(d) / p;
  if (!(b.delta > 0)) throw std::invalid_argument("delta = s - d/tau + d/p must be positive");
  b.lambda = 1 / (1 / tau - 1 / p);
  return b;
}

double BesovBudget::eps(size_t k) const { return 2 * std::log2(double(k) + 1); }
double BesovBudget::J(size_t k) const { return (s - double(d) / tau) * double(k); }

double BesovBudget::J_plus(size_t k) const {
  return (eps(k) + double(L) * s / double(d) - double(k) * s * tau / p) / (1 - tau / p);
}

double BesovBudget::rhs(long j, size_t k) const {
  return p * eps(k) + double(L) * s * p / double(d) - double(k) * s * tau - double(j) * (p - tau);
}

size_t BesovBudget::m(long j, size_t k) const {
  double R = rhs(j, k);
  if (R <= p) return 0;
  return size_t(std::ceil((R - p) / (2 * p) - 1e-12));
}

size_t BesovBudget::beta() const {
  return std::max<size_t>(1, size_t(std::ceil(2 * double(d) / (s - delta) - 1e-12)));
}

long magnitude_class(const Numeric& c) {
  if (c.is_zero()) throw std::invalid_argument("magnitude class of zero");
  Numeric a = abs(c);
  long e = long(std::floor(std::log2(a.to_double())));
  while (Numeric::pow2(e) > a) --e;
  while (Numeric::pow2(e + 1) <= a) ++e;
  return -e;
}

BesovReport besov_report(const BsplineCoeffs& coeffs, const BesovBudget& budget) {
  if (coeffs.d != budget.d && !coeffs.entries.empty()) throw std::invalid_argument("coefficient and budget dimensions differ");
  std::map<std::pair<size_t, long>, size_t> counts;
  for (const auto& [I, c] : coeffs.entries)
    if (!c.is_zero()) ++counts[{I.k, magnitude_class(c)}];
  BesovReport rep;
  std::map<size_t, bool> levels;
  for (const auto& [key, count] : counts) {
    const auto [k, j] = key;
    BesovCell cell{j, k, count, budget.m(j, k), budget.J(k), budget.J_plus(k)};
    rep.A += cell.m * count;
    if (double(j) >= cell.J_plus && cell.m != 0) rep.zero_beyond_J_plus = false;
    if (double(j) < cell.J) rep.empty_below_J = false;
    rep.max_m = std::max(rep.max_m, cell.m);
    if (cell.m > 0) rep.approximated += count;
    rep.cells.push_back(cell);
    levels[k] = true;
  }
  for (const auto& [k, unused] : levels)
    rep.max_m_at_J = std::max(rep.max_m_at_J, budget.m(long(std::ceil(budget.J(k) - 1e-12)), k));
  return rep;
}

BesovApproximant besov_approximant(const BsplineCoeffs& coeffs, size_t r, const BesovBudget& budget) {
  coeffs.validate(r);
  BesovReport rep = besov_report(coeffs, budget);
  const size_t d = coeffs.entries.empty() ? budget.d : coeffs.d;
  std::vector<ReluNet> nets;
  Vec alpha;
  std::map<size_t, ReluNet> cache;
  for (const auto& [I, c] : coeffs.entries) {
    if (c.is_zero()) continue;
    size_t mI = budget.m(magnitude_class(c), I.k);
    if (mI == 0) continue;
    auto it = cache.find(mI);
    if (it == cache.end()) it = cache.emplace(mI, bspline_net(r, d, mI)).first;
    Vec shift;
    for (long ji : I.j) shift.push_back(Numeric(-ji));
    nets.push_back(shift_dilate(it->second, Numeric::pow2(long(I.k)), shift));
    alpha.push_back(c);
  }
  Box unit = Box::cube(d, 0, 1);
  if (nets.empty()) {
    ReluNet z = zero_net(d);
    std::vector<ChannelRole> roles(z.width(), ChannelRole::compute());
    SpecialNet net(z, roles, unit);
    rep.width = z.width();
    rep.depth = z.depth();
    return {std::move(net), rep};
  }
  SpecialNet net = add_by_depth(nets, alpha, unit);
  rep.width = net.net().width();
  rep.depth = net.net().depth();
  return {std::move(net), rep};
}

}  // namespace relucalc
