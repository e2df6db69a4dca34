#include "relucalc/constructions_1d.hpp"

#include <stdexcept>

#include "cpwl_stream.hpp"
#include "relucalc/analysis.hpp"
#include "relucalc/channel_builder.hpp"

namespace relucalc {

using detail::CpwlStream;

namespace {

ReluNet one_layer(const Vec& w, const Vec& b, const Vec& c, const Numeric& c0) {
  LayerParams h{Matrix(w.size(), 1), b};
  LayerParams o{Matrix(1, w.size()), Vec{c0}};
  for (size_t i = 0; i < w.size(); ++i) {
    h.weights(i, 0) = w[i];
    o.weights(0, i) = c[i];
  }
  return ReluNet(1, {std::move(h), std::move(o)});
}

void check_increasing(const Vec& t) {
  for (size_t i = 1; i < t.size(); ++i)
    if (!(t[i - 1] < t[i])) throw std::invalid_argument("points must be strictly increasing");
}

}  // namespace

ReluNet hat(const Numeric& p1, const Numeric& p2, const Numeric& p3) {
  if (!(p1 < p2 && p2 < p3)) throw std::invalid_argument("hat needs p1 < p2 < p3");
  Numeric a = Numeric(1) / (p2 - p1), b = Numeric(1) / (p3 - p2);
  return one_layer({1, 1, 1}, {-p1, -p2, -p3}, {a, -(a + b), b}, 0);
}

ReluNet hat01() { return one_layer({1, 1}, {0, Numeric::rational(-1, 2)}, {2, -4}, 0); }

ReluNet sawtooth(size_t L) {
  if (L == 0) throw std::invalid_argument("sawtooth needs L >= 1");
  std::vector<LayerParams> layers;
  Vec b{0, Numeric::rational(-1, 2)};
  LayerParams first{Matrix(2, 1), b};
  first.weights(0, 0) = 1;
  first.weights(1, 0) = 1;
  layers.push_back(first);
  for (size_t l = 1; l < L; ++l) {
    LayerParams h{Matrix(2, 2), b};
    for (size_t i = 0; i < 2; ++i) {
      h.weights(i, 0) = 2;
      h.weights(i, 1) = -4;
    }
    layers.push_back(h);
  }
  LayerParams out{Matrix(1, 2), Vec{0}};
  out.weights(0, 0) = 2;
  out.weights(0, 1) = -4;
  layers.push_back(out);
  return ReluNet(1, std::move(layers));
}

ReluNet shallow_interpolant(const Vec& t, const Vec& y) {
  if (t.empty() || t.size() != y.size()) throw std::invalid_argument("need matching nonempty points and values");
  check_increasing(t);
  const size_t D = t.size();
  if (D == 1) return one_layer({0}, {0}, {0}, y[0]);
  Vec xi(D - 1), c(D - 1), w(D - 1, Numeric(1)), b(D - 1);
  for (size_t j = 0; j + 1 < D; ++j) {
    xi[j] = (t[j] + t[j + 1]) / Numeric(2);
    b[j] = -xi[j];
    // only knots left of t_{j+1} are active there
    Numeric acc = y[0];
    for (size_t i = 0; i < j; ++i) acc += c[i] * (t[j + 1] - xi[i]);
    c[j] = (y[j + 1] - acc) / (t[j + 1] - xi[j]);
  }
  return one_layer(w, b, c, y[0]);
}

ReluNet deep_interpolant(const Vec& t, const Vec& y) {
  if (t.size() < 2 || t.size() != y.size()) throw std::invalid_argument("need at least two points with values");
  check_increasing(t);
  if (t.front() < Numeric(0) || t.back() > Numeric(1)) throw std::invalid_argument("points must lie in [0, 1]");
  const size_t D = t.size();
  Vec s(D - 1);
  for (size_t i = 0; i + 1 < D; ++i) s[i] = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
  Cpwl1D g = Cpwl1D::interpolate(t, y, s.front(), s.back());
  ChannelNetBuilder nb(1, {ChannelRole::source(0), ChannelRole::compute(), ChannelRole::collation()});
  CpwlStream st(g, 1, 2);
  for (size_t l = 0; l + 1 < D; ++l) {
    nb.next_layer();
    st.step(nb, nb.input(0));
  }
  nb.begin_output();
  Box unit = Box::cube(1, 0, 1);
  return special_to_relu(nb.finish(st.value(nb), unit), unit);
}

ReluNet cpwl_to_net(const Cpwl1D& g0) {
  Cpwl1D g = g0.canonical();
  Vec k = g.kinks();
  if (k.empty()) {
    if (g.left_slope.is_zero()) return one_layer({0}, {0}, {0}, g(0));
    Numeric a = g.left_slope;
    return one_layer({1, -1}, {0, 0}, {a, -a}, g(0));
  }
  // slopes[j] is the slope left of kink j, slopes[K] the right ray
  Vec slopes{g.left_slope};
  for (size_t j = 0; j + 1 < k.size(); ++j) slopes.push_back((g(k[j + 1]) - g(k[j])) / (k[j + 1] - k[j]));
  slopes.push_back(g.right_slope);
  Vec w, b, c;
  if (g.right_slope.is_zero() && !g.left_slope.is_zero()) {
    // mirrored form g(k_K) + sum (s_{j+1} - s_j) (k_j - t)+
    for (size_t j = 0; j < k.size(); ++j) {
      w.push_back(-1);
      b.push_back(k[j]);
      c.push_back(slopes[j + 1] - slopes[j]);
    }
    return one_layer(w, b, c, g(k.back()));
  }
  if (!g.left_slope.is_zero()) {
    w.push_back(-1);
    b.push_back(k[0]);
    c.push_back(-g.left_slope);
  }
  for (size_t j = 0; j < k.size(); ++j) {
    w.push_back(1);
    b.push_back(-k[j]);
    c.push_back(j == 0 ? slopes[1] : slopes[j + 1] - slopes[j]);
  }
  return one_layer(w, b, c, g(k[0]));
}

// ---- bit extraction

void BitExtractPlan::validate() const {
  if (n < 4 || n % 2) throw std::invalid_argument("bit extraction needs an even n >= 4");
  if (eps.size() != N() || y.size() != N() + 1 || Y.size() != n)
    throw std::invalid_argument("bit extraction plan has inconsistent sizes");
  if (y[0] != 0) throw std::invalid_argument("y_0 must be 0");
  for (size_t i = 0; i < N(); ++i) {
    if (eps[i] != 1 && eps[i] != -1) throw std::invalid_argument("signs must be +1 or -1");
    if (y[i + 1] != y[i] + eps[i]) throw std::invalid_argument("y must be the partial sums of the signs");
  }
  for (size_t j = 0; j <= n; ++j)
    if (y[j * n] != 0) throw std::invalid_argument("y_{jn} must vanish for every block");
  if (delta != Numeric::pow2(-long(N()))) throw std::invalid_argument("delta must be 2^-N");
}

BitExtractPlan BitExtractPlan::from_signs(size_t n, std::vector<int> eps) {
  BitExtractPlan p;
  p.n = n;
  p.eps = std::move(eps);
  if (n < 4 || n % 2) throw std::invalid_argument("bit extraction needs an even n >= 4");
  if (p.eps.size() != n * n) throw std::invalid_argument("need n^2 signs");
  p.y.assign(1, 0);
  for (int e : p.eps) p.y.push_back(p.y.back() + e);
  for (size_t j = 0; j < n; ++j) {
    Numeric v = 0;
    for (size_t k = 0; k < n; ++k) v += Numeric(p.eps[j * n + k]) * Numeric::pow2(-long(k) - 1);
    p.Y.push_back(v);
  }
  p.delta = Numeric::pow2(-long(n * n));
  p.validate();
  return p;
}

BitExtractPlan BitExtractPlan::from_values(size_t n, const std::vector<long>& y) {
  if (y.size() != n * n + 1) throw std::invalid_argument("need n^2 + 1 values");
  std::vector<int> eps;
  for (size_t i = 0; i + 1 < y.size(); ++i) {
    long d = y[i + 1] - y[i];
    if (d != 1 && d != -1) throw std::invalid_argument("consecutive values must differ by one");
    eps.push_back(int(d));
  }
  if (y[0] != 0) throw std::invalid_argument("y_0 must be 0");
  return from_signs(n, std::move(eps));
}

namespace {

// channel layout
enum : size_t { SRC = 0, C1 = 1, F2 = 2, F3 = 3, C4 = 4, F5 = 5, C6 = 6, F7 = 7, C8 = 8, C9 = 9, C10 = 10 };

std::vector<ChannelRole> bit_roles() {
  auto c = ChannelRole::compute();
  auto f = ChannelRole::collation();
  return {ChannelRole::source(0), c, f, f, c, f, c, f, c, c, c};
}

// J (or Y): steps at j/n and (j+1)/n - delta
Cpwl1D block_staircase(const BitExtractPlan& p, const Vec& level, const Numeric& end_value) {
  const size_t n = p.n;
  Vec t, v;
  for (size_t j = 0; j < n; ++j) {
    Numeric a = Numeric::rational(long(j), long(n)), b = Numeric::rational(long(j + 1), long(n)) - p.delta;
    if (j > 0) {
      t.push_back(a);
      v.push_back(level[j]);
    }
    t.push_back(b);
    v.push_back(level[j]);
  }
  t.push_back(1);
  v.push_back(end_value);
  Numeric rs = (v.back() - v[v.size() - 2]) / p.delta;
  return Cpwl1D::interpolate(t, v, 0, rs);
}

Cpwl1D envelope(const BitExtractPlan& p, const Numeric& M, int sign) {
  const size_t n = p.n;
  Vec t{0}, v{0};
  for (size_t j = 1; j <= n; ++j) {
    Numeric eta(p.y[j * n - 1]);
    t.push_back(p.t((j - 1) * n + 1) - p.delta);
    v.push_back(M * Numeric(sign));
    t.push_back(p.t(j * n - 1));
    v.push_back(M * Numeric(sign));
    t.push_back(p.t(j * n) - p.delta);
    v.push_back(eta);
    t.push_back(p.t(j * n));
    v.push_back(0);
  }
  Numeric ls = (v[1] - v[0]) / (t[1] - t[0]);
  size_t K = t.size();
  Numeric rs = (v[K - 1] - v[K - 2]) / (t[K - 1] - t[K - 2]);
  return Cpwl1D::interpolate(t, v, ls, rs);
}

struct BuildOptions {
  bool surrogate_only = false;
  Numeric M = 1;
  const Cpwl1D* coarse = nullptr;  // adds S_0 + (2/N) S
};

SpecialNet build_bit_net(const BitExtractPlan& p, const BuildOptions& opt) {
  p.validate();
  const size_t n = p.n;
  ChannelNetBuilder b(1, bit_roles());
  Vec jlev, ylev;
  for (size_t j = 0; j < n; ++j) {
    jlev.push_back(Numeric(long(j)));
    ylev.push_back(p.Y[j]);
  }
  Cpwl1D J = block_staircase(p, jlev, Numeric(long(n)));
  Cpwl1D Yf = block_staircase(p, ylev, 0);
  CpwlStream js(J, C1, F2), ys(Yf, C4, F5);
  std::optional<CpwlStream> s0;
  if (opt.coarse) s0.emplace(*opt.coarse, C6, F7);
  // S_0 keeps stepping; past its last kink the stream just carries its value
  auto carry_s0 = [&]() {
    if (s0) s0->step(b, b.input(0));
  };

  // J and Y (and S_0) in parallel
  const size_t la = js.layers_needed();
  for (size_t l = 0; l < la; ++l) {
    b.next_layer();
    js.step(b, b.input(0));
    ys.step(b, b.input(0));
    carry_s0();
  }

  // K = J(n t - J(t)); u carried in F3, Y carried in F5
  CpwlStream ks(J, C1, F2);
  for (size_t l = 0; l < la; ++l) {
    b.next_layer();
    Lin u;
    if (l == 0) {
      u = b.input(0) * Numeric(long(n)) - js.value(b);
      b.set(F5, ys.value(b));
    } else {
      u = b.prev(F3);
      b.set(F5, b.prev(F5));
    }
    b.set(F3, u);
    ks.step(b, u);
    carry_s0();
  }

  // surrogate sum of T(B_nu + 3 (nu - K)_+)
  const Numeric inv_delta = Numeric(1) / p.delta;
  auto bhat = [&]() { return Lin::constant(-1) + b.prev(C4) - b.prev(C6); };
  auto tval = [&]() { return Lin::constant(-1) + b.prev(C8) - b.prev(C9) * Numeric(2) + b.prev(C10); };
  for (size_t m = 1; m <= n + 1; ++m) {
    b.next_layer();
    Lin K = m == 1 ? ks.value(b) : b.prev(F2);
    Lin R = m == 1 ? b.prev(F5) : b.prev(F3) * Numeric(2) - bhat();
    b.set(F2, K);
    b.set(F3, R);
    if (m <= n) {
      b.set(C4, R * inv_delta + Numeric(1));
      b.set(C6, R * inv_delta - Numeric(1));
      b.set(C1, Lin::constant(Numeric(long(m))) - K);
    }
    if (m >= 2) {
      Lin z = bhat() + b.prev(C1) * Numeric(3);
      b.set(C8, z + Numeric(1));
      b.set(C9, z - Numeric(1));
      b.set(C10, z - Numeric(2));
    }
    b.set(F5, m >= 3 ? b.prev(F5) + tval() : Lin{});
    carry_s0();
  }
  Lin stilde = b.prev(F5) + tval();
  Box unit = Box::cube(1, 0, 1);
  if (opt.surrogate_only) {
    b.begin_output();
    return b.finish(b.prev(F5) + tval(), unit);
  }

  // envelopes U (C1/F2) and U-hat (C4/F3); surrogate carried in F5
  CpwlStream us(envelope(p, opt.M, 1), C1, F2), ls(envelope(p, opt.M, -1), C4, F3);
  const size_t le = std::max(us.layers_needed(), ls.layers_needed());
  for (size_t l = 0; l < le; ++l) {
    b.next_layer();
    b.set(F5, l == 0 ? stilde : b.prev(F5));
    us.step(b, b.input(0));
    ls.step(b, b.input(0));
    carry_s0();
  }
  // min with U, then max with U-hat
  b.next_layer();
  b.set(C1, b.prev(F5) - us.value(b));
  b.set(F5, b.prev(F5));
  b.set(F3, ls.value(b));
  carry_s0();
  b.next_layer();
  Lin mn = b.prev(F5) - b.prev(C1);
  b.set(C4, b.prev(F3) - mn);
  b.set(F5, mn);
  carry_s0();
  b.begin_output();
  Lin S = b.prev(F5) + b.prev(C4);
  if (s0) S = s0->value(b) + S * (Numeric(2) / Numeric(long(p.N())));
  return b.finish(S, unit);
}

}  // namespace

SpecialNet bit_extract_surrogate(const BitExtractPlan& plan) {
  BuildOptions o;
  o.surrogate_only = true;
  return build_bit_net(plan, o);
}

std::vector<Interval> bit_extract_unsafe_intervals(const BitExtractPlan& p) {
  std::vector<Interval> out;
  for (size_t j = 1; j <= p.n; ++j) out.push_back({p.t(j * p.n) - p.delta, p.t(j * p.n)});
  return out;
}

Numeric bit_extract_envelope_height(const BitExtractPlan& p) {
  SpecialNet sn = bit_extract_surrogate(p);
  Numeric M = 1;
  // one window per closed piece [t_{(j-1)n}, t_{jn} - delta] keeps the
  // fine structure inside the unsafe intervals out of the computation
  Numeric lo = 0;
  for (const auto& I : bit_extract_unsafe_intervals(p)) {
    Interval w{lo, I.lo};
    Cpwl1D s = exact_cpwl_1d(sn, w);
    M = max(M, sup_abs_diff(s, Cpwl1D::constant(0), w).value);
    lo = I.hi;
  }
  Vec one{Numeric(1)};
  return max(M, abs(eval(sn, one)[0]));
}

SpecialNet bit_extract_special(const BitExtractPlan& plan) {
  BuildOptions o;
  o.M = bit_extract_envelope_height(plan);
  return build_bit_net(plan, o);
}

ReluNet bit_extract_net(const BitExtractPlan& plan) {
  return special_to_relu_exact_1d(bit_extract_special(plan), Interval{0, 1});
}

// ---- super convergence

Cpwl1D coarse_interpolant(const ScalarOracle& f, size_t n) {
  Vec t, v;
  for (size_t j = 0; j <= n; ++j) {
    t.push_back(Numeric::rational(long(j), long(n)));
    v.push_back(f(t.back()));
  }
  Numeric ls = (v[1] - v[0]) / (t[1] - t[0]), rs = (v[n] - v[n - 1]) / (t[n] - t[n - 1]);
  return Cpwl1D::interpolate(t, v, ls, rs);
}

BitExtractPlan yarotsky_plan(const ScalarOracle& f, size_t n) {
  if (n < 4 || n % 2) throw std::invalid_argument("n must be even and >= 4");
  const size_t N = n * n;
  Cpwl1D s0 = coarse_interpolant(f, n);
  const Numeric two_over_N = Numeric(2) / Numeric(long(N));
  std::vector<int> eps;
  long y = 0;
  for (size_t i = 0; i < N; ++i) {
    Numeric t = Numeric::rational(long(i + 1), long(N));
    Numeric r = f(t) - s0(t);
    Numeric up = abs(r - two_over_N * Numeric(y + 1)), down = abs(r - two_over_N * Numeric(y - 1));
    int e = up <= down ? 1 : -1;
    eps.push_back(e);
    y += e;
    if (abs(r - two_over_N * Numeric(y)) > two_over_N)
      throw std::domain_error("residual moved by more than 2/N; f is not 1-Lipschitz");
  }
  return BitExtractPlan::from_signs(n, std::move(eps));
}

ReluNet yarotsky_approx(const ScalarOracle& f, size_t n) {
  BitExtractPlan p = yarotsky_plan(f, n);
  Cpwl1D s0 = coarse_interpolant(f, n);
  BuildOptions o;
  o.M = bit_extract_envelope_height(p);
  o.coarse = &s0;
  return special_to_relu_exact_1d(build_bit_net(p, o), Interval{0, 1});
}

}  // namespace relucalc
