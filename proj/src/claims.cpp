#include "relucalc/claims.hpp"

#include <time.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "relucalc/analysis.hpp"
#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_multid.hpp"
#include "relucalc/constructions_product.hpp"
#include "relucalc/recovery.hpp"

namespace relucalc {

namespace {

double thread_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return double(ts.tv_sec) + 1e-9 * double(ts.tv_nsec);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}
std::string fmt(const Numeric& x) { return fmt(x.to_double()); }

struct Ctx {
  const ClaimOptions& o;
  ClaimReport& r;
  double tol;
  std::mt19937_64 rng;

  Ctx(const ClaimOptions& opts, ClaimReport& rep, double t)
      : o(opts), r(rep), tol(t), rng(opts.seed * 1000003ULL + uint64_t(rep.number)) {}

  bool line(std::string label, std::string measured, std::string contract, bool pass) {
    r.lines.push_back({std::move(label), std::move(measured), std::move(contract), pass});
    return pass;
  }
  std::vector<size_t> ns(std::vector<size_t> dflt) const { return o.n.empty() ? dflt : o.n; }
  size_t grid(size_t dflt) const { return o.grid ? o.grid : dflt; }
  Mode mode(Mode dflt) const { return o.mode.value_or(dflt); }
  Numeric exact_tol() const { return Numeric::exact_from_double(tol); }

  double gauss() { return std::normal_distribution<double>(0, 1)(rng); }
  double unif(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  size_t pick(size_t lo, size_t hi) { return std::uniform_int_distribution<size_t>(lo, hi)(rng); }
  // p / den with p uniform in [lo * den, hi * den]
  Numeric rat(long lo, long hi, long den) {
    return Numeric::rational(std::uniform_int_distribution<long>(lo * den, hi * den)(rng), den);
  }
};

std::vector<size_t> range(size_t lo, size_t hi) {
  std::vector<size_t> v;
  for (size_t i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

std::string wl(const ReluNet& net) {
  return "W=" + std::to_string(net.width()) + " L=" + std::to_string(net.depth());
}

// widths[l] neurons in hidden layer l, Gaussian parameters made exact
ReluNet gauss_net(Ctx& c, size_t d, const std::vector<size_t>& widths) {
  std::vector<LayerParams> layers;
  size_t fan = d;
  for (size_t l = 0; l <= widths.size(); ++l) {
    size_t rows = l == widths.size() ? 1 : widths[l];
    LayerParams lp{Matrix(rows, fan), Vec(rows)};
    for (auto& w : lp.weights.a) w = Numeric::exact_from_double(c.gauss());
    for (auto& b : lp.bias) b = Numeric::exact_from_double(c.gauss());
    layers.push_back(std::move(lp));
    fan = rows;
  }
  return ReluNet(d, std::move(layers));
}

// ---- 1: squaring

void square_error(Ctx& c) {
  bool all = true;
  const double t0 = thread_seconds();
  for (size_t n : c.ns(range(1, 10))) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    ReluNet net = square_net(n);
    auto e = sup_error(net, Quadratic1D{1, 0, 0}, Box::cube(1, 0, 1), Exact1DMode{});
    Numeric bound = Numeric::rational(1, 3) * Numeric::pow2(-2 * long(n));
    all &= c.line("n=" + std::to_string(n), "sup=" + fmt(e.value) + " (" + fmt(e.value / bound) + " of bound)",
                  "<= 4^-n/3", e.value <= bound + c.exact_tol());
    all &= c.line("n=" + std::to_string(n) + " shape", wl(net), "W=4 L=n", net.width() == 4 && net.depth() == n);
    // independent route: S_n interpolates t^2 at the dyadic nodes k 2^-n
    const long K = 1L << n;
    size_t miss = 0;
    for (long k = 0; k <= K; ++k) {
      Numeric t = Numeric::rational(k, K);
      if (eval1(net, t) != t * t) ++miss;
    }
    all &= c.line("n=" + std::to_string(n) + " nodes", std::to_string(miss) + " misses of t^2 at k/2^n", "0", miss == 0);
  }
  const double dt = thread_seconds() - t0;
  all &= c.line("time", fmt(dt) + " s", "< 1 s", dt < 1.0);
  c.r.pass = all;
}

// ---- 2: products

void product_error(Ctx& c) {
  bool all = true;
  const size_t res = c.grid(500);
  const bool exact = c.mode(Mode::Float) == Mode::Exact;
  for (size_t n : c.ns(range(1, 8))) {
    ReluNet net = product_net(n);
    FloatEvaluator fe(net);
    double err = 0, lo = 1, hi = 0;
    size_t range_bad = 0;
    for_each_grid_point(Box::cube(2, 0, 1), res, [&](std::span<const double> x) {
      double v;
      if (exact) {
        Vec xq{Numeric::exact_from_double(x[0]), Numeric::exact_from_double(x[1])};
        Numeric e = eval(net, xq)[0];
        if (e.sign() < 0 || e > Numeric(1)) ++range_bad;
        v = e.to_double();
        err = std::max(err, abs(e - xq[0] * xq[1]).to_double());
      } else {
        v = fe.scalar(x);
        err = std::max(err, std::abs(v - x[0] * x[1]));
        if (v < 0 || v > 1) {
          // recheck in exact arithmetic before calling it a violation
          Vec xq{Numeric::exact_from_double(x[0]), Numeric::exact_from_double(x[1])};
          Numeric e = eval(net, xq)[0];
          if (e.sign() < 0 || e > Numeric(1)) ++range_bad;
        }
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    });
    const double bound = std::ldexp(1.0, -2 * int(n));
    const std::string tag = "n=" + std::to_string(n);
    all &= c.line(tag, "grid err=" + fmt(err) + " (" + fmt(err / bound) + " of bound)", "<= 4^-n", err <= bound + c.tol);
    all &= c.line(tag + " range", "[" + fmt(lo) + ", " + fmt(hi) + "], exact violations " + std::to_string(range_bad),
                  "0 <= Pi_n <= 1", range_bad == 0);
    all &= c.line(tag + " shape", wl(net), "W=5 L=3n", net.width() == 5 && net.depth() == 3 * n);
  }
  c.r.pass = all;
}

// ---- 3: k-products

void kproduct_error(Ctx& c) {
  bool all = true;
  const size_t res = c.grid(40);
  for (size_t k : {3, 4})
    for (size_t n : c.ns({3, 5, 7})) {
      const std::string tag = "k=" + std::to_string(k) + " n=" + std::to_string(n);
      const double Ck = M_E * double(k);
      ReluNet net = kproduct_net(k, n);
      auto prod = [](std::span<const double> x) {
        double p = 1;
        for (double v : x) p *= v;
        return p;
      };
      double err = grid_max_error(net, prod, Box::cube(k, 0, 1), res);
      double bound = Ck * std::ldexp(1.0, -2 * int(n));
      all &= c.line(tag, "grid err=" + fmt(err) + " (" + fmt(err / bound) + " of bound)", "<= e k 4^-n",
                    err <= bound + c.tol);
      all &= c.line(tag + " shape", wl(net), "W=3+k L=3(k-1)n", net.width() == 3 + k && net.depth() == 3 * (k - 1) * n);
      ReluNet scaled = kproduct_net(k, n, 2);
      double err2 = grid_max_error(scaled, prod, Box::cube(k, 0, 2), std::max<size_t>(2, res / 2));
      double bound2 = Ck * std::ldexp(1.0, int(k)) * std::ldexp(1.0, -2 * int(n));
      all &= c.line(tag + " on [0,2]^k", "grid err=" + fmt(err2) + " (" + fmt(err2 / bound2) + " of bound)",
                    "<= e k 2^k 4^-n", err2 <= bound2 + c.tol);
    }
  c.r.pass = all;
}

// ---- 4: sawtooth

void sawtooth_structure(Ctx& c) {
  bool all = true;
  for (size_t L : c.ns(range(1, 12))) {
    ReluNet net = sawtooth(L);
    Cpwl1D f = exact_cpwl_1d(net, Interval{0, 1});
    Vec inner;
    for (const auto& t : f.kinks())
      if (t.sign() > 0 && t < Numeric(1)) inner.push_back(t);
    const long K = 1L << L;
    bool dyadic = inner.size() == size_t(K - 1);
    for (size_t i = 0; dyadic && i < inner.size(); ++i) dyadic = inner[i] == Numeric::rational(long(i) + 1, K);
    // alternation 0, 1, 0, ... at consecutive nodes j 2^-L
    bool alternates = true;
    for (long j = 0; j <= K && alternates; ++j) alternates = eval1(net, Numeric::rational(j, K)) == Numeric(j % 2);
    const std::string tag = "L=" + std::to_string(L);
    all &= c.line(tag, std::to_string(inner.size()) + " interior breakpoints", "2^L-1 at j/2^L", dyadic);
    all &= c.line(tag + " nodes", alternates ? "alternating 0/1" : "not alternating", "0/1 at j/2^L", alternates);
    all &= c.line(tag + " shape", wl(net), "W=2 L", net.width() == 2 && net.depth() == L);
  }
  c.r.pass = all;
}

// ---- 5: breakpoints of random nets

void breakpoint_bound(Ctx& c) {
  const size_t count = c.grid(200);
  size_t violations = 0, mismatches = 0;
  double worst = 0;
  for (size_t i = 0; i < count; ++i) {
    size_t W = c.pick(1, 4), L = c.pick(1, 5);
    ReluNet net = gauss_net(c, 1, std::vector<size_t>(L, W));
    Cpwl1D f = exact_cpwl_1d(net);
    const double bound = std::pow(double(W + 1), double(L));
    const size_t k = f.kink_count();
    if (double(k) > bound) ++violations;
    worst = std::max(worst, double(k) / bound);
    for (int s = 0; s < 5; ++s) {
      Numeric t = c.rat(-8, 8, 1 << 10);
      if (f(t) != eval1(net, t)) ++mismatches;
    }
  }
  bool a = c.line("violations", std::to_string(violations) + " of " + std::to_string(count) + " (max count/bound " + fmt(worst) + ")",
                  "count <= (W+1)^L", violations == 0);
  bool b = c.line("extraction", std::to_string(mismatches) + " mismatches against direct evaluation", "0", mismatches == 0);
  c.r.pass = a && b;
}

// ---- 6: bit extraction

BitExtractPlan random_plan(Ctx& c, size_t n) {
  std::vector<int> eps;
  for (size_t j = 0; j < n; ++j) {
    std::vector<int> blk(n / 2, 1);
    blk.resize(n, -1);
    std::shuffle(blk.begin(), blk.end(), c.rng);
    eps.insert(eps.end(), blk.begin(), blk.end());
  }
  return BitExtractPlan::from_signs(n, eps);
}

void bit_extraction(Ctx& c) {
  bool all = true;
  const double t0 = thread_seconds();
  const size_t plans = 20, samples = c.grid(10000);
  for (size_t n : c.ns({4, 6, 8})) {
    size_t shape_bad = 0, node_bad = 0, interval_bad = 0, sample_bad = 0, direct_bad = 0, max_depth = 0;
    Numeric worst = 0;
    for (size_t p = 0; p < plans; ++p) {
      BitExtractPlan plan = random_plan(c, n);
      ReluNet net = bit_extract_net(plan);
      max_depth = std::max(max_depth, net.depth());
      if (net.width() != 11 || net.depth() > 15 * n + 2) ++shape_bad;
      const size_t N = plan.N();
      for (size_t i = 0; i <= N; ++i)
        if (eval1(net, plan.t(i)) != Numeric(plan.y[i])) ++node_bad;
      Cpwl1D f = exact_cpwl_1d(net, Interval{0, 1});
      for (size_t i = 0; i < N; ++i) {
        auto e = sup_abs_diff(f, Cpwl1D::constant(Numeric(plan.y[i])), Interval{plan.t(i), plan.t(i + 1)});
        worst = max(worst, e.value);
        if (e.value > Numeric(1)) ++interval_bad;
      }
      // sampled points, half of them inside the narrow ramps before block boundaries
      const size_t per = samples / plans;
      for (size_t s = 0; s < per; ++s) {
        Numeric t;
        if (s % 2) {
          long j = long(c.pick(1, n));
          t = plan.t(size_t(j) * n) - plan.delta * c.rat(0, 1, 1 << 20);
        } else {
          t = c.rat(0, 1, 1L << 30);
        }
        const size_t i = std::min(N - 1, size_t(floor(t * Numeric(long(N))).to_double()));
        if (abs(f(t) - Numeric(plan.y[i])) > Numeric(1)) ++sample_bad;
        if (s < 10 && eval1(net, t) != f(t)) ++direct_bad;
      }
    }
    const std::string tag = "n=" + std::to_string(n);
    all &= c.line(tag + " shape", "max depth " + std::to_string(max_depth) + ", " + std::to_string(shape_bad) + " bad",
                  "W=11 L<=15n+2", shape_bad == 0);
    all &= c.line(tag + " nodes", std::to_string(node_bad) + " misses", "S(t_i) = y_i exactly", node_bad == 0);
    all &= c.line(tag + " intervals", "max |S - S(t_i)| = " + fmt(worst) + ", " + std::to_string(interval_bad) + " bad",
                  "<= 1 on [t_i, t_i+1]", interval_bad == 0);
    all &= c.line(tag + " samples", std::to_string(sample_bad) + " bad of " + std::to_string(samples), "<= 1",
                  sample_bad == 0);
    all &= c.line(tag + " direct", std::to_string(direct_bad) + " mismatches", "net = extracted CPwL", direct_bad == 0);
  }
  const double dt = thread_seconds() - t0;
  all &= c.line("time", fmt(dt) + " s", "< 30 s", dt < 30.0);
  c.r.pass = all;
}

// ---- 7: super convergence

struct NamedFunction {
  std::string name;
  ScalarOracle f;
};

std::vector<NamedFunction> lip1_functions(Ctx& c) {
  std::vector<NamedFunction> fs;
  fs.push_back({"abs-mid", [](const Numeric& t) { return abs(t - Numeric::rational(1, 2)); }});
  fs.push_back({"tent", [](const Numeric& t) { return min(t, Numeric(1) - t); }});
  for (int i = 1; i <= 5; ++i) {
    // random knots in (0, 1), slopes in [-1, 1]
    size_t k = c.pick(3, 12);
    std::set<long> ks;
    while (ks.size() < k) ks.insert(long(c.pick(1, 999)));
    Vec t{Numeric(0)}, y{c.rat(-1, 1, 16)};
    for (long v : ks) t.push_back(Numeric::rational(v, 1000));
    t.push_back(Numeric(1));
    for (size_t j = 1; j < t.size(); ++j) y.push_back(y.back() + c.rat(-1, 1, 64) * (t[j] - t[j - 1]));
    Cpwl1D g = Cpwl1D::interpolate(t, y);
    fs.push_back({"rand" + std::to_string(i), [g](const Numeric& s) { return g(s); }});
  }
  return fs;
}

void yarotsky(Ctx& c) {
  bool all = true;
  const size_t res = c.grid(2048);
  const bool exact = c.mode(Mode::Exact) == Mode::Exact;
  auto fs = lip1_functions(c);
  bool matched = false;
  for (const auto& nf : fs) {
    if (!c.o.f.empty() && c.o.f != nf.name) continue;
    matched = true;
    std::map<size_t, double> err;
    for (size_t n : c.ns({4, 8, 16})) {
      ReluNet net = yarotsky_approx(nf.f, n);
      std::optional<FloatEvaluator> fe;
      if (!exact) fe.emplace(net);
      double e = 0;
      for (size_t i = 0; i <= res; ++i) {
        Numeric t = Numeric::rational(long(i), long(res));
        double v = exact ? abs(eval1(net, t) - nf.f(t)).to_double() : std::abs(fe->scalar(t.to_double()) - nf.f(t).to_double());
        e = std::max(e, v);
      }
      err[n] = e;
      const double bound = 6.0 / double(n * n);
      const std::string tag = nf.name + " n=" + std::to_string(n);
      all &= c.line(tag, "err=" + fmt(e) + " (" + fmt(e / bound) + " of bound), " + wl(net), "<= 6/n^2", e <= bound + c.tol);
      all &= c.line(tag + " shape", wl(net), "W=11 L<=16n+2", net.width() == 11 && net.depth() <= 16 * n + 2);
    }
    if (err.count(4) && err.count(16))
      all &= c.line(nf.name + " decay", "err(16)=" + fmt(err[16]) + " err(4)=" + fmt(err[4]), "err(16) < err(4)",
                    err[16] < err[4]);
  }
  if (!matched) throw std::invalid_argument("unknown function '" + c.o.f + "' (abs-mid, tent, rand1..rand5)");
  c.r.pass = all;
}

// ---- 8: min/max

AffineFamily random_family(Ctx& c, size_t m, size_t d) {
  AffineFamily f;
  for (size_t i = 0; i < m; ++i) {
    AffineFunction z;
    for (size_t k = 0; k < d; ++k) z.w.push_back(c.rat(-2, 2, 8));
    z.b = c.rat(-1, 1, 8);
    f.members.push_back(z);
  }
  return f;
}

size_t ceil_log2(size_t m) {
  size_t k = 0;
  while ((size_t(1) << k) < m) ++k;
  return k;
}

void minmax(Ctx& c) {
  const size_t total = c.grid(10000);
  std::vector<std::pair<size_t, size_t>> configs;  // (d, m)
  for (size_t d = 1; d <= 3; ++d)
    for (size_t m = 1; m <= 8; ++m) configs.emplace_back(d, m);
  const size_t per = std::max<size_t>(1, total / (2 * configs.size()));
  size_t bad[4] = {0, 0, 0, 0}, shape[4] = {0, 0, 0, 0}, points[4] = {0, 0, 0, 0};
  auto rand_point = [&](size_t d) {
    Vec x;
    for (size_t i = 0; i < d; ++i) x.push_back(c.rat(0, 1, 1 << 12));
    return x;
  };
  for (auto [d, m] : configs)
    for (MinMax op : {MinMax::Min, MinMax::Max}) {
      const bool relu_on = c.pick(0, 1);
      const Box B = Box::cube(d, 0, 1);
      AffineFamily fam = random_family(c, m, d);
      ReluNet t = minmax_affine(fam, op, MinMaxStrategy::Tournament, relu_on);
      ReluNet r = minmax_affine(fam, op, MinMaxStrategy::Recursive, relu_on, B);
      if (m >= 2) {
        const size_t k = ceil_log2(m), extra = relu_on ? 1 : 0;
        if (t.width() > 3 * (size_t(1) << (k - 1)) || t.depth() != k + extra) ++shape[0];
        if (r.width() > d + 1 || r.depth() != m - 1 + extra) ++shape[1];
      }
      // m nets of equal depth and width for the output strategies
      std::vector<ReluNet> nets;
      for (size_t j = 0; j < m; ++j)
        nets.push_back(pad_to_width(minmax_affine(random_family(c, 3, d), MinMax::Max, MinMaxStrategy::Tournament, false), 6));
      ReluNet p = minmax_outputs(nets, op, NetMinMaxStrategy::Parallel, B);
      ReluNet q = minmax_outputs(nets, op, NetMinMaxStrategy::Deep, B);
      if (m >= 2) {
        if (p.width() > 6 * m || p.depth() != nets[0].depth() + ceil_log2(m)) ++shape[2];
        if (q.width() > 6 + d + 1 || q.depth() != m * nets[0].depth() + m - 1) ++shape[3];
      }
      auto pick_op = [op](const Numeric& a, const Numeric& b) { return op == MinMax::Min ? min(a, b) : max(a, b); };
      for (size_t s = 0; s < per; ++s) {
        Vec x = rand_point(d);
        Numeric v = fam.members[0](x);
        for (const auto& z : fam.members) v = pick_op(v, z(x));
        if (relu_on) v = relu(v);
        Numeric w = eval(nets[0], x)[0];
        for (const auto& n : nets) w = pick_op(w, eval(n, x)[0]);
        bad[0] += eval(t, x)[0] != v;
        bad[1] += eval(r, x)[0] != v;
        bad[2] += eval(p, x)[0] != w;
        bad[3] += eval(q, x)[0] != w;
        for (auto& k : points) ++k;
      }
    }
  const char* names[4] = {"MM1 tournament", "MM2 recursive", "MM3 parallel nets", "MM4 deep nets"};
  const char* contracts[4] = {"W=3*2^(ceil log2 m - 1) L=ceil log2 m", "W=d+1 L=m-1", "W=sum W_j L=L_0+ceil log2 m",
                              "W=max(W_0,3)+d+1 L=sum L_j+m-1"};
  bool all = true;
  for (int i = 0; i < 4; ++i) {
    all &= c.line(names[i], std::to_string(bad[i]) + " mismatches at " + std::to_string(points[i]) + " points", "exact equality",
                  bad[i] == 0);
    all &= c.line(std::string(names[i]) + " shape", std::to_string(shape[i]) + " violations", contracts[i], shape[i] == 0);
  }
  c.r.pass = all;
}

// ---- 9: arrangements

void arrangement(Ctx& c) {
  const size_t count = 20;
  size_t bad = 0, over = 0;
  std::string counts;
  for (size_t i = 0; i < count; ++i) {
    const size_t W = 1 + i % 6;
    AffineFamily fam;
    do fam = random_family(c, W, 2);
    while (!general_position(fam));
    auto rep = arrangement_cells(fam);
    const size_t expect = 1 + W + W * (W - 1) / 2;
    if (rep.cell_count != expect) ++bad;
    if (rep.cell_count > expect) ++over;
    counts += (counts.empty() ? "" : " ") + std::to_string(rep.cell_count);
  }
  bool a = c.line("cells", counts, "1 + W + W(W-1)/2 for W=1..6", bad == 0);
  bool b = c.line("bound", std::to_string(over) + " instances above the bound", "0", over == 0);
  c.r.pass = a && b;
}

// ---- 10: FEM

void fem_nodal(Ctx& c) {
  KuhnGrid g{2, 3};
  auto V = g.vertices();
  std::vector<ReluNet> phi;
  for (const auto& v : V) phi.push_back(fem_basis_net(g, v));
  size_t delta_bad = 0;
  for (size_t a = 0; a < V.size(); ++a)
    for (size_t b = 0; b < V.size(); ++b)
      if (eval(phi[a], g.point(V[b]))[0] != Numeric(a == b ? 1 : 0)) ++delta_bad;
  const size_t samples = c.grid(1000);
  double pu = 0;
  size_t ref_bad = 0;
  for (size_t s = 0; s < samples; ++s) {
    Vec x{c.rat(0, 1, 1 << 16), c.rat(0, 1, 1 << 16)};
    Numeric sum = 0;
    for (size_t a = 0; a < V.size(); ++a) {
      Numeric p = eval(phi[a], x)[0];
      sum += p;
      if (s < 100 && p != fem_basis_ref(g, V[a], x)) ++ref_bad;
    }
    pu = std::max(pu, std::abs(sum.to_double() - 1));
  }
  Vec vals;
  for (size_t a = 0; a < V.size(); ++a) vals.push_back(c.rat(-4, 4, 9));
  size_t comb_bad = 0;
  for (FemMode mode : {FemMode::Parallel, FemMode::Deep}) {
    ReluNet S = fem_combination(g, vals, mode);
    for (size_t a = 0; a < V.size(); ++a)
      if (eval(S, g.point(V[a]))[0] != vals[a]) ++comb_bad;
  }
  bool all = c.line("nodal", std::to_string(delta_bad) + " of " + std::to_string(V.size() * V.size()) + " pairs wrong",
                    "phi_v(v') = delta exactly", delta_bad == 0);
  all &= c.line("partition of unity", "max |sum - 1| = " + fmt(pu) + " at " + std::to_string(samples) + " points", "<= 1e-9",
                pu <= 1e-9 + c.tol);
  all &= c.line("reference", std::to_string(ref_bad) + " mismatches against barycentric values", "0", ref_bad == 0);
  all &= c.line("combination", std::to_string(comb_bad) + " wrong nodal values (parallel and deep)", "exact", comb_bad == 0);
  c.r.pass = all;
}

// ---- 11: B-splines

void bspline_emulation(Ctx& c) {
  const size_t r = 2;
  bool all = true;
  const auto ns = c.ns(range(3, 6));
  std::string notes;
  for (size_t d : {1, 2}) {
    // exterior samples
    size_t nonzero = 0;
    ReluNet probe = bspline_net(r, d, ns.front());
    for (size_t s = 0; s < 1000;) {
      Vec x;
      bool inside = true;
      for (size_t i = 0; i < d; ++i) {
        x.push_back(c.rat(-2, 4, 1 << 10));
        inside = inside && x.back().sign() >= 0 && x.back() <= Numeric(long(r));
      }
      if (inside) continue;
      ++s;
      if (!eval(probe, x)[0].is_zero()) ++nonzero;
    }
    const std::string dt = "d=" + std::to_string(d);
    all &= c.line(dt + " support", std::to_string(nonzero) + " nonzero of 1000 exterior samples", "0", nonzero == 0);
    const size_t res = c.grid(d == 1 ? 4001 : 161);
    std::map<size_t, double> err;
    for (size_t n = ns.front(); n <= ns.back() + 1; ++n) {
      ReluNet net = bspline_net(r, d, n);
      err[n] = grid_max_error(net, [&](std::span<const double> x) {
        double v = 1;
        for (double xi : x) v *= bspline1(r, Numeric::real(xi)).to_double();
        return v;
      }, Box::cube(d, 0, long(r)), res);
    }
    for (size_t n = ns.front(); n <= ns.back(); ++n) {
      const double a = err[n], b = err[n + 1];
      // errors at round-off level carry no decay information
      const bool resolved = a > 1e-12 && b > 1e-12;
      const double ratio = resolved ? a / b : 0;
      all &= c.line(dt + " n=" + std::to_string(n),
                    "err=" + fmt(a) + " next=" + fmt(b) + (resolved ? " ratio=" + fmt(ratio) : " ratio undefined"),
                    "ratio in [2.5, 6]", resolved && ratio >= 2.5 && ratio <= 6);
      if (!resolved && d == 1) notes = "d=1: the r=2 surrogate reproduces N_2 exactly, so there is no error to decay";
    }
  }
  c.r.note = notes;
  c.r.pass = all;
}

// ---- 12: Besov budget

void besov_budget(Ctx& c) {
  const double s = 1.5, tau = 1, p = 2;
  const size_t r = 2, K = 12;
  bool all = true;
  // coefficients with sum_I |c_I| |I| <= 2^{-s k} on every level
  BsplineCoeffs coeffs;
  coeffs.d = 1;
  size_t budget_bad = 0;
  for (size_t k = 0; k <= K; ++k) {
    const long lo = -long(r) + 1, hi = (1L << k) - 1;
    std::vector<double> u;
    for (long j = lo; j <= hi; ++j) u.push_back(c.unif(0.05, 1));
    const double total = std::accumulate(u.begin(), u.end(), 0.0);
    Numeric level = 0;
    for (long j = lo; j <= hi; ++j) {
      double mag = u[size_t(j - lo)] / total * std::pow(2.0, -s * double(k)) * std::ldexp(1.0, int(k)) * 0.999;
      Numeric cv = Numeric::exact_from_double(c.pick(0, 1) ? mag : -mag);
      level += abs(cv) * Numeric::pow2(-long(k));
      coeffs.entries[DyadicCube{k, {j}}] = cv;
    }
    if (level.to_double() > std::pow(2.0, -s * double(k))) ++budget_bad;
  }
  coeffs.validate(r);
  all &= c.line("coefficients", std::to_string(budget_bad) + " levels over budget", "sum |c_I||I| <= 2^-sk", budget_bad == 0);

  for (size_t L : c.ns({4, 6})) {
    BesovBudget B = BesovBudget::make(s, tau, p, 1, L);
    BesovReport rep = besov_report(coeffs, B);
    // independent recomputation: smallest m >= 0 with (2m + 1) p >= R
    auto R = [&](long j, size_t k) {
      const double eps = 2 * std::log2(double(k) + 1);
      return p * eps + double(L) * s * p - double(k) * s * tau - double(j) * (p - tau);
    };
    auto m_brute = [&](long j, size_t k) {
      size_t m = 0;
      while ((2 * double(m) + 1) * p < R(j, k) - 1e-9) ++m;
      return m;
    };
    auto Jplus = [&](size_t k) {
      const double eps = 2 * std::log2(double(k) + 1);
      return (eps + double(L) * s - double(k) * s * tau / p) / (1 - tau / p);
    };
    size_t beyond_bad = 0, m_bad = 0, populated = 0, max_at_J = 0;
    std::set<size_t> levels;
    for (const auto& cell : rep.cells) {
      ++populated;
      levels.insert(cell.k);
      if (m_brute(cell.j, cell.k) != cell.m) ++m_bad;
      if (double(cell.j) >= Jplus(cell.k) && cell.m != 0) ++beyond_bad;
    }
    for (size_t k : levels) max_at_J = std::max(max_at_J, m_brute(long(std::ceil((s - 1 / tau) * double(k) - 1e-12)), k));
    const std::string tag = "L=" + std::to_string(L);
    all &= c.line(tag + " m(j,k)", std::to_string(m_bad) + " of " + std::to_string(populated) + " cells differ from brute force",
                  "smallest m with (2m+1)p >= R", m_bad == 0);
    all &= c.line(tag + " beyond J+", std::to_string(beyond_bad) + " nonzero, report flag " + (rep.zero_beyond_J_plus ? "ok" : "set"),
                  "m(j,k) = 0 for j >= J_k+", beyond_bad == 0 && rep.zero_beyond_J_plus);
    all &= c.line(tag + " at J_k", "max m(J_k,k) = " + std::to_string(max_at_J) + " (report " + std::to_string(rep.max_m_at_J) + ")",
                  "<= C L with C = 2", max_at_J <= 2 * L && rep.max_m_at_J == max_at_J);
  }
  c.r.pass = all;
}

// ---- 13: gradient descent

void gd_limit(Ctx& c) {
  const size_t count = 50;
  double worst = 0, drift = 0, indep = 0;
  size_t failed = 0, max_steps = 0;
  for (size_t i = 0; i < count; ++i) {
    size_t n = c.pick(2, 20), m = c.pick(1, n - 1);
    RegressionInstance I{Matrix(m, n), Vec(m), Vec(n)};
    auto q = [&] { return Numeric::exact_from_double(std::round(c.gauss() * 64) / 64); };
    for (auto& a : I.A.a) a = q();
    for (auto& a : I.y) a = q();
    for (auto& a : I.theta0) a = q();
    GdResult g;
    try {
      g = gd_linear_regression(I);
    } catch (const std::invalid_argument&) {
      --i;  // rank deficient draw
      continue;
    }
    worst = std::max(worst, g.limit_error);
    drift = std::max(drift, g.null_drift);
    max_steps = std::max(max_steps, g.steps);
    if (!g.converged || g.diverged) ++failed;
    // independent limit: theta0 + A^+ (y - A theta0)
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd y(m), t0(n), th(n);
    for (size_t a = 0; a < m; ++a)
      for (size_t b = 0; b < n; ++b) A(long(a), long(b)) = I.A(a, b).to_double();
    for (size_t a = 0; a < m; ++a) y(long(a)) = I.y[a].to_double();
    for (size_t b = 0; b < n; ++b) t0(long(b)) = I.theta0[b].to_double(), th(long(b)) = g.theta[b];
    Eigen::VectorXd lim = t0 + A.completeOrthogonalDecomposition().solve(y - A * t0);
    indep = std::max(indep, (th - lim).lpNorm<Eigen::Infinity>());
  }
  bool a = c.line("limit", "max sup-norm error " + fmt(worst) + " (independent route " + fmt(indep) + ")", "<= 1e-6",
                  worst <= 1e-6 + c.tol && indep <= 1e-6 + c.tol);
  bool b = c.line("null component", "max drift " + fmt(drift), "<= 1e-12", drift <= 1e-12 + c.tol);
  bool d = c.line("runs", std::to_string(failed) + " of " + std::to_string(count) + " not converged, max steps " + std::to_string(max_steps),
                  "all converge", failed == 0);
  c.r.pass = a && b && d;
}

// ---- 14: optimal recovery

void optimal_recovery(Ctx& c) {
  const size_t M = 40, m = 6;
  size_t proj_bad = 0, mu_bad = 0, flag_bad = 0;
  double worst_proj = 0, worst_mu = 0;
  auto instance = [&](size_t n, bool meets_perp, double& mu_closed) {
    RealVec q(M);
    for (auto& v : q) v = c.unif(0.5, 1.5);
    const double qs = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& v : q) v /= qs;
    Eigen::MatrixXd G(M, M);
    for (long i = 0; i < long(M); ++i)
      for (long j = 0; j < long(M); ++j) G(i, j) = c.gauss();
    Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
    // b_i = sum_k Q_ki e_k with e_k the weighted unit vectors
    auto b = [&](size_t i) {
      RealVec v(M);
      for (size_t k = 0; k < M; ++k) v[k] = Q(long(k), long(i)) / std::sqrt(q[k]);
      return v;
    };
    RecoverySetup S;
    S.weights = q;
    for (size_t j = 0; j < m; ++j) S.omega.push_back(b(j));
    double max_angle = 0;
    for (size_t i = 0; i < n; ++i) {
      double th = meets_perp && i == n - 1 ? M_PI / 2 : c.unif(0, 1.2);
      RealVec u = b(i), v = b(m + i), s(M);
      for (size_t k = 0; k < M; ++k) s[k] = (meets_perp && i == n - 1) ? v[k] : std::cos(th) * u[k] + std::sin(th) * v[k];
      S.sigma.push_back(s);
      max_angle = std::max(max_angle, th);
    }
    mu_closed = 1 / std::cos(max_angle);
    RealVec f(M);
    for (auto& v : f) v = c.gauss();
    S.w = measure(S, f);
    S.eps = 1.5 * distance_to_sigma(S, f) + 1e-3;
    return S;
  };
  for (size_t i = 0; i < 10; ++i) {
    double mu_closed = 0;
    RecoverySetup S = instance(1 + i % m, false, mu_closed);
    RecoveryResult R = optimal_recovery_linear(S);
    RealVec pw = measure(S, R.u_star);
    for (size_t j = 0; j < m; ++j) worst_proj = std::max(worst_proj, std::abs(pw[j] - S.w[j]));
    if (R.mu_infinite) ++flag_bad;
    const double rel = std::abs(R.mu - mu_closed) / mu_closed;
    worst_mu = std::max(worst_mu, rel);
    if (rel > 1e-9) ++mu_bad;
  }
  proj_bad = worst_proj > 1e-12 + c.tol;
  size_t missed = 0;
  for (size_t i = 0; i < 3; ++i) {
    double unused = 0;
    RecoverySetup S = instance(2 + i, true, unused);
    if (!optimal_recovery_linear(S).mu_infinite) ++missed;
  }
  bool a = c.line("P_W u* = w", "max deviation " + fmt(worst_proj), "<= 1e-12", proj_bad == 0);
  bool b = c.line("mu", "max relative deviation " + fmt(worst_mu) + " from 1/cos(largest principal angle), " +
                            std::to_string(flag_bad) + " false infinite flags",
                  "rel <= 1e-9", mu_bad == 0 && flag_bad == 0);
  bool d = c.line("mu infinite", std::to_string(missed) + " of 3 instances meeting W-perp not flagged", "all flagged", missed == 0);
  c.r.pass = a && b && d;
}

// ---- 15: NTK

void ntk(Ctx& c) {
  size_t sym_bad = 0, psd_bad = 0;
  double min_eig = 0, asym = 0;
  for (size_t i = 0; i < 20; ++i) {
    size_t d = c.pick(1, 2), W = c.pick(4, 16), L = c.pick(1, 3);
    ReluNet net = random_net(d, W, L, c.rng());
    std::vector<RealVec> pts;
    for (size_t s = 0; s < 6; ++s) {
      RealVec x;
      for (size_t k = 0; k < d; ++k) x.push_back(c.unif(-1, 1));
      pts.push_back(x);
    }
    RealMat K = empirical_ntk(net, pts);
    double scale = 0, a = 0;
    for (size_t r = 0; r < K.size(); ++r)
      for (size_t s = 0; s < K.size(); ++s) {
        scale = std::max(scale, std::abs(K[r][s]));
        a = std::max(a, std::abs(K[r][s] - K[s][r]));
      }
    asym = std::max(asym, a / std::max(scale, 1e-300));
    if (a > 1e-12 * scale) ++sym_bad;
    double e = symmetric_eigenvalues(K).front();
    min_eig = std::min(min_eig, e);
    if (e < -1e-10) ++psd_bad;
  }
  std::vector<double> var;
  const size_t inits = 50;
  for (size_t W : {8, 32, 128}) {
    double s1 = 0, s2 = 0;
    for (size_t k = 0; k < inits; ++k) {
      ScaledNet sn = ntk_init(1, W, c.o.seed * 7919 + 100 * W + k);
      double v = empirical_ntk(sn.net, {{0.3}, {0.7}}, sn.scales)[0][1];
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / inits;
    var.push_back((s2 - inits * mean * mean) / (inits - 1));
  }
  bool a = c.line("symmetry", "max relative asymmetry " + fmt(asym), "<= 1e-12", sym_bad == 0);
  bool b = c.line("PSD", "min eigenvalue " + fmt(min_eig), ">= -1e-10", psd_bad == 0);
  bool d = c.line("init variance", "W=8: " + fmt(var[0]) + ", W=32: " + fmt(var[1]) + ", W=128: " + fmt(var[2]),
                  "strictly decreasing", var[0] > var[1] && var[1] > var[2]);
  c.r.pass = a && b && d;
}

// ---- 16: greedy

void greedy_rate(Ctx& c) {
  const size_t N = 200;
  std::vector<RealVec> D;
  for (int i = 0; i < 10; ++i) {
    RealVec v(N);
    double nn = 0;
    for (auto& x : v) x = c.gauss(), nn += x * x;
    for (auto& x : v) x /= std::sqrt(nn);
    RealVec w = v;
    for (auto& x : w) x = -x;
    D.push_back(v);
    D.push_back(w);
  }
  RealVec lam(10);
  for (auto& l : lam) l = c.unif(0.1, 1);
  const double ls = std::accumulate(lam.begin(), lam.end(), 0.0);
  RealVec f(N, 0);
  for (int i = 0; i < 10; ++i)
    for (size_t j = 0; j < N; ++j) f[j] += lam[size_t(i)] / ls * D[2 * size_t(i)][j];
  auto G = greedy_hull_approx(D, f, 64);
  const double slope = loglog_slope(G.error, 4, 64);
  c.r.pass = c.line("slope", "log-log slope " + fmt(slope) + " (err(4)=" + fmt(G.error[3]) + ", err(64)=" + fmt(G.error[63]) + ")",
                    "<= -0.4 over n in [4, 64]", slope <= -0.4);
}

// ---- 17: shattering

void shattering(Ctx& c) {
  bool all = true;
  for (size_t W = 1; W <= 6; ++W) {
    std::set<long> ks;
    while (ks.size() < W + 1) ks.insert(long(c.pick(0, 400)) - 200);
    Vec pts;
    for (long k : ks) pts.push_back(Numeric::rational(k, 64));
    size_t bad = 0;
    for (uint64_t mask = 0; mask < (uint64_t(1) << (W + 1)); ++mask) {
      std::vector<int> s(W + 1);
      for (size_t i = 0; i <= W; ++i) s[i] = (mask >> i) & 1 ? 1 : -1;
      auto res = shatter_check(ShallowFamily{W}, pts, s);
      bool ok = res.realized && res.witness && res.witness->width() <= W && res.witness->depth() == 1;
      for (size_t i = 0; ok && i <= W; ++i) ok = eval1(*res.witness, pts[i]).sign() == s[i];
      bad += !ok;
    }
    all &= c.line("W=" + std::to_string(W), std::to_string(bad) + " of " + std::to_string(1u << (W + 1)) + " patterns unrealized",
                  "W+1 points shattered by width W", bad == 0);
  }
  Vec three{Numeric(0), Numeric::rational(1, 2), Numeric(1)};
  size_t found = 0;
  for (auto s : {std::vector<int>{1, -1, 1}, std::vector<int>{-1, 1, -1}})
    found += shatter_check(Upsilon11Grid{1e-2, 1.0}, three, s).realized;
  all &= c.line("Upsilon(1,1)", std::to_string(found) + " alternating patterns realized on the 1e-2 grid over [-1,1]^3",
                "none (evidence, not proof)", found == 0);
  for (size_t n : {4, 6}) {
    Vec pts = bit_extract_shatter_points(n);
    const size_t need = (n * n + 3) / 4;
    pts.resize(need);
    size_t bad = 0, depth = 0;
    for (uint64_t mask = 0; mask < (uint64_t(1) << need); ++mask) {
      std::vector<int> s(need);
      for (size_t i = 0; i < need; ++i) s[i] = (mask >> i) & 1 ? 1 : -1;
      auto res = shatter_check(BitExtractFamily{n}, pts, s);
      if (!res.realized) ++bad;
      else depth = std::max(depth, res.witness->depth());
    }
    all &= c.line("bit extraction n=" + std::to_string(n),
                  std::to_string(need) + " points, " + std::to_string(bad) + " patterns unrealized, depth " + std::to_string(depth),
                  ">= n^2/4 points, depth <= 15n+2", bad == 0 && depth <= 15 * n + 2);
  }
  c.r.pass = all;
}

// ---- 18: realization map

void realization_regularity(Ctx& c) {
  bool all = true;
  auto grid_points = [](size_t d, long lo, long hi, long den) {
    std::vector<Vec> pts;
    std::vector<long> idx(d, lo * den);
    while (true) {
      Vec x;
      for (long i : idx) x.push_back(Numeric::rational(i, den));
      pts.push_back(x);
      size_t k = 0;
      while (k < d && ++idx[k] > hi * den) idx[k++] = lo * den;
      if (k == d) break;
    }
    return pts;
  };
  auto small = [&](size_t d, size_t W, size_t L) {
    ReluNet net = gauss_net(c, d, std::vector<size_t>(L, W));
    std::vector<LayerParams> layers = net.layers();
    for (auto& lp : layers) {
      for (auto& w : lp.weights.a) w = Numeric(std::lround(w.to_double() * 4)) / Numeric(4);
      for (auto& b : lp.bias) b = Numeric(std::lround(b.to_double() * 4)) / Numeric(4);
    }
    return ReluNet(d, layers);
  };
  const auto pts2 = grid_points(2, -1, 1, 4);
  const Box B2 = Box::cube(2, -1, 1);
  auto check = [&](const std::string& name, const std::vector<Vec>& pts, auto&& lhs, auto&& rhs) {
    size_t bad = 0;
    for (const auto& x : pts) bad += lhs(x) != rhs(x);
    all &= c.line(name, std::to_string(bad) + " mismatches on " + std::to_string(pts.size()) + " grid points", "exact equality",
                  bad == 0);
  };
  auto ev = [](const ReluNet& n) { return [&n](const Vec& x) { return eval(n, x)[0]; }; };

  std::vector<ReluNet> nets{small(2, 3, 2), small(2, 4, 3), small(2, 2, 1)};
  Vec alpha{Numeric::rational(1, 2), Numeric(-2), Numeric(3)};
  SpecialNet sn = add_by_depth(nets, alpha, B2);
  ReluNet lifted = special_to_relu(sn, B2);
  check("special_to_relu (add by depth)", pts2, [&](const Vec& x) { return eval(sn, x)[0]; }, ev(lifted));
  check("add_by_depth", pts2, [&](const Vec& x) { return eval(sn, x)[0]; },
        [&](const Vec& x) {
          Numeric s = 0;
          for (size_t i = 0; i < nets.size(); ++i) s += alpha[i] * eval(nets[i], x)[0];
          return s;
        });
  {
    BitExtractPlan plan = random_plan(c, 4);
    SpecialNet bs = bit_extract_special(plan);
    ReluNet bn = bit_extract_net(plan);
    std::vector<Vec> pts1;
    for (long i = 0; i <= 512; ++i) pts1.push_back(Vec{Numeric::rational(i, 512)});
    check("special_to_relu (bit extraction)", pts1, [&](const Vec& x) { return eval(bs, x)[0]; }, ev(bn));
  }
  std::vector<ReluNet> eq{small(2, 3, 2), small(2, 2, 2)};
  ReluNet par = parallelize_sum(eq, Vec{Numeric(3), Numeric::rational(-1, 3)});
  check("parallelize_sum", pts2, ev(par),
        [&](const Vec& x) { return Numeric(3) * eval(eq[0], x)[0] - Numeric::rational(1, 3) * eval(eq[1], x)[0]; });
  ReluNet outer = small(1, 3, 2), inner = small(2, 2, 2);
  ReluNet comp = concatenate_compose(outer, inner);
  check("concatenate_compose", pts2, ev(comp), [&](const Vec& x) { return eval1(outer, eval(inner, x)[0]); });
  ReluNet ext = extend_depth(nets[0], nets[0].depth() + 3);
  check("extend_depth", pts2, ev(ext), ev(nets[0]));
  Vec shift{Numeric::rational(1, 4), Numeric::rational(-1, 2)};
  ReluNet sd = shift_dilate(nets[1], Numeric::rational(3, 2), shift);
  check("shift_dilate", pts2, ev(sd),
        [&](const Vec& x) { return eval(nets[1], Vec{Numeric::rational(3, 2) * x[0] + shift[0], Numeric::rational(3, 2) * x[1] + shift[1]})[0]; });
  AffineMap am{Matrix(2, 2), Vec{Numeric(1), Numeric(-1)}};
  am.A(0, 0) = 2, am.A(0, 1) = -1, am.A(1, 0) = Numeric::rational(1, 3), am.A(1, 1) = 1;
  ReluNet pre = precompose(nets[1], am);
  check("precompose", pts2, ev(pre), [&](const Vec& x) {
    return eval(nets[1], Vec{am.A(0, 0) * x[0] + am.A(0, 1) * x[1] + am.b[0], am.A(1, 0) * x[0] + am.A(1, 1) * x[1] + am.b[1]})[0];
  });
  ReluNet so = scale_output(nets[2], Numeric(-5), Numeric::rational(7, 3));
  check("scale_output", pts2, ev(so), [&](const Vec& x) { return Numeric(-5) * eval(nets[2], x)[0] + Numeric::rational(7, 3); });
  {
    ReluNet T = hat01();
    Vec a{Numeric(1), Numeric::rational(-1, 2), Numeric(2)};
    ReluNet ps = power_sum(T, a, Interval{0, 1});
    std::vector<Vec> pts1;
    for (long i = 0; i <= 256; ++i) pts1.push_back(Vec{Numeric::rational(i, 256)});
    check("power_sum", pts1, ev(ps), [&](const Vec& x) {
      Numeric t = x[0], s = 0;
      for (const auto& ai : a) {
        t = eval1(T, t);
        s += ai * t;
      }
      return s;
    });
    ReluNet phi = hat(Numeric(0), Numeric(1), Numeric(2));
    std::vector<TranslateDilateTerm> terms;
    for (int j = 0; j < 3; ++j) {
      AffineMap m1{Matrix(1, 1), Vec{Numeric(-j)}};
      m1.A(0, 0) = Numeric(j + 1);
      terms.push_back({m1, Numeric::rational(j + 1, 3)});
    }
    const Box B1 = Box::cube(1, -1, 2);
    ReluNet td = translate_dilate_sum(phi, terms, B1);
    std::vector<Vec> pts3;
    for (long i = -64; i <= 128; ++i) pts3.push_back(Vec{Numeric::rational(i, 64)});
    check("translate_dilate_sum", pts3, ev(td), [&](const Vec& x) {
      Numeric s = 0;
      for (const auto& t : terms) s += t.coefficient * eval1(phi, t.map.A(0, 0) * x[0] + t.map.b[0]);
      return s;
    });
  }
  std::vector<double> radii{0.25, 0.5, 1, 2, 4};
  auto lp = lipschitz_probe(Architecture{1, 3, 3}, radii, c.grid(200), 201, c.o.seed);
  bool finite = true, mono = true;
  std::string curve;
  for (size_t i = 0; i < lp.max_ratio.size(); ++i) {
    finite = finite && std::isfinite(lp.max_ratio[i]);
    if (i) mono = mono && lp.max_ratio[i] >= lp.max_ratio[i - 1];
    curve += (i ? ", " : "") + fmt(radii[i]) + ": " + fmt(lp.max_ratio[i]);
  }
  all &= c.line("lipschitz_probe", curve, "finite, nondecreasing in radius", finite && mono);
  c.r.pass = all;
}

const std::vector<Claim> registry{
    {1, "square-error", "squaring network error", 0, nullptr},
    {2, "product-error", "product network error and range", 1e-12, nullptr},
    {3, "kproduct-error", "k-fold product error", 1e-12, nullptr},
    {4, "sawtooth-structure", "sawtooth breakpoints and shape", 0, nullptr},
    {5, "breakpoint-bound", "breakpoints of random nets", 0, nullptr},
    {6, "bit-extraction", "bit-extraction interpolation", 0, nullptr},
    {7, "yarotsky", "super convergence for Lip-1 functions", 0, nullptr},
    {8, "minmax", "min/max networks", 0, nullptr},
    {9, "arrangement-cells", "hyperplane arrangement cells", 0, nullptr},
    {10, "fem-nodal", "finite element nodal basis", 0, nullptr},
    {11, "bspline-emulation", "B-spline emulation", 0, nullptr},
    {12, "besov-budget", "Besov depth budget", 0, nullptr},
    {13, "gd-limit", "gradient descent limit", 0, nullptr},
    {14, "optimal-recovery", "linear optimal recovery", 0, nullptr},
    {15, "ntk", "empirical tangent kernel", 0, nullptr},
    {16, "greedy-rate", "orthogonal greedy rate", 0, nullptr},
    {17, "shattering", "shattering", 0, nullptr},
    {18, "realization-regularity", "realization map regularity", 0, nullptr},
};

using Body = void (*)(Ctx&);
const Body bodies[] = {square_error, product_error, kproduct_error, sawtooth_structure, breakpoint_bound,
                       bit_extraction, yarotsky, minmax, arrangement, fem_nodal, bspline_emulation,
                       besov_budget, gd_limit, optimal_recovery, ntk, greedy_rate, shattering,
                       realization_regularity};

std::vector<Claim> build_registry() {
  std::vector<Claim> out;
  for (size_t i = 0; i < registry.size(); ++i) {
    Claim cl = registry[i];
    Body b = bodies[i];
    const double dflt = cl.default_tolerance;
    cl.body = [b, dflt](const ClaimOptions& o, ClaimReport& r) {
      Ctx c(o, r, o.tolerance.value_or(dflt));
      b(c);
    };
    out.push_back(std::move(cl));
  }
  return out;
}

}  // namespace

const std::vector<Claim>& claims() {
  static const std::vector<Claim> all = build_registry();
  return all;
}

const Claim* find_claim(const std::string& key) {
  for (const auto& c : claims())
    if (c.id == key || std::to_string(c.number) == key) return &c;
  return nullptr;
}

ClaimReport run_claim(const Claim& claim, const ClaimOptions& opts) {
  ClaimReport r;
  r.number = claim.number;
  r.id = claim.id;
  r.title = claim.title;
  r.tolerance = opts.tolerance.value_or(claim.default_tolerance);
  const double t0 = thread_seconds();
  try {
    claim.body(opts, r);
    for (const auto& l : r.lines) r.pass = r.pass && l.pass;
    if (r.lines.empty()) r.pass = false;
  } catch (const std::exception& e) {
    r.lines.push_back({"error", e.what(), "no exception", false});
    r.pass = false;
  }
  r.seconds = thread_seconds() - t0;
  return r;
}

std::vector<ClaimReport> run_claims(const std::vector<const Claim*>& which, const ClaimOptions& opts, size_t jobs) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, which.size());
  std::vector<ClaimReport> out(which.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < which.size();) out[i] = run_claim(*which[i], opts);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(out.begin(), out.end(), [](const ClaimReport& a, const ClaimReport& b) { return a.number < b.number; });
  return out;
}

std::string report_json(const std::vector<ClaimReport>& reports) {
  nlohmann::json js;
  bool all = true;
  js["claims"] = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& l : r.lines)
      lines.push_back({{"label", l.label}, {"measured", l.measured}, {"contract", l.contract}, {"pass", l.pass}});
    nlohmann::json c{{"number", r.number}, {"id", r.id},         {"title", r.title},        {"pass", r.pass},
                     {"seconds", r.seconds}, {"tolerance", r.tolerance}, {"lines", lines}};
    if (!r.note.empty()) c["note"] = r.note;
    js["claims"].push_back(c);
    all = all && r.pass;
  }
  js["pass"] = all;
  return js.dump(2);
}

std::string report_text(const ClaimReport& r, bool details) {
  std::ostringstream os;
  char head[160];
  std::snprintf(head, sizeof head, "%s %2d %-24s (%.2f s)", r.pass ? "PASS" : "FAIL", r.number, r.id.c_str(), r.seconds);
  os << head << "\n";
  if (details || !r.pass) {
    for (const auto& l : r.lines)
      if (details || !l.pass) os << "    " << (l.pass ? "ok  " : "FAIL") << " " << l.label << ": " << l.measured << "  [" << l.contract << "]\n";
    if (!r.note.empty()) os << "    note: " << r.note << "\n";
  }
  return os.str();
}

std::vector<size_t> parse_index_list(const std::string& text) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string part;
  auto num = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument("bad index list '" + text + "'");
    return size_t(std::stoul(s));
  };
  while (std::getline(ss, part, ',')) {
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(num(part));
    } else {
      size_t a = num(part.substr(0, dots)), b = num(part.substr(dots + 2));
      if (a > b) throw std::invalid_argument("empty range '" + part + "'");
      for (size_t i = a; i <= b; ++i) out.push_back(i);
    }
  }
  if (out.empty()) throw std::invalid_argument("empty index list");
  return out;
}

}  // namespace relucalc
