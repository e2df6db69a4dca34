#include "relucalc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace relucalc {

namespace {

// knots x, values y, slopes s (s[0] left ray, s[k] segment ending at x[k], s[K] right ray)
struct Pw {
  Vec x, y, s;
  Numeric ymin, ymax;

  // drops knots where the slope does not change, then caches the range
  void finish() {
    size_t w = 0;
    for (size_t k = 0; k < x.size(); ++k) {
      const bool last_chance = k + 1 == x.size() && w == 0;
      if (s[w] == s[k + 1] && !last_chance) continue;
      if (w != k) {
        x[w] = std::move(x[k]);
        y[w] = std::move(y[k]);
      }
      s[w + 1] = std::move(s[k + 1]);
      ++w;
    }
    x.resize(w);
    y.resize(w);
    s.resize(w + 1);
    ymin = ymax = y[0];
    for (const auto& v : y) {
      if (v < ymin) ymin = v;
      if (v > ymax) ymax = v;
    }
  }
};
using PwPtr = std::shared_ptr<const Pw>;

// a * f + c; carries and sums over a single function stay lazy
struct Node {
  PwPtr f;
  Numeric a = 1, c = 0;
};

PwPtr constant_pw(const Numeric& v) {
  auto out = std::make_shared<Pw>();
  out->x = {Numeric(0)};
  out->y = {v};
  out->s = {Numeric(0), Numeric(0)};
  out->finish();
  return out;
}

Node combine(const std::vector<std::pair<Numeric, const Node*>>& in, const Numeric& bias) {
  Numeric c = bias;
  std::vector<std::pair<Numeric, const Pw*>> terms;
  for (const auto& [w, nd] : in) {
    c += w * nd->c;
    Numeric wa = w * nd->a;
    bool merged = false;
    for (auto& t : terms)
      if (t.second == nd->f.get()) {
        t.first += wa;
        merged = true;
      }
    if (!merged) terms.emplace_back(wa, nd->f.get());
  }
  std::erase_if(terms, [](const auto& t) { return t.first.is_zero(); });
  if (terms.empty()) return Node{constant_pw(c), 1, 0};
  if (terms.size() == 1) {
    for (const auto& [w, nd] : in)
      if (nd->f.get() == terms[0].second) return Node{nd->f, terms[0].first, c};
  }
  auto out = std::make_shared<Pw>();
  Vec knots = terms[0].second->x;
  for (size_t i = 1; i < terms.size(); ++i) {
    const Vec& o = terms[i].second->x;
    if (o == knots) continue;
    Vec merged;
    merged.reserve(knots.size() + o.size());
    std::merge(knots.begin(), knots.end(), o.begin(), o.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    knots = std::move(merged);
  }
  const size_t K = knots.size();
  out->x = std::move(knots);
  const Vec& x = out->x;
  out->y.assign(K, c);
  out->s.assign(K + 1, Numeric(0));
  Numeric tmp;
  for (const auto& [w, f] : terms) {
    const size_t Kf = f->x.size();
    out->s[0].add_product(w, f->s[0]);
    if (Kf == K) {
      // f's knots are a subset of the merged ones, so they coincide
      for (size_t k = 0; k < K; ++k) {
        out->y[k].add_product(w, f->y[k]);
        if (!f->s[k + 1].is_zero()) out->s[k + 1].add_product(w, f->s[k + 1]);
      }
      continue;
    }
    size_t p = 0;
    int cmp = Kf ? compare(f->x[0], x[0]) : 1;
    for (size_t k = 0; k < K; ++k) {
      const Numeric& t = x[k];
      while (cmp < 0) cmp = ++p < Kf ? compare(f->x[p], t) : 1;
      const bool on_knot = cmp == 0;
      if (on_knot) {
        out->y[k].add_product(w, f->y[p]);
      } else {
        // value on the segment with slope s[p]
        const size_t q = p == 0 ? 0 : p - 1;
        tmp = t - f->x[q];
        tmp *= f->s[p];
        tmp += f->y[q];
        out->y[k].add_product(w, tmp);
      }
      const Numeric& sseg = f->s[p + (on_knot ? 1 : 0)];
      if (!sseg.is_zero()) out->s[k + 1].add_product(w, sseg);
      if (k + 1 < K) cmp = p < Kf ? compare(f->x[p], x[k + 1]) : 1;
    }
  }
  out->finish();
  return Node{out, 1, 0};
}

// sign of a * f + c when it is the same everywhere (0 if it changes)
int definite_sign(const Node& n) {
  const Pw& f = *n.f;
  int sa = n.a.sign();
  if (sa == 0) return n.c.sign() >= 0 ? 1 : -1;
  // rays of a * f + c: left must not increase towards -inf for >= 0 ...
  int left = -sa * f.s.front().sign(), right = sa * f.s.back().sign();
  Numeric lo = sa > 0 ? n.a * f.ymin + n.c : n.a * f.ymax + n.c;
  Numeric hi = sa > 0 ? n.a * f.ymax + n.c : n.a * f.ymin + n.c;
  if (lo.sign() >= 0 && left >= 0 && right >= 0) return 1;
  if (hi.sign() <= 0 && left <= 0 && right <= 0) return -1;
  return 0;
}

PwPtr materialize(const Node& n) {
  if (n.a == Numeric(1) && n.c.is_zero()) return n.f;
  auto out = std::make_shared<Pw>();
  out->x = n.f->x;
  out->y.reserve(out->x.size());
  for (const auto& v : n.f->y) out->y.push_back(n.a * v + n.c);
  for (const auto& v : n.f->s) out->s.push_back(n.a * v);
  out->finish();
  return out;
}

PwPtr relu_pw(const Pw& f) {
  auto out = std::make_shared<Pw>();
  const size_t K = f.x.size();
  Numeric zero(0);
  auto push = [&](const Numeric& x, const Numeric& y) {
    out->x.push_back(x);
    out->y.push_back(relu(y));
  };
  // left ray
  const Numeric& sl = f.s[0];
  if (f.y[0].sign() * sl.sign() > 0) {
    push(f.x[0] - f.y[0] / sl, zero);
    out->s.push_back(sl.sign() < 0 ? sl : zero);
    out->s.push_back(sl.sign() > 0 ? sl : zero);
  } else {
    bool left_pos = f.y[0].sign() > 0 || (f.y[0].is_zero() && sl.sign() < 0);
    out->s.push_back(left_pos ? sl : zero);
  }
  for (size_t k = 0; k < K; ++k) {
    if (k > 0) {
      const Numeric& a = f.y[k - 1];
      const Numeric& b = f.y[k];
      if (a.sign() * b.sign() < 0) {
        push(f.x[k - 1] - a / f.s[k], zero);
        out->s.push_back(a.sign() > 0 ? f.s[k] : zero);
        out->s.push_back(b.sign() > 0 ? f.s[k] : zero);
      } else {
        out->s.push_back((a.sign() > 0 || b.sign() > 0) ? f.s[k] : zero);
      }
    }
    push(f.x[k], f.y[k]);
  }
  const Numeric& sr = f.s[K];
  const Numeric& yl = f.y[K - 1];
  if (yl.sign() * sr.sign() < 0) {
    push(f.x[K - 1] - yl / sr, zero);
    out->s.push_back(yl.sign() > 0 ? sr : zero);
    out->s.push_back(yl.sign() > 0 ? zero : sr);
  } else {
    out->s.push_back((yl.sign() > 0 || (yl.is_zero() && sr.sign() > 0)) ? sr : zero);
  }
  out->finish();
  return out;
}

Node relu_node(const Node& n) {
  int s = definite_sign(n);
  if (s > 0) return n;
  if (s < 0) return Node{constant_pw(0), 1, 0};
  return Node{relu_pw(*materialize(n)), 1, 0};
}

Cpwl1D to_cpwl(const Pw& f) {
  Cpwl1D c;
  c.breakpoints = f.x;
  c.values = f.y;
  c.left_slope = f.s.front();
  c.right_slope = f.s.back();
  return c.canonical();
}

struct PieceBudgetExceeded {};

// with minima set, gives up once a channel has more than max_knots knots
Cpwl1D forward_cpwl(const ReluNet& net, const std::vector<ChannelRole>* roles, const Interval* window,
                    std::vector<Vec>* minima = nullptr, size_t max_knots = 0) {
  if (net.input_dim() != 1 || net.output_dim() != 1) throw std::invalid_argument("exact_cpwl_1d needs d = d' = 1");
  auto id = std::make_shared<Pw>();
  if (window) {
    if (!(window->lo < window->hi)) throw std::invalid_argument("empty window");
    id->x = {window->lo, window->hi};
    id->y = {window->lo, window->hi};
    id->s = {Numeric(0), Numeric(1), Numeric(0)};
  } else {
    id->x = {Numeric(0)};
    id->y = {Numeric(0)};
    id->s = {Numeric(1), Numeric(1)};
  }
  id->finish();
  std::vector<Node> cur{Node{id, 1, 0}};
  std::vector<std::pair<Numeric, const Node*>> in;
  for (size_t l = 0; l <= net.depth(); ++l) {
    const auto& lp = net.layer(l);
    std::vector<Node> next(lp.weights.rows);
    for (size_t r = 0; r < lp.weights.rows; ++r) {
      in.clear();
      for (size_t c = 0; c < lp.weights.cols; ++c)
        if (!lp.weights(r, c).is_zero()) in.emplace_back(lp.weights(r, c), &cur[c]);
      Node f = combine(in, lp.bias[r]);
      bool hidden = l < net.depth();
      if (hidden && !(roles && (*roles)[r].relu_free)) f = relu_node(f);
      if (max_knots && f.f->x.size() > max_knots) throw PieceBudgetExceeded{};
      next[r] = std::move(f);
    }
    cur = std::move(next);
    if (minima && l < net.depth()) {
      Vec m;
      for (const auto& nd : cur) m.push_back(nd.a.sign() >= 0 ? nd.a * nd.f->ymin + nd.c : nd.a * nd.f->ymax + nd.c);
      minima->push_back(std::move(m));
    }
  }
  return to_cpwl(*materialize(cur[0]));
}

}  // namespace

Cpwl1D exact_cpwl_1d(const ReluNet& net) { return forward_cpwl(net, nullptr, nullptr); }

Cpwl1D exact_cpwl_1d(const ReluNet& net, const Interval& window) { return forward_cpwl(net, nullptr, &window); }

Cpwl1D exact_cpwl_1d(const SpecialNet& net, const Interval& window) {
  return forward_cpwl(net.net(), &net.roles(), &window);
}

std::vector<Vec> channel_minima_1d(const SpecialNet& net, const Interval& window) {
  if (net.net().output_dim() != 1) throw std::invalid_argument("scalar output required");
  std::vector<Vec> minima;
  forward_cpwl(net.net(), &net.roles(), &window, &minima);
  return minima;
}

ReluNet special_to_relu_exact_1d(const SpecialNet& net, const Interval& window) {
  if (net.net().output_dim() != 1) throw std::invalid_argument("scalar output required");
  std::vector<Vec> minima;
  try {
    forward_cpwl(net.net(), &net.roles(), &window, &minima, 50000);
  } catch (const PieceBudgetExceeded&) {
    // too many pieces to track; interval bounds are valid, only looser
    return special_to_relu(net, Box{{window}});
  }
  return special_to_relu(net, Box{{window}}, minima);
}

// ---- sup errors

namespace {
Vec knots_in(const Cpwl1D& f, const Interval& I) {
  Vec pts{I.lo};
  for (const auto& t : f.breakpoints)
    if (I.lo < t && t < I.hi) pts.push_back(t);
  pts.push_back(I.hi);
  return pts;
}
}  // namespace

SupError sup_abs_diff(const Cpwl1D& f, const Cpwl1D& g, const Interval& I) {
  Cpwl1D h = f - g;
  SupError e{Numeric(0), false, I.lo};
  for (const auto& t : knots_in(h, I)) {
    Numeric v = abs(h(t));
    if (v > e.value) e = {v, false, t};
  }
  return e;
}

SupError sup_abs_diff(const Cpwl1D& f, const Quadratic1D& q, const Interval& I) {
  Vec pts = knots_in(f, I);
  SupError e{Numeric(0), false, I.lo};
  auto consider = [&](const Numeric& t, const Numeric& v) {
    Numeric a = abs(v);
    if (a > e.value) e = {a, false, t};
  };
  Vec fv;
  for (const auto& t : pts) fv.push_back(f(t));
  for (size_t k = 0; k < pts.size(); ++k) consider(pts[k], fv[k] - q(pts[k]));
  if (q.a.is_zero()) return e;
  for (size_t k = 1; k < pts.size(); ++k) {
    const Numeric& u = pts[k - 1];
    const Numeric& v = pts[k];
    Numeric alpha = (fv[k] - fv[k - 1]) / (v - u);
    // f - q = -a t^2 + (alpha - b) t + const has its vertex at (alpha - b) / (2a)
    Numeric ts = (alpha - q.b) / (Numeric(2) * q.a);
    if (u < ts && ts < v) consider(ts, fv[k - 1] + alpha * (ts - u) - q(ts));
  }
  return e;
}

void for_each_grid_point(const Box& domain, size_t resolution, const std::function<void(std::span<const double>)>& f) {
  if (resolution < 2) throw std::invalid_argument("grid needs at least two points per axis");
  const size_t d = domain.dim();
  std::vector<double> lo(d), step(d), x(d);
  for (size_t i = 0; i < d; ++i) {
    lo[i] = domain.axes[i].lo.to_double();
    step[i] = (domain.axes[i].hi.to_double() - lo[i]) / double(resolution - 1);
  }
  std::vector<size_t> idx(d, 0);
  while (true) {
    for (size_t i = 0; i < d; ++i) x[i] = idx[i] + 1 == resolution ? domain.axes[i].hi.to_double() : lo[i] + step[i] * idx[i];
    f(x);
    size_t i = 0;
    while (i < d && ++idx[i] == resolution) idx[i++] = 0;
    if (i == d) break;
  }
}

double grid_max_error(const ReluNet& net, const Oracle& ref, const Box& domain, size_t resolution) {
  FloatEvaluator ev(net);
  double worst = 0;
  for_each_grid_point(domain, resolution, [&](std::span<const double> x) {
    worst = std::max(worst, std::abs(ev.scalar(x) - ref(x)));
  });
  return worst;
}

SupError sup_error(const ReluNet& net, const Reference& ref, const Box& domain, const SupMode& mode) {
  if (domain.dim() != net.input_dim()) throw std::invalid_argument("domain dimension does not match the net");
  if (!domain.bounded()) throw std::invalid_argument("sup_error needs a bounded domain");
  if (std::holds_alternative<Exact1DMode>(mode)) {
    if (net.input_dim() != 1) throw std::invalid_argument("exact mode needs d = 1");
    const Interval& I = domain.axes[0];
    Cpwl1D f = exact_cpwl_1d(net, I);
    if (auto* r = std::get_if<ReluNet>(&ref)) return sup_abs_diff(f, exact_cpwl_1d(*r, I), I);
    if (auto* c = std::get_if<Cpwl1D>(&ref)) return sup_abs_diff(f, *c, I);
    if (auto* q = std::get_if<Quadratic1D>(&ref)) return sup_abs_diff(f, *q, I);
    throw std::invalid_argument("exact mode needs a piecewise-linear or quadratic reference");
  }
  size_t res = std::get<GridMode>(mode).resolution;
  Oracle o;
  if (auto* r = std::get_if<ReluNet>(&ref)) {
    if (r->input_dim() != net.input_dim()) throw std::invalid_argument("reference net dimension mismatch");
    auto ev = std::make_shared<FloatEvaluator>(*r);
    o = [ev](std::span<const double> x) { return ev->scalar(x); };
  } else if (auto* c = std::get_if<Cpwl1D>(&ref)) {
    Cpwl1D g = *c;
    o = [g](std::span<const double> x) { return g(Numeric::real(x[0])).to_double(); };
  } else if (auto* q = std::get_if<Quadratic1D>(&ref)) {
    double a = q->a.to_double(), b = q->b.to_double(), cc = q->c.to_double();
    o = [=](std::span<const double> x) { return (a * x[0] + b) * x[0] + cc; };
  } else {
    o = std::get<Oracle>(ref);
  }
  FloatEvaluator ev(net);
  SupError e{Numeric::real(0), true, Numeric::real(0)};
  double worst = -1;
  for_each_grid_point(domain, res, [&](std::span<const double> x) {
    double v = std::abs(ev.scalar(x) - o(x));
    if (v > worst) {
      worst = v;
      e.argmax = Numeric::real(x[0]);
    }
  });
  e.value = Numeric::real(worst);
  return e;
}

// ---- arrangements and regions

size_t zaslavsky_bound(size_t W, size_t d) {
  size_t total = 0, c = 1;
  for (size_t j = 0; j <= std::min(W, d); ++j) {
    total += c;
    c = c * (W - j) / (j + 1);
  }
  return total;
}

ArrangementCellReport arrangement_cells(const AffineFamily& H) {
  H.validate();
  const size_t W = H.size(), d = H.dim();
  if (W > 20) throw std::invalid_argument("exact cell enumeration is limited to 20 hyperplanes");
  ArrangementCellReport rep;
  rep.W = W;
  rep.d = d;
  rep.zaslavsky_bound = zaslavsky_bound(W, d);
  rep.in_general_position = general_position(H);
  for (uint64_t mask = 0; mask < (uint64_t(1) << W); ++mask) {
    std::vector<LinearConstraint> cons;
    ActivationPattern nu(W);
    for (size_t j = 0; j < W; ++j) {
      int s = (mask >> j) & 1 ? 1 : -1;
      nu[j] = static_cast<int8_t>(s);
      LinearConstraint c{H.members[j].w, H.members[j].b, true};
      if (s < 0) {
        for (auto& a : c.a) a = -a;
        c.b = -c.b;
      }
      cons.push_back(std::move(c));
    }
    if (auto x = feasible_point(cons, d)) rep.cells.emplace_back(nu, *x);
  }
  rep.cell_count = rep.cells.size();
  return rep;
}

namespace {
template <class F>
void for_each_subset(size_t W, size_t k, F&& f) {
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > W) return;
  while (true) {
    f(idx);
    size_t i = k;
    while (i > 0 && idx[i - 1] == W - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}
}  // namespace

bool general_position(const AffineFamily& H) {
  H.validate();
  const size_t W = H.size(), d = H.dim();
  bool ok = true;
  for (size_t k = 1; k <= std::min(W, d) && ok; ++k)
    for_each_subset(W, k, [&](const std::vector<size_t>& S) {
      std::vector<Vec> rows;
      for (size_t i : S) rows.push_back(H.members[i].w);
      if (rank(rows) < k) ok = false;
    });
  if (W >= d + 1 && ok)
    for_each_subset(W, d + 1, [&](const std::vector<size_t>& S) {
      std::vector<Vec> rows;
      for (size_t i : S) {
        Vec r = H.members[i].w;
        r.push_back(H.members[i].b);
        rows.push_back(r);
      }
      if (rank(rows) < d + 1) ok = false;  // the d+1 hyperplanes share a point
    });
  return ok;
}

ActivationPattern activation_pattern(const ReluNet& net, std::span<const Numeric> x) {
  ActivationPattern p;
  for (const auto& layer : preactivations(net, x))
    for (const auto& z : layer) p.push_back(static_cast<int8_t>(z.sign()));
  return p;
}

AffineFamily first_layer_hyperplanes(const ReluNet& net) {
  AffineFamily H;
  const auto& l1 = net.layer(0);
  for (size_t i = 0; i < l1.weights.rows; ++i) {
    AffineFunction a{Vec(l1.weights.cols), l1.bias[i]};
    bool nonzero = false;
    for (size_t j = 0; j < l1.weights.cols; ++j) {
      a.w[j] = l1.weights(i, j);
      nonzero = nonzero || !a.w[j].is_zero();
    }
    if (nonzero) H.members.push_back(std::move(a));
  }
  return H;
}

RegionCensus region_census(const ReluNet& net, const Box& domain, size_t samples, uint64_t seed) {
  if (domain.dim() != net.input_dim() || !domain.bounded()) throw std::invalid_argument("census needs a bounded box");
  RegionCensus rc;
  rc.samples = samples;
  for (size_t l = 0; l < net.depth(); ++l) rc.hidden_nodes += net.layer_width(l);
  rc.bound_3m = std::pow(3.0, double(rc.hidden_nodes));
  rc.bound_2m = std::pow(2.0, double(rc.hidden_nodes));

  std::vector<std::vector<double>> W, B;
  for (const auto& lp : net.layers()) {
    W.emplace_back();
    B.emplace_back();
    for (const auto& w : lp.weights.a) W.back().push_back(w.to_double());
    for (const auto& b : lp.bias) B.back().push_back(b.to_double());
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> dist;
  for (const auto& a : domain.axes) dist.emplace_back(a.lo.to_double(), a.hi.to_double());
  std::string key;
  for (size_t s = 0; s < samples; ++s) {
    std::vector<double> v(domain.dim());
    for (size_t i = 0; i < v.size(); ++i) v[i] = dist[i](rng);
    key.clear();
    bool has_zero = false;
    for (size_t l = 0; l < net.depth(); ++l) {
      const auto& lp = net.layer(l);
      std::vector<double> z(lp.weights.rows);
      for (size_t i = 0; i < z.size(); ++i) {
        double acc = B[l][i];
        for (size_t j = 0; j < lp.weights.cols; ++j) acc += W[l][i * lp.weights.cols + j] * v[j];
        z[i] = acc;
        key.push_back(acc > 0 ? '+' : acc < 0 ? '-' : '0');
        has_zero = has_zero || acc == 0;
      }
      for (auto& x : z) x = std::max(x, 0.0);
      v = std::move(z);
    }
    rc.samples_with_zero += has_zero;
    ++rc.counts[key];
  }
  rc.distinct_patterns = rc.counts.size();
  if (net.depth() == 1 && net.input_dim() <= 3) {
    AffineFamily H = first_layer_hyperplanes(net);
    if (!H.members.empty() && H.size() <= 8) rc.arrangement = arrangement_cells(H);
  }
  return rc;
}

// ---- one-layer representability

namespace {
Numeric dot(const Vec& a, const Vec& b) {
  Numeric s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

OneLayerResult one_layer_representable(const JumpSpec& spec) {
  const AffineFamily& H = spec.arrangement;
  H.validate();
  const size_t W = H.size(), d = H.dim();
  for (const auto& [nu, cell] : spec.cells) {
    if (nu.size() != W || cell.witness.size() != d || cell.gradient.size() != d)
      throw std::invalid_argument("cell data has the wrong shape");
    for (size_t j = 0; j < W; ++j)
      if (H.members[j](cell.witness).sign() != nu[j]) throw std::invalid_argument("witness point is not in its cell");
  }
  OneLayerResult res;
  res.a.assign(W, Numeric(0));
  for (size_t j = 0; j < W; ++j) {
    const Vec& w = H.members[j].w;
    Numeric ww = dot(w, w);
    std::optional<Numeric> aj;
    for (const auto& [nu, cell] : spec.cells) {
      if (nu[j] != 1) continue;
      ActivationPattern other = nu;
      other[j] = -1;
      auto it = spec.cells.find(other);
      if (it == spec.cells.end()) continue;
      // the two cells share a facet on H_j iff H_j meets the closure of both in a (d-1)-face
      std::vector<LinearConstraint> cons;
      for (size_t i = 0; i < W; ++i) {
        if (i == j) continue;
        LinearConstraint c{H.members[i].w, H.members[i].b, true};
        if (nu[i] < 0) {
          for (auto& a : c.a) a = -a;
          c.b = -c.b;
        }
        cons.push_back(std::move(c));
      }
      LinearConstraint on{w, H.members[j].b, false}, on_neg{w, -H.members[j].b, false};
      for (auto& a : on_neg.a) a = -a;
      cons.push_back(on);
      cons.push_back(on_neg);
      if (!feasible_point(cons, d)) continue;
      Vec jump(d);
      for (size_t k = 0; k < d; ++k) jump[k] = cell.gradient[k] - it->second.gradient[k];
      Numeric a = dot(jump, w) / ww;
      for (size_t k = 0; k < d; ++k)
        if (jump[k] != a * w[k])
          throw std::invalid_argument("gradient jump across hyperplane " + std::to_string(j) +
                                      " is not normal to it; the data is not continuous");
      if (aj && *aj != a) {
        res.representable = false;
        res.violating_hyperplane = j;
        res.reason = "jump across hyperplane " + std::to_string(j) + " changes along the hyperplane";
        return res;
      }
      aj = a;
    }
    if (aj) res.a[j] = *aj;
  }
  res.representable = true;
  return res;
}

JumpSpec jump_spec_from_function(const AffineFamily& arrangement, const std::function<Numeric(const Vec&)>& f) {
  JumpSpec spec{arrangement, {}};
  auto rep = arrangement_cells(arrangement);
  const size_t d = arrangement.dim();
  for (const auto& [nu, x] : rep.cells) {
    // a step that stays inside the open cell along every axis
    std::optional<Numeric> h;
    for (const auto& m : arrangement.members) {
      Numeric l1 = 0;
      for (const auto& w : m.w) l1 += abs(w);
      if (l1.is_zero()) continue;
      Numeric room = abs(m(x)) / (Numeric(2) * l1);
      if (!h || room < *h) h = room;
    }
    Numeric step = h ? min(*h, Numeric(1)) : Numeric(1);
    Numeric f0 = f(x);
    Vec g(d);
    for (size_t i = 0; i < d; ++i) {
      Vec y = x;
      y[i] += step;
      g[i] = (f(y) - f0) / step;
    }
    spec.cells[nu] = {x, g};
  }
  return spec;
}

Vec net_gradient(const ReluNet& net, const Vec& x) {
  if (net.output_dim() != 1) throw std::invalid_argument("net_gradient needs scalar output");
  const size_t d = net.input_dim();
  // G holds d(layer values)/dx, one row per node
  std::vector<Vec> G(d, Vec(d));
  for (size_t i = 0; i < d; ++i) G[i][i] = 1;
  Vec v(x.begin(), x.end());
  for (size_t l = 0; l <= net.depth(); ++l) {
    const auto& lp = net.layer(l);
    std::vector<Vec> NG(lp.weights.rows, Vec(d));
    Vec z = lp.bias;
    for (size_t i = 0; i < lp.weights.rows; ++i)
      for (size_t j = 0; j < lp.weights.cols; ++j) {
        const Numeric& w = lp.weights(i, j);
        if (w.is_zero()) continue;
        z[i] += w * v[j];
        for (size_t k = 0; k < d; ++k)
          if (!G[j][k].is_zero()) NG[i][k] += w * G[j][k];
      }
    if (l < net.depth())
      for (size_t i = 0; i < z.size(); ++i) {
        if (z[i].is_zero()) throw std::domain_error("gradient undefined: point lies on a kink");
        if (z[i].sign() < 0) {
          z[i] = 0;
          NG[i].assign(d, Numeric(0));
        }
      }
    v = std::move(z);
    G = std::move(NG);
  }
  return G[0];
}

// ---- realization map probe

size_t parameter_count(const Architecture& a) { return param_count_formula(a.d, 1, a.W, a.L); }

ReluNet realize(const Architecture& a, const std::vector<double>& theta) {
  if (theta.size() != parameter_count(a)) throw std::invalid_argument("parameter vector has the wrong length");
  std::vector<LayerParams> layers;
  size_t pos = 0, fan_in = a.d;
  for (size_t l = 0; l <= a.L; ++l) {
    size_t rows = l < a.L ? a.W : 1;
    LayerParams lp{Matrix(rows, fan_in), Vec(rows)};
    for (auto& w : lp.weights.a) w = Numeric::real(theta[pos++]);
    for (auto& b : lp.bias) b = Numeric::real(theta[pos++]);
    layers.push_back(std::move(lp));
    fan_in = rows;
  }
  return ReluNet(a.d, std::move(layers));
}

std::vector<double> flatten_parameters(const ReluNet& net) {
  std::vector<double> theta;
  for (const auto& lp : net.layers()) {
    for (const auto& w : lp.weights.a) theta.push_back(w.to_double());
    for (const auto& b : lp.bias) theta.push_back(b.to_double());
  }
  return theta;
}

LipschitzReport lipschitz_probe(const Architecture& a, std::vector<double> radii, size_t pairs, size_t grid,
                                uint64_t seed) {
  std::sort(radii.begin(), radii.end());
  LipschitzReport rep;
  rep.radii = radii;
  rep.pairs_per_radius = pairs;
  const size_t n = parameter_count(a);
  std::mt19937_64 rng(seed);
  Box dom = Box::cube(a.d, 0, 1);
  std::vector<std::vector<double>> pts;
  for_each_grid_point(dom, grid, [&](std::span<const double> x) { pts.emplace_back(x.begin(), x.end()); });
  double running = 0;
  for (double B : radii) {
    std::uniform_real_distribution<double> u(-B, B);
    for (size_t p = 0; p < pairs; ++p) {
      std::vector<double> y(n), yp(n);
      double dist = 0;
      for (size_t i = 0; i < n; ++i) {
        y[i] = u(rng);
        yp[i] = u(rng);
        dist = std::max(dist, std::abs(y[i] - yp[i]));
      }
      if (dist == 0) continue;
      FloatEvaluator e1(realize(a, y)), e2(realize(a, yp));
      double sup = 0;
      for (const auto& x : pts) sup = std::max(sup, std::abs(e1.scalar(x) - e2.scalar(x)));
      running = std::max(running, sup / dist);
    }
    rep.max_ratio.push_back(running);
  }
  return rep;
}

}  // namespace relucalc
