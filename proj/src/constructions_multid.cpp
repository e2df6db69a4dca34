#include "relucalc/constructions_multid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include "relucalc/calculus.hpp"
#include "relucalc/channel_builder.hpp"
#include "relucalc/constructions_1d.hpp"

namespace relucalc {

namespace {

using Thunk = std::function<Lin()>;

size_t ceil_log2(size_t m) {
  size_t k = 0;
  while ((size_t(1) << k) < m) ++k;
  return k;
}

int op_sign(MinMax op) { return op == MinMax::Max ? 1 : -1; }

Lin affine_lin(const AffineFunction& z) {
  Lin r = Lin::constant(z.b);
  for (size_t i = 0; i < z.w.size(); ++i)
    if (!z.w[i].is_zero()) r += Lin::node(i, z.w[i]);
  return r;
}

// plain net from per-layer expressions over the previous layer
ReluNet from_layers(size_t d, const std::vector<std::vector<Lin>>& hidden, const std::vector<Lin>& out) {
  std::vector<LayerParams> params;
  size_t fan_in = d;
  auto build = [&](const std::vector<Lin>& exprs) {
    LayerParams lp{Matrix(exprs.size(), fan_in), Vec(exprs.size())};
    for (size_t r = 0; r < exprs.size(); ++r) {
      for (const auto& [j, w] : exprs[r].terms) lp.weights(r, j) += w;
      lp.bias[r] = exprs[r].c;
    }
    fan_in = exprs.size();
    return lp;
  };
  for (const auto& h : hidden) params.push_back(build(h));
  params.push_back(build(out));
  return ReluNet(d, std::move(params));
}

// min/max of the given expressions over the inputs by pairwise reduction;
// each pair (p, q) becomes (s(p - q))+, q+, (-q)+
ReluNet tournament(size_t d, std::vector<Lin> vals, MinMax op, bool apply_relu) {
  const Numeric s(op_sign(op));
  std::vector<std::vector<Lin>> hidden;
  if (vals.size() == 1) {
    if (apply_relu) return from_layers(d, {{vals[0]}}, {Lin::node(0)});
    return from_layers(d, {{vals[0], -vals[0]}}, {Lin::node(0) - Lin::node(1)});
  }
  const size_t M = size_t(1) << ceil_log2(vals.size());
  vals.resize(M, vals.back());
  while (vals.size() > 1) {
    std::vector<Lin> layer, next;
    for (size_t i = 0; i < vals.size(); i += 2) {
      const Lin& p = vals[i];
      const Lin& q = vals[i + 1];
      size_t base = layer.size();
      layer.push_back((p - q) * s);
      layer.push_back(q);
      layer.push_back(-q);
      next.push_back(Lin::node(base + 1) - Lin::node(base + 2) + Lin::node(base) * s);
    }
    hidden.push_back(std::move(layer));
    vals = std::move(next);
  }
  if (apply_relu) {
    hidden.push_back({vals[0]});
    return from_layers(d, hidden, {Lin::node(0)});
  }
  return from_layers(d, hidden, {vals[0]});
}

std::vector<Lin> family_lins(const AffineFamily& f) {
  std::vector<Lin> out;
  for (const auto& z : f.members) out.push_back(affine_lin(z));
  return out;
}

// Emits the recursion mu_k = z_k + s (s(mu_{k-1} - z_k))+ in compute channel c,
// plus a final ReLU layer when asked. `each` runs on every new layer. The
// returned thunk reads the result from the layer that follows.
Thunk emit_recursive(ChannelNetBuilder& nb, const AffineFamily& fam, int sign, bool apply_relu, size_t c,
                     const std::function<void()>& each) {
  const Numeric s(sign);
  auto z = [&nb, &fam](size_t i) { return nb.affine_in(fam.members[i].w, fam.members[i].b); };
  for (size_t i = 1; i < fam.size(); ++i) {
    nb.next_layer();
    each();
    Lin mu = i == 1 ? z(0) : z(i - 1) + nb.prev(c) * s;
    nb.set(c, (mu - z(i)) * s);
  }
  const size_t m = fam.size();
  const AffineFunction last = fam.members.back();
  Thunk mu = [&nb, last, c, s, m] {
    Lin zl = nb.affine_in(last.w, last.b);
    return m == 1 ? zl : zl + nb.prev(c) * s;
  };
  if (!apply_relu) return mu;
  nb.next_layer();
  each();
  nb.set(c, mu());
  return [&nb, c] { return nb.prev(c); };
}

std::vector<ChannelRole> source_roles(size_t d) {
  std::vector<ChannelRole> roles;
  for (size_t i = 0; i < d; ++i) roles.push_back(ChannelRole::source(i));
  return roles;
}

void require_box(const std::optional<Box>& box, size_t d) {
  if (!box || !box->bounded()) throw std::invalid_argument("a bounded box is required");
  if (box->dim() != d) throw std::invalid_argument("box dimension mismatch");
}

// shared input, stacked outputs
ReluNet parallel_outputs(const std::vector<ReluNet>& nets) {
  const size_t d = nets[0].input_dim(), L = nets[0].depth();
  std::vector<LayerParams> layers;
  for (size_t l = 0; l <= L; ++l) {
    size_t rows = 0, cols = 0;
    for (const auto& n : nets) {
      rows += n.layer(l).weights.rows;
      cols += n.layer(l).weights.cols;
    }
    if (l == 0) cols = d;
    LayerParams lp{Matrix(rows, cols), Vec(rows)};
    size_t r0 = 0, c0 = 0;
    for (const auto& n : nets) {
      const auto& src = n.layer(l);
      for (size_t i = 0; i < src.weights.rows; ++i) {
        for (size_t j = 0; j < src.weights.cols; ++j) lp.weights(r0 + i, (l == 0 ? 0 : c0) + j) = src.weights(i, j);
        lp.bias[r0 + i] = src.bias[i];
      }
      r0 += src.weights.rows;
      c0 += src.weights.cols;
    }
    layers.push_back(std::move(lp));
  }
  return ReluNet(d, std::move(layers));
}

ReluNet minmax_deep(const std::vector<ReluNet>& nets, MinMax op, const Box& box) {
  const size_t d = nets[0].input_dim(), W0 = nets[0].width();
  const size_t Wc = std::max<size_t>(W0, 3);
  auto roles = source_roles(d);
  const size_t c0 = roles.size();
  for (size_t i = 0; i < Wc; ++i) roles.push_back(ChannelRole::compute());
  const size_t coll = roles.size();
  roles.push_back(ChannelRole::collation());
  const Numeric s(op_sign(op));

  ChannelNetBuilder nb(d, roles);
  // value owed to the collation channel, read from the previous layer
  Thunk owed;
  bool coll_live = false;
  auto net_output = [&](const ReluNet& net) {
    const auto& o = net.output_layer();
    Lin r = Lin::constant(o.bias[0]);
    for (size_t k = 0; k < o.weights.cols; ++k) r += nb.prev(c0 + k) * o.weights(0, k);
    return r;
  };
  for (size_t j = 0; j < nets.size(); ++j) {
    const ReluNet& net = nets[j];
    for (size_t l = 0; l < net.depth(); ++l) {
      nb.next_layer();
      if (owed) {
        nb.set(coll, coll_live ? nb.prev(coll) + owed() : owed());
        coll_live = true;
        owed = nullptr;
      } else if (coll_live) {
        nb.set(coll, nb.prev(coll));
      }
      const auto& lp = net.layer(l);
      for (size_t r = 0; r < lp.weights.rows; ++r) {
        Lin e = Lin::constant(lp.bias[r]);
        for (size_t k = 0; k < lp.weights.cols; ++k) {
          if (lp.weights(r, k).is_zero()) continue;
          e += (l == 0 ? nb.input(k) : nb.prev(c0 + k)) * lp.weights(r, k);
        }
        nb.set(c0 + r, e);
      }
    }
    if (j == 0) {
      owed = [&, j] { return net_output(nets[j]); };
      continue;
    }
    // T <- T + s (s(S - T))+
    nb.next_layer();
    nb.set(coll, nb.prev(coll));
    nb.set(c0, (net_output(net) - nb.prev(coll)) * s);
    owed = [&] { return nb.prev(c0) * s; };
  }
  nb.begin_output();
  Lin out = nb.prev(coll) + owed();
  return special_to_relu(nb.finish(out, box), box);
}

Vec lattice_point(const std::vector<long>& v, size_t n) {
  Vec x;
  for (long c : v) x.push_back(Numeric::rational(c, long(n)));
  return x;
}

// affine z with z(p_i) = delta_{i, target}
AffineFunction barycentric(const std::vector<Vec>& pts, size_t target) {
  const size_t d = pts[0].size();
  std::vector<Vec> M;
  Vec rhs;
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec row = pts[i];
    row.push_back(Numeric(1));
    M.push_back(std::move(row));
    rhs.push_back(Numeric(i == target ? 1 : 0));
  }
  auto sol = solve_linear(M, rhs);
  if (!sol) throw std::invalid_argument("degenerate simplex");
  AffineFunction z;
  z.w.assign(sol->begin(), sol->begin() + long(d));
  z.b = (*sol)[d];
  return z;
}

void check_vertex(const KuhnGrid& g, const std::vector<long>& v) {
  if (v.size() != g.d) throw std::invalid_argument("vertex dimension mismatch");
  for (long c : v)
    if (c < 0 || c > long(g.n)) throw std::invalid_argument("vertex outside the grid");
}

size_t factorial(size_t k) {
  size_t f = 1;
  for (size_t i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

ReluNet minmax_affine(const AffineFamily& family, MinMax op, MinMaxStrategy strategy, bool apply_relu,
                      const std::optional<Box>& box) {
  family.validate();
  if (family.size() == 0) throw std::invalid_argument("empty family");
  const size_t d = family.dim();
  if (strategy == MinMaxStrategy::Tournament || family.size() == 1)
    return tournament(d, family_lins(family), op, apply_relu);
  require_box(box, d);
  auto roles = source_roles(d);
  const size_t c = roles.size();
  roles.push_back(ChannelRole::compute());
  ChannelNetBuilder nb(d, roles);
  Thunk res = emit_recursive(nb, family, op_sign(op), apply_relu, c, [] {});
  nb.begin_output();
  Lin out = res();
  return special_to_relu(nb.finish(out, *box), *box);
}

ReluNet minmax_outputs(const std::vector<ReluNet>& nets, MinMax op, NetMinMaxStrategy strategy,
                       const std::optional<Box>& box) {
  if (nets.empty()) throw std::invalid_argument("no nets given");
  const size_t d = nets[0].input_dim();
  for (const auto& n : nets) {
    if (n.input_dim() != d || n.output_dim() != 1) throw std::invalid_argument("nets must map R^d to R");
    if (strategy == NetMinMaxStrategy::Parallel && n.depth() != nets[0].depth())
      throw std::invalid_argument("parallel min/max needs equal depths");
    if (strategy == NetMinMaxStrategy::Deep && n.width() != nets[0].width())
      throw std::invalid_argument("deep min/max needs equal widths");
  }
  if (nets.size() == 1) return nets[0];
  if (strategy == NetMinMaxStrategy::Parallel) {
    std::vector<Lin> vals;
    for (size_t j = 0; j < nets.size(); ++j) vals.push_back(Lin::node(j));
    return concatenate_compose(tournament(nets.size(), vals, op, false), parallel_outputs(nets));
  }
  require_box(box, d);
  return minmax_deep(nets, op, *box);
}

AffineFamily tent_family(const std::vector<Vec>& simplex, const Vec& x_star) {
  if (simplex.empty()) throw std::invalid_argument("empty simplex");
  const size_t d = simplex[0].size();
  if (simplex.size() != d + 1) throw std::invalid_argument("simplex needs d + 1 vertices");
  if (x_star.size() != d) throw std::invalid_argument("x* dimension mismatch");
  AffineFamily fam;
  for (size_t j = 0; j <= d; ++j) {
    AffineFunction z = barycentric(simplex, j);
    Numeric at = z(x_star);
    if (at.sign() <= 0) throw std::invalid_argument("x* is not interior to the simplex");
    for (auto& w : z.w) w /= at;
    z.b /= at;
    fam.members.push_back(std::move(z));
  }
  return fam;
}

ReluNet tent_net(const std::vector<Vec>& simplex, const Vec& x_star) {
  return minmax_affine(tent_family(simplex, x_star), MinMax::Min, MinMaxStrategy::Tournament, true);
}

size_t ConvexPieceDecomposition::dim() const { return terms.empty() ? 0 : terms[0].family.dim(); }

void ConvexPieceDecomposition::validate() const {
  if (terms.empty()) throw std::invalid_argument("empty decomposition");
  const size_t d = dim();
  for (const auto& t : terms) {
    if (t.sign != 1 && t.sign != -1) throw std::invalid_argument("term sign must be +1 or -1");
    if (t.family.size() == 0) throw std::invalid_argument("empty family in decomposition");
    t.family.validate();
    if (t.family.dim() != d) throw std::invalid_argument("families disagree on dimension");
    if (t.family.size() > d + 1) throw std::invalid_argument("family has more than d + 1 members");
  }
}

Numeric ConvexPieceDecomposition::operator()(const Vec& x) const {
  Numeric total = 0;
  for (const auto& t : terms) {
    Numeric mx = t.family.members[0](x);
    for (const auto& z : t.family.members) mx = max(mx, z(x));
    total += Numeric(t.sign) * mx;
  }
  return total;
}

ReluNet cpwl_compile(const ConvexPieceDecomposition& decomp, CpwlMode mode, const std::optional<Box>& box) {
  decomp.validate();
  const size_t d = decomp.dim();
  if (mode == CpwlMode::Shallow) {
    std::vector<ReluNet> nets;
    Vec alpha;
    for (const auto& t : decomp.terms) {
      AffineFamily padded = t.family;
      while (padded.size() < d + 1) padded.members.push_back(t.family.members.back());
      nets.push_back(minmax_affine(padded, MinMax::Max, MinMaxStrategy::Tournament, false));
      alpha.push_back(Numeric(t.sign));
    }
    return parallelize_sum(nets, alpha);
  }
  require_box(box, d);
  auto roles = source_roles(d);
  const size_t c = roles.size();
  roles.push_back(ChannelRole::compute());
  const size_t coll = roles.size();
  roles.push_back(ChannelRole::collation());
  ChannelNetBuilder nb(d, roles);
  Thunk owed;
  auto each = [&] {
    if (nb.layers() == 1) {
      nb.set(coll, Lin{});
    } else {
      nb.set(coll, owed ? nb.prev(coll) + owed() : nb.prev(coll));
      owed = nullptr;
    }
  };
  std::vector<const AffineFunction*> affine_terms;
  std::vector<int> affine_signs;
  for (const auto& t : decomp.terms) {
    if (t.family.size() == 1) {
      affine_terms.push_back(&t.family.members[0]);
      affine_signs.push_back(t.sign);
      continue;
    }
    Thunk mu = emit_recursive(nb, t.family, 1, false, c, each);
    const Numeric e(t.sign);
    owed = [mu, e] { return mu() * e; };
  }
  if (nb.layers() == 0) {
    nb.next_layer();
    each();
  }
  nb.begin_output();
  Lin out = nb.prev(coll);
  if (owed) out += owed();
  for (size_t i = 0; i < affine_terms.size(); ++i)
    out += nb.affine_in(affine_terms[i]->w, affine_terms[i]->b) * Numeric(affine_signs[i]);
  return special_to_relu(nb.finish(out, *box), *box);
}

size_t KuhnGrid::vertex_count() const {
  size_t c = 1;
  for (size_t i = 0; i < d; ++i) c *= n + 1;
  return c;
}

std::vector<std::vector<long>> KuhnGrid::vertices() const {
  std::vector<std::vector<long>> out;
  std::vector<long> v(d, 0);
  for (size_t idx = 0; idx < vertex_count(); ++idx) {
    size_t rest = idx;
    for (size_t i = d; i-- > 0;) {
      v[i] = long(rest % (n + 1));
      rest /= n + 1;
    }
    out.push_back(v);
  }
  return out;
}

Vec KuhnGrid::point(const std::vector<long>& v) const { return lattice_point(v, n); }

namespace {

// the d! simplices of the cube with lower corner c
std::vector<std::vector<std::vector<long>>> cube_simplices(const std::vector<long>& c) {
  const size_t d = c.size();
  std::vector<size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::vector<long>>> out;
  do {
    std::vector<std::vector<long>> simplex;
    std::vector<long> w = c;
    simplex.push_back(w);
    for (size_t i = 0; i < d; ++i) {
      w[perm[i]] += 1;
      simplex.push_back(w);
    }
    // reflect the first axis so the diagonal runs from (1, 0, ..) to (0, 1, ..)
    for (auto& p : simplex) p[0] = 2 * c[0] + 1 - p[0];
    out.push_back(std::move(simplex));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

std::vector<std::vector<std::vector<long>>> KuhnGrid::simplices() const {
  std::vector<std::vector<std::vector<long>>> out;
  KuhnGrid cubes{d, n - 1};
  for (const auto& c : cubes.vertices())
    for (auto& s : cube_simplices(c)) out.push_back(std::move(s));
  return out;
}

std::vector<std::vector<std::vector<long>>> KuhnGrid::star(const std::vector<long>& v) const {
  check_vertex(*this, v);
  std::vector<std::vector<std::vector<long>>> out;
  for (size_t mask = 0; mask < (size_t(1) << d); ++mask) {
    std::vector<long> c = v;
    bool ok = true;
    for (size_t i = 0; i < d; ++i) {
      if ((mask >> i) & 1) c[i] -= 1;
      if (c[i] < 0 || c[i] >= long(n)) ok = false;
    }
    if (!ok) continue;
    for (auto& s : cube_simplices(c))
      if (std::find(s.begin(), s.end(), v) != s.end()) out.push_back(std::move(s));
  }
  return out;
}

AffineFamily fem_basis_family(const KuhnGrid& grid, const std::vector<long>& v) {
  AffineFamily fam;
  for (const auto& s : grid.star(v)) {
    std::vector<Vec> pts;
    size_t target = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == v) target = i;
      pts.push_back(grid.point(s[i]));
    }
    fam.members.push_back(barycentric(pts, target));
  }
  return fam;
}

ReluNet fem_basis_net(const KuhnGrid& grid, const std::vector<long>& v) {
  AffineFamily fam = fem_basis_family(grid, v);
  const size_t dstar = factorial(grid.d + 1);
  for (size_t i = 0; fam.size() < dstar; ++i) fam.members.push_back(fam.members[i]);
  return minmax_affine(fam, MinMax::Min, MinMaxStrategy::Tournament, true);
}

Numeric fem_basis_ref(const KuhnGrid& grid, const std::vector<long>& v, const Vec& x) {
  check_vertex(grid, v);
  if (x.size() != grid.d) throw std::invalid_argument("point dimension mismatch");
  std::vector<long> c(grid.d);
  for (size_t i = 0; i < grid.d; ++i) {
    if (x[i].sign() < 0 || Numeric(1) < x[i]) throw std::invalid_argument("point outside [0, 1]^d");
    long f = long(std::floor((x[i] * Numeric(long(grid.n))).to_double()));
    // guard the double floor against exact grid values
    while (Numeric(long(grid.n)) * x[i] < Numeric(f)) --f;
    while (!(Numeric(long(grid.n)) * x[i] < Numeric(f + 1)) && f + 1 <= long(grid.n)) ++f;
    c[i] = std::clamp<long>(f, 0, long(grid.n) - 1);
  }
  for (const auto& s : cube_simplices(c)) {
    std::vector<Vec> pts;
    for (const auto& p : s) pts.push_back(grid.point(p));
    bool inside = true;
    Numeric lambda_v = 0;
    for (size_t i = 0; i < s.size() && inside; ++i) {
      Numeric l = barycentric(pts, i)(x);
      if (l.sign() < 0 && !(abs(l) < Numeric::real(1e-12))) inside = false;
      if (s[i] == v) lambda_v = l;
    }
    if (inside) return lambda_v;
  }
  throw std::logic_error("point not covered by its cube");
}

ReluNet fem_combination(const KuhnGrid& grid, const Vec& values, FemMode mode) {
  auto verts = grid.vertices();
  if (values.size() != verts.size()) throw std::invalid_argument("one value per grid vertex");
  if (mode == FemMode::Parallel) {
    std::vector<ReluNet> nets;
    for (const auto& v : verts) nets.push_back(fem_basis_net(grid, v));
    return parallelize_sum(nets, values);
  }
  const size_t d = grid.d;
  auto roles = source_roles(d);
  const size_t c = roles.size();
  roles.push_back(ChannelRole::compute());
  const size_t coll = roles.size();
  roles.push_back(ChannelRole::collation());
  ChannelNetBuilder nb(d, roles);
  Thunk owed;
  auto each = [&] {
    if (nb.layers() == 1) {
      nb.set(coll, Lin{});
    } else {
      nb.set(coll, owed ? nb.prev(coll) + owed() : nb.prev(coll));
      owed = nullptr;
    }
  };
  for (size_t i = 0; i < verts.size(); ++i) {
    if (values[i].is_zero()) continue;
    Thunk phi = emit_recursive(nb, fem_basis_family(grid, verts[i]), -1, true, c, each);
    const Numeric sv = values[i];
    owed = [phi, sv] { return phi() * sv; };
  }
  if (nb.layers() == 0) {
    nb.next_layer();
    each();
  }
  nb.begin_output();
  Lin out = nb.prev(coll);
  if (owed) out += owed();
  Box unit = Box::cube(d, 0, 1);
  return special_to_relu(nb.finish(out, unit), unit);
}

RidgeResult ridge_interpolant(const std::vector<Vec>& points, const Vec& values) {
  if (points.empty()) throw std::invalid_argument("no data points");
  if (points.size() != values.size()) throw std::invalid_argument("one value per point");
  const size_t d = points[0].size();
  for (const auto& p : points)
    if (p.size() != d) throw std::invalid_argument("points disagree on dimension");
  for (size_t i = 0; i < points.size(); ++i)
    for (size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j]) throw std::invalid_argument("duplicate data points");

  Vec direction;
  size_t kk = 0;
  if (points.size() == 1) {
    direction = Vec(d, Numeric(0));
    if (d) direction[0] = 1;
    return RidgeResult{scale_output(zero_net(d), 1, values[0]), direction, 0};
  }
  // each pair rules out at most d - 1 values of k, so this terminates
  Vec t;
  for (size_t k = 1;; ++k) {
    Vec dir;
    Numeric pw = 1;
    for (size_t i = 0; i < d; ++i) {
      dir.push_back(pw);
      pw *= Numeric(long(k));
    }
    t.clear();
    for (const auto& p : points) {
      Numeric s = 0;
      for (size_t i = 0; i < d; ++i) s += dir[i] * p[i];
      t.push_back(s);
    }
    Vec sorted = t;
    std::sort(sorted.begin(), sorted.end(), [](const Numeric& a, const Numeric& b) { return a < b; });
    bool distinct = true;
    for (size_t i = 1; i < sorted.size(); ++i)
      if (!(sorted[i - 1] < sorted[i])) distinct = false;
    if (distinct) {
      direction = dir;
      kk = k;
      break;
    }
  }
  Numeric lo = t[0], hi = t[0];
  for (const auto& v : t) {
    lo = min(lo, v);
    hi = max(hi, v);
  }
  const Numeric span = hi - lo;
  std::vector<size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return t[a] < t[b]; });
  Vec ts, ys;
  for (size_t i : order) {
    ts.push_back((t[i] - lo) / span);
    ys.push_back(values[i]);
  }
  ReluNet S = deep_interpolant(ts, ys);
  AffineMap proj{Matrix(1, d), Vec{-lo / span}};
  for (size_t i = 0; i < d; ++i) proj.A(0, i) = direction[i] / span;
  return RidgeResult{precompose(S, proj), direction, kk};
}

}  // namespace relucalc
