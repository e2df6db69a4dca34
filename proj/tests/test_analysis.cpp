#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "relucalc/analysis.hpp"
#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_product.hpp"
#include "test_util.hpp"

using namespace relucalc;
using testutil::rat;

namespace {

size_t ipow(size_t b, size_t e) {
  size_t r = 1;
  while (e--) r *= b;
  return r;
}

size_t binom(size_t n, size_t k) {
  if (k > n) return 0;
  size_t r = 1;
  for (size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

AffineFunction line(long a, long b, long c) { return {Vec{Numeric(a), Numeric(b)}, Numeric(c)}; }

// shallow net sum_j (w_j . x + b_j)_+ with the given rows
ReluNet shallow_from(const AffineFamily& f) {
  const size_t W = f.size(), d = f.dim();
  LayerParams l1{Matrix(W, d), Vec(W)}, out{Matrix(1, W), Vec{Numeric(0)}};
  for (size_t j = 0; j < W; ++j) {
    for (size_t i = 0; i < d; ++i) l1.weights(j, i) = f.members[j].w[i];
    l1.bias[j] = f.members[j].b;
    out.weights(0, j) = 1;
  }
  return ReluNet(d, {l1, out});
}

}  // namespace

TEST_CASE("exact_cpwl_1d matches the forward pass") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t L = 1 + trial % 3, W = 1 + rng() % 4;
    ReluNet net = testutil::random_exact_net(rng, 1, std::vector<size_t>(L, W));
    Cpwl1D f = exact_cpwl_1d(net);
    f.validate();
    CHECK(f.kink_count() + 1 <= ipow(W + 1, L));
    Vec probe = f.breakpoints;
    for (size_t k = 0; k + 1 < f.breakpoints.size(); ++k)
      probe.push_back((f.breakpoints[k] + f.breakpoints[k + 1]) / Numeric(2));
    for (int s = 0; s < 30; ++s) probe.push_back(rat(rng, -20, 20, 64));
    probe.push_back(f.breakpoints.front() - Numeric(1000));
    probe.push_back(f.breakpoints.back() + Numeric(1000));
    for (const auto& t : probe) REQUIRE(f(t).q() == testutil::reference_eval1(net, t.q()));
  }
  // on [0, 1] the sawtooth has 2^L - 1 kinks inside and the clamp adds two at 0 and 1
  for (size_t L = 1; L <= 8; ++L) {
    Cpwl1D w = exact_cpwl_1d(sawtooth(L), Interval{Numeric(0), Numeric(1)});
    CHECK(w.kink_count() == (size_t(1) << L) + 1);
    CHECK(w(Numeric(2)) == w(Numeric(1)));
  }
  CHECK_THROWS(exact_cpwl_1d(testutil::random_exact_net(rng, 2, {3})));
}

TEST_CASE("sup_abs_diff") {
  const Interval I{Numeric(0), Numeric(1)};
  Cpwl1D f = exact_cpwl_1d(hat01());
  CHECK(sup_abs_diff(f, Cpwl1D::constant(0), I).value == Numeric(1));
  CHECK(sup_abs_diff(f, Cpwl1D::constant(0), I).argmax == Numeric::rational(1, 2));
  // hat against t^2 on [0, 1]: worst at t = 1
  Quadratic1D sq{Numeric(1), Numeric(0), Numeric(0)};
  CHECK(sup_abs_diff(f, sq, I).value == Numeric(1));
  // interior maximum of a parabola against a line
  Quadratic1D cap{Numeric(-1), Numeric(1), Numeric(0)};
  CHECK(sup_abs_diff(Cpwl1D::constant(0), cap, I).value == Numeric::rational(1, 4));

  // oracle: candidates are window ends, knots of both and each piece's stationary point
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    Vec t, y, u, z;
    for (int k = 0; k < 6; ++k) {
      t.push_back(Numeric::rational(k, 5));
      y.push_back(rat(rng, -2, 2, 16));
      u.push_back(Numeric::rational(2 * k + 1, 12));
      z.push_back(rat(rng, -2, 2, 16));
    }
    Cpwl1D g = Cpwl1D::interpolate(t, y), h = Cpwl1D::interpolate(u, z);
    Vec cand{I.lo, I.hi};
    for (const auto& k : g.breakpoints) cand.push_back(k);
    for (const auto& k : h.breakpoints) cand.push_back(k);
    Numeric want = 0;
    for (const auto& c : cand)
      if (!(c < I.lo) && !(I.hi < c)) want = max(want, abs(g(c) - h(c)));
    CHECK(sup_abs_diff(g, h, I).value == want);

    Quadratic1D q{rat(rng, -3, 3, 4), rat(rng, -2, 2, 4), rat(rng, -1, 1, 4)};
    Numeric wq = 0;
    Vec cq = cand;
    if (!q.a.is_zero()) {
      // stationary points of q - g on each piece of g
      for (size_t k = 0; k <= g.breakpoints.size(); ++k) cq.push_back((g.slope(k) - q.b) / (Numeric(2) * q.a));
    }
    for (const auto& c : cq)
      if (!(c < I.lo) && !(I.hi < c)) wq = max(wq, abs(g(c) - q(c)));
    CHECK(sup_abs_diff(g, q, I).value == wq);
  }
}

TEST_CASE("sup_error modes") {
  const Box unit = Box::cube(1, 0, 1);
  ReluNet s = square_net(3);
  Quadratic1D sq{Numeric(1), Numeric(0), Numeric(0)};
  SupError ex = sup_error(s, sq, unit, Exact1DMode{});
  CHECK_FALSE(ex.lower_bound_only);
  CHECK(ex.value == Numeric::rational(1, 256));
  SupError gr = sup_error(s, sq, unit, GridMode{1025});
  CHECK(gr.lower_bound_only);
  CHECK(gr.value.to_double() <= ex.value.to_double() + 1e-15);
  CHECK(gr.value.to_double() == doctest::Approx(ex.value.to_double()).epsilon(1e-9));
  Oracle o = [](std::span<const double> x) { return x[0] * x[0]; };
  CHECK(sup_error(s, o, unit, GridMode{1025}).value.to_double() == doctest::Approx(1.0 / 256).epsilon(1e-9));
  CHECK_THROWS(sup_error(s, o, unit, Exact1DMode{}));
  CHECK_THROWS(sup_error(s, sq, Box::unbounded(1), Exact1DMode{}));
  CHECK(sup_error(s, s, unit, Exact1DMode{}).value.is_zero());
  size_t count = 0;
  for_each_grid_point(Box::cube(2, 0, 1), 11, [&](std::span<const double>) { ++count; });
  CHECK(count == 121);
}

TEST_CASE("arrangement cells") {
  for (size_t d = 1; d <= 3; ++d)
    for (size_t W = 0; W <= 6; ++W) {
      size_t want = 0;
      for (size_t i = 0; i <= d; ++i) want += binom(W, i);
      CHECK(zaslavsky_bound(W, d) == want);
    }
  // five lines in general position
  AffineFamily five{{line(1, 0, 0), line(0, 1, 0), line(1, 1, -1), line(1, -2, 1), line(3, 1, -5)}};
  CHECK(general_position(five));
  ArrangementCellReport rep = arrangement_cells(five);
  CHECK(rep.cell_count == 16);
  CHECK(rep.zaslavsky_bound == 16);
  CHECK(rep.in_general_position);
  for (const auto& [nu, x] : rep.cells)
    for (size_t j = 0; j < five.size(); ++j) CHECK(five.members[j](x).sign() == nu[j]);

  AffineFamily parallel{{line(1, 0, 0), line(1, 0, -1), line(1, 0, -2)}};
  CHECK_FALSE(general_position(parallel));
  CHECK(arrangement_cells(parallel).cell_count == 4);
  // concurrent lines
  AffineFamily pencil{{line(1, 0, 0), line(0, 1, 0), line(1, 1, 0)}};
  CHECK_FALSE(general_position(pencil));
  CHECK(arrangement_cells(pencil).cell_count == 6);

  // random families never exceed the bound, and reach it in general position
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    AffineFamily f;
    for (int j = 0; j < 4; ++j) f.members.push_back({testutil::rat_vec(rng, 3, -3, 3, 1), rat(rng, -3, 3, 1)});
    bool zero_row = false;
    for (const auto& m : f.members) zero_row |= std::all_of(m.w.begin(), m.w.end(), [](const Numeric& v) { return v.is_zero(); });
    if (zero_row) continue;
    ArrangementCellReport r = arrangement_cells(f);
    CHECK(r.cell_count <= zaslavsky_bound(4, 3));
    if (general_position(f)) CHECK(r.cell_count == zaslavsky_bound(4, 3));
  }
}

TEST_CASE("activation patterns and region census") {
  AffineFamily five{{line(1, 0, 0), line(0, 1, 0), line(1, 1, -1), line(1, -2, 1), line(3, 1, -5)}};
  ReluNet net = shallow_from(five);
  CHECK(first_layer_hyperplanes(net).size() == 5);
  Vec x{Numeric(2), Numeric(3)};
  ActivationPattern p = activation_pattern(net, x);
  REQUIRE(p.size() == 5);
  for (size_t j = 0; j < 5; ++j) CHECK(p[j] == five.members[j](x).sign());

  RegionCensus c = region_census(net, Box::cube(2, -10, 10), 20000, 7);
  CHECK(c.samples == 20000);
  CHECK(c.hidden_nodes == 5);
  CHECK(c.distinct_patterns <= 16);
  CHECK(c.distinct_patterns >= 12);
  CHECK(c.bound_2m == doctest::Approx(32));
  CHECK(c.bound_3m == doctest::Approx(243));
  size_t total = 0;
  for (const auto& [k, n] : c.counts) total += n;
  CHECK(total == c.samples);
  REQUIRE(c.arrangement);
  CHECK(c.arrangement->cell_count == 16);

  // a 1-d net of width W splits the line into at most W + 1 pieces
  std::mt19937_64 rng(24);
  ReluNet one = testutil::random_exact_net(rng, 1, {6});
  CHECK(region_census(one, Box::cube(1, -5, 5), 5000).distinct_patterns <= 7);
}

TEST_CASE("shattering") {
  Vec pts{Numeric(0), Numeric::rational(1, 4), Numeric::rational(1, 2), Numeric(1)};
  CHECK(shatters(ShallowFamily{3}, pts));
  ShatterResult r = shatter_check(ShallowFamily{3}, pts, {1, -1, 1, -1});
  REQUIRE(r.realized);
  REQUIRE(r.witness);
  CHECK(r.witness->width() <= 3);
  for (size_t i = 0; i < pts.size(); ++i) CHECK(eval1(*r.witness, pts[i]).sign() == (i % 2 ? -1 : 1));
  Vec five = pts;
  five.push_back(Numeric(2));
  CHECK_FALSE(shatter_check(ShallowFamily{3}, five, {1, 1, 1, 1, 1}).realized);

  // one neuron cannot alternate three times; the grid search finds the others
  Vec three{Numeric::rational(1, 4), Numeric::rational(1, 2), Numeric::rational(3, 4)};
  Upsilon11Grid grid{0.05, 1.0};
  CHECK_FALSE(shatter_check(grid, three, {1, -1, 1}).realized);
  CHECK_FALSE(shatter_check(grid, three, {-1, 1, -1}).realized);
  ShatterResult mono = shatter_check(grid, three, {-1, 1, 1});
  REQUIRE(mono.realized);
  for (size_t i = 0; i < 3; ++i) CHECK(eval1(*mono.witness, three[i]).sign() == (i ? 1 : -1));
  std::vector<int> failing;
  CHECK_FALSE(shatters(grid, three, &failing));
  CHECK((failing == std::vector<int>{1, -1, 1} || failing == std::vector<int>{-1, 1, -1}));
  CHECK(shatters(grid, Vec{three[0], three[1]}));

  Vec bp = bit_extract_shatter_points(4);
  CHECK(bp == Vec{Numeric::rational(2, 16), Numeric::rational(6, 16), Numeric::rational(10, 16),
                  Numeric::rational(14, 16)});
  CHECK(shatters(BitExtractFamily{4}, bp));
  CHECK(bit_extract_shatter_points(6).size() == 12);
  CHECK_THROWS(bit_extract_shatter_points(5));
  CHECK_THROWS(shatter_check(BitExtractFamily{4}, Vec{Numeric::rational(1, 16)}, {1}));
  CHECK_THROWS(shatter_check(ShallowFamily{2}, Vec{Numeric(1), Numeric(0)}, {1, 1}));
  CHECK_THROWS(shatter_check(ShallowFamily{2}, Vec{Numeric(0)}, {0}));
}

TEST_CASE("one-layer representability") {
  AffineFamily H{{line(1, 0, 0), line(0, 1, 0), line(1, 1, -1)}};
  auto g = [](const Vec& x) { return relu(x[0]) + relu(x[1]) - Numeric(2) * relu(x[0] + x[1] - Numeric(1)); };
  OneLayerResult ok = one_layer_representable(jump_spec_from_function(H, g));
  CHECK(ok.representable);
  CHECK(ok.a == Vec{Numeric(1), Numeric(1), Numeric(-2)});

  // the max of three planes bends along half-lines only
  AffineFamily P{{line(1, 0, 0), line(0, 1, 0), line(1, -1, 0)}};
  auto m = [](const Vec& x) { return max(Numeric(0), max(x[0], x[1])); };
  OneLayerResult bad = one_layer_representable(jump_spec_from_function(P, m));
  CHECK_FALSE(bad.representable);
  CHECK_FALSE(bad.reason.empty());

  // any shallow net is representable on its own arrangement, with a = output weights
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    ReluNet net = testutil::random_exact_net(rng, 2, {3});
    AffineFamily F = first_layer_hyperplanes(net);
    if (!general_position(F)) continue;
    auto f = [&](const Vec& x) { return eval(net, x)[0]; };
    OneLayerResult r = one_layer_representable(jump_spec_from_function(F, f));
    CHECK(r.representable);
  }
}

TEST_CASE("net_gradient") {
  std::mt19937_64 rng(26);
  const Numeric h = Numeric::pow2(-40);
  for (int trial = 0; trial < 30; ++trial) {
    ReluNet net = testutil::random_exact_net(rng, 3, {4, 3});
    Vec x = testutil::rat_vec(rng, 3, -2, 2, 1 << 10);
    Vec gr = net_gradient(net, x);
    REQUIRE(gr.size() == 3);
    const Numeric f0 = eval(net, x)[0];
    for (size_t i = 0; i < 3; ++i) {
      Vec y = x;
      y[i] += h;
      REQUIRE((eval(net, y)[0] - f0) / h == gr[i]);
    }
  }
  CHECK(net_gradient(hat01(), Vec{Numeric::rational(1, 4)}) == Vec{Numeric(2)});
  CHECK(net_gradient(hat01(), Vec{Numeric::rational(3, 4)}) == Vec{Numeric(-2)});
}

TEST_CASE("realization map") {
  Architecture a{2, 3, 2};
  CHECK(parameter_count(a) == param_count_formula(2, 1, 3, 2));
  std::vector<double> theta(parameter_count(a));
  for (size_t i = 0; i < theta.size(); ++i) theta[i] = 0.01 * double(i) - 0.1;
  ReluNet net = realize(a, theta);
  CHECK(net.width() == 3);
  CHECK(net.depth() == 2);
  CHECK(flatten_parameters(net) == theta);
  CHECK_THROWS(realize(a, std::vector<double>(3)));

  LipschitzReport rep = lipschitz_probe(Architecture{1, 3, 3}, {1, 2, 4, 8}, 20, 101, 3);
  REQUIRE(rep.max_ratio.size() == 4);
  CHECK(rep.radii == std::vector<double>{1, 2, 4, 8});
  CHECK(rep.pairs_per_radius == 20);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(std::isfinite(rep.max_ratio[i]));
    CHECK(rep.max_ratio[i] >= 0);
    if (i) CHECK(rep.max_ratio[i] >= rep.max_ratio[i - 1]);
  }
}

TEST_CASE("channel minima and the exact lift") {
  const Interval I{Numeric(0), Numeric(1)};
  const Box unit{{I}};
  std::vector<ReluNet> parts{hat01(), sawtooth(3), square_net(2)};
  SpecialNet s = add_by_depth(parts, Vec{Numeric(1), Numeric::rational(-1, 2), Numeric(3)}, unit);
  std::vector<Vec> minima = channel_minima_1d(s, I);
  REQUIRE(minima.size() == s.net().depth());
  // oracle: channel values from a forward pass that honours the roles, scanned
  // on a dyadic grid fine enough to contain every knot
  std::vector<Vec> seen(minima.size());
  for (long i = 0; i <= 1024; ++i) {
    Vec cur{Numeric::rational(i, 1024)};
    for (size_t l = 0; l < minima.size(); ++l) {
      const auto& lp = s.net().layer(l);
      Vec next(lp.weights.rows);
      for (size_t r = 0; r < lp.weights.rows; ++r) {
        Numeric v = lp.bias[r];
        for (size_t c = 0; c < lp.weights.cols; ++c) v += lp.weights(r, c) * cur[c];
        next[r] = s.roles()[r].relu_free ? v : relu(v);
      }
      if (i == 0) seen[l] = next;
      for (size_t r = 0; r < next.size(); ++r) seen[l][r] = min(seen[l][r], next[r]);
      cur = std::move(next);
    }
  }
  for (size_t l = 0; l < minima.size(); ++l)
    for (size_t r = 0; r < minima[l].size(); ++r) {
      INFO("layer ", l, " channel ", r, ": ", minima[l][r].str(), " vs ", seen[l][r].str());
      CHECK(minima[l][r] == seen[l][r]);
    }

  ReluNet lifted = special_to_relu_exact_1d(s, I);
  ReluNet plain = special_to_relu(s, unit);
  for (long i = 0; i <= 1000; ++i) {
    Vec t{Numeric::rational(i, 1000)};
    REQUIRE(eval(lifted, t) == eval(s, t));
    REQUIRE(eval(plain, t) == eval(s, t));
  }
}
