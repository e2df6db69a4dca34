#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_multid.hpp"
#include "test_util.hpp"

using namespace relucalc;
using testutil::rat;

namespace {

AffineFamily random_family(std::mt19937_64& rng, size_t m, size_t d) {
  AffineFamily f;
  for (size_t j = 0; j < m; ++j) f.members.push_back({testutil::rat_vec(rng, d, -2, 2, 8), rat(rng, -1, 1, 8)});
  return f;
}

Numeric fold(const AffineFamily& f, const Vec& x, MinMax op) {
  Numeric v = f.members[0](x);
  for (const auto& g : f.members) v = op == MinMax::Max ? max(v, g(x)) : min(v, g(x));
  return v;
}

size_t ceil_log2(size_t m) {
  size_t k = 0;
  while ((size_t(1) << k) < m) ++k;
  return k;
}

// P1 interpolation on the Kuhn grid whose simplices run along the diagonal from
// (1, 0, ..., 0) to (0, 1, ..., 1): reflect axis 0 inside each cube, then use
// the standard sorted-coordinate (Freudenthal) weights
Numeric kuhn_interp(const KuhnGrid& g, const Vec& values, const Vec& x) {
  const size_t d = g.d;
  const long n = long(g.n);
  std::vector<long> cube(d);
  Vec u(d);
  for (size_t i = 0; i < d; ++i) {
    Numeric s = x[i] * Numeric(n);
    long c = long(floor(s).to_double());
    if (c == n) c = n - 1;
    cube[i] = c;
    u[i] = s - Numeric(c);
  }
  u[0] = Numeric(1) - u[0];
  std::vector<size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](size_t a, size_t b) { return u[b] < u[a]; });
  auto value_at = [&](const std::vector<long>& local) {
    std::vector<long> v(d);
    for (size_t i = 0; i < d; ++i) v[i] = cube[i] + (i == 0 ? 1 - local[i] : local[i]);
    size_t idx = 0;
    for (size_t i = 0; i < d; ++i) idx = idx * size_t(n + 1) + size_t(v[i]);
    return values[idx];
  };
  std::vector<long> local(d, 0);
  Numeric total = (Numeric(1) - u[perm[0]]) * value_at(local);
  for (size_t k = 0; k < d; ++k) {
    local[perm[k]] = 1;
    Numeric w = k + 1 < d ? u[perm[k]] - u[perm[k + 1]] : u[perm[k]];
    total += w * value_at(local);
  }
  return total;
}

}  // namespace

TEST_CASE("minmax_affine") {
  AffineFamily f{{{Vec{Numeric(1)}, Numeric(0)}, {Vec{Numeric(-1)}, Numeric(1)}}};
  ReluNet mx = minmax_affine(f, MinMax::Max, MinMaxStrategy::Tournament, false);
  CHECK(eval1(mx, Numeric::rational(1, 2)) == Numeric::rational(1, 2));
  CHECK_THROWS(minmax_affine(AffineFamily{}, MinMax::Max, MinMaxStrategy::Tournament, false));

  std::mt19937_64 rng(41);
  for (size_t d = 1; d <= 3; ++d)
    for (size_t m = 1; m <= 8; ++m) {
      AffineFamily fam = random_family(rng, m, d);
      const Box box = Box::cube(d, 0, 1);
      for (MinMax op : {MinMax::Min, MinMax::Max}) {
        ReluNet t = minmax_affine(fam, op, MinMaxStrategy::Tournament, false);
        ReluNet r = minmax_affine(fam, op, MinMaxStrategy::Recursive, false, box);
        ReluNet tr = minmax_affine(fam, op, MinMaxStrategy::Tournament, true);
        if (m >= 2) {
          CHECK(t.width() == 3 * (size_t(1) << (ceil_log2(m) - 1)));
          CHECK(t.depth() == ceil_log2(m));
          CHECK(r.width() == d + 1);
          CHECK(r.depth() == m - 1);
          CHECK(tr.depth() == t.depth() + 1);
        }
        for (int i = 0; i < 60; ++i) {
          Vec x = testutil::rat_vec(rng, d, 0, 1, 1 << 10);
          const Numeric want = fold(fam, x, op);
          REQUIRE(eval(t, x)[0] == want);
          REQUIRE(eval(r, x)[0] == want);
          REQUIRE(eval(tr, x)[0] == relu(want));
          // tournament is exact on all of R^d
          Vec far = testutil::rat_vec(rng, d, -50, 50, 4);
          REQUIRE(eval(t, far)[0] == fold(fam, far, op));
        }
      }
    }
  AffineFamily five = random_family(rng, 5, 2);
  ReluNet t5 = minmax_affine(five, MinMax::Min, MinMaxStrategy::Tournament, false);
  CHECK(t5.width() == 12);
  CHECK(t5.depth() == 3);
}

TEST_CASE("minmax_outputs") {
  std::mt19937_64 rng(42);
  ReluNet a = testutil::random_exact_net(rng, 3, {4, 4});
  ReluNet same = minmax_outputs({a, a}, MinMax::Min, NetMinMaxStrategy::Parallel);
  for (int i = 0; i < 1000; ++i) {
    Vec x = testutil::rat_vec(rng, 3, 0, 1, 256);
    REQUIRE(eval(same, x) == eval(a, x));
  }
  std::vector<ReluNet> nets;
  for (int j = 0; j < 3; ++j) nets.push_back(testutil::random_exact_net(rng, 3, {4, 4}));
  const Box box = Box::cube(3, 0, 1);
  ReluNet par = minmax_outputs(nets, MinMax::Max, NetMinMaxStrategy::Parallel);
  ReluNet deep = minmax_outputs(nets, MinMax::Min, NetMinMaxStrategy::Deep, box);
  CHECK(par.width() == 12);
  CHECK(par.depth() == 2 + 2);
  CHECK(deep.width() == 4 + 3 + 1);
  CHECK(deep.depth() == 6 + 2);
  for (int i = 0; i < 2000; ++i) {
    Vec x = testutil::rat_vec(rng, 3, 0, 1, 1 << 12);
    Numeric hi = eval(nets[0], x)[0], lo = hi;
    for (const auto& n : nets) {
      hi = max(hi, eval(n, x)[0]);
      lo = min(lo, eval(n, x)[0]);
    }
    REQUIRE(eval(par, x)[0] == hi);
    REQUIRE(eval(deep, x)[0] == lo);
  }
  CHECK_THROWS(minmax_outputs({testutil::random_exact_net(rng, 3, {4}), nets[0]}, MinMax::Max,
                              NetMinMaxStrategy::Parallel));
  CHECK_THROWS(minmax_outputs({testutil::random_exact_net(rng, 3, {2, 5}), nets[0]}, MinMax::Max,
                              NetMinMaxStrategy::Deep, box));
}

TEST_CASE("tent_net") {
  // d = 1 reproduces hat01 on [0, 1] and vanishes outside
  ReluNet t1 = tent_net({Vec{Numeric(0)}, Vec{Numeric(1)}}, Vec{Numeric::rational(1, 2)});
  for (long i = -100; i <= 300; ++i) {
    Numeric t = Numeric::rational(i, 200);
    REQUIRE(eval1(t1, t) == (i >= 0 && i <= 200 ? eval1(hat01(), t) : Numeric(0)));
  }
  std::vector<Vec> simplex{{Numeric(0), Numeric(0)}, {Numeric(2), Numeric(0)}, {Numeric(0), Numeric(1)}};
  Vec xs{Numeric::rational(1, 2), Numeric::rational(1, 4)};
  ReluNet t2 = tent_net(simplex, xs);
  CHECK(eval(t2, xs)[0] == Numeric(1));
  CHECK(t2.width() == 6);
  CHECK(t2.depth() == 3);
  std::mt19937_64 rng(43);
  for (int i = 0; i < 1000; ++i) {
    Vec x = testutil::rat_vec(rng, 2, -2, 3, 64);
    const bool inside = x[0].sign() >= 0 && x[1].sign() >= 0 && x[0] / Numeric(2) + x[1] <= Numeric(1);
    const Numeric v = eval(t2, x)[0];
    REQUIRE(v.sign() >= 0);
    if (!inside) REQUIRE(v.is_zero());
  }
  // vertices map to zero, x* to one
  for (const auto& v : simplex) CHECK(eval(t2, v)[0].is_zero());
  CHECK_THROWS(tent_net(simplex, Vec{Numeric(5), Numeric(5)}));
  CHECK_THROWS(tent_net({Vec{Numeric(0), Numeric(0)}, Vec{Numeric(1), Numeric(1)}, Vec{Numeric(2), Numeric(2)}},
                        Vec{Numeric(1), Numeric(1)}));
}

TEST_CASE("cpwl_compile") {
  std::mt19937_64 rng(44);
  for (size_t d = 1; d <= 3; ++d) {
    ConvexPieceDecomposition dec;
    for (int j = 0; j < 3; ++j) dec.terms.push_back({j % 2 ? -1 : 1, random_family(rng, 1 + rng() % (d + 1), d)});
    const Box box = Box::cube(d, 0, 1);
    ReluNet sh = cpwl_compile(dec, CpwlMode::Shallow);
    ReluNet dp = cpwl_compile(dec, CpwlMode::Deep, box);
    CHECK(sh.depth() == ceil_log2(d + 1));
    CHECK(sh.width() == 3 * 3 * (size_t(1) << (ceil_log2(d + 1) - 1)));
    CHECK(dp.width() == d + 2);
    CHECK(dp.depth() <= 3 * d);
    for (int i = 0; i < 500; ++i) {
      Vec x = testutil::rat_vec(rng, d, 0, 1, 1 << 10);
      REQUIRE(eval(sh, x)[0] == dec(x));
      REQUIRE(eval(dp, x)[0] == dec(x));
      Vec far = testutil::rat_vec(rng, d, -20, 20, 8);
      REQUIRE(eval(sh, far)[0] == dec(far));
    }
  }
  // a single positive term is the tournament max
  ConvexPieceDecomposition one;
  one.terms.push_back({1, random_family(rng, 3, 2)});
  ReluNet c = cpwl_compile(one, CpwlMode::Shallow);
  ReluNet m = minmax_affine(one.terms[0].family, MinMax::Max, MinMaxStrategy::Tournament, false);
  for (int i = 0; i < 200; ++i) {
    Vec x = testutil::rat_vec(rng, 2, -3, 3, 64);
    REQUIRE(eval(c, x) == eval(m, x));
  }
  CHECK_THROWS(cpwl_compile(ConvexPieceDecomposition{}, CpwlMode::Shallow));
  CHECK_THROWS(cpwl_compile(one, CpwlMode::Deep, Box::unbounded(2)));
}

TEST_CASE("Kuhn grid") {
  for (size_t d = 1; d <= 3; ++d)
    for (size_t n = 1; n <= 3; ++n) {
      KuhnGrid g{d, n};
      size_t cubes = 1, fact = 1, verts = 1;
      for (size_t i = 0; i < d; ++i) {
        cubes *= n;
        fact *= i + 1;
        verts *= n + 1;
      }
      CHECK(g.vertex_count() == verts);
      CHECK(g.vertices().size() == verts);
      CHECK(g.simplices().size() == cubes * fact);
    }
  // simplices cover the square with the expected diagonal in every cube
  KuhnGrid g{2, 1};
  for (const auto& s : g.simplices()) {
    bool has10 = false, has01 = false;
    for (const auto& v : s) {
      has10 = has10 || (v[0] == 1 && v[1] == 0);
      has01 = has01 || (v[0] == 0 && v[1] == 1);
    }
    CHECK(has10);
    CHECK(has01);
  }
}

TEST_CASE("FEM nodal basis") {
  KuhnGrid g{2, 2};
  const auto verts = g.vertices();
  std::vector<ReluNet> phi;
  for (const auto& v : verts) phi.push_back(fem_basis_net(g, v));
  for (size_t a = 0; a < verts.size(); ++a)
    for (size_t b = 0; b < verts.size(); ++b) REQUIRE(eval(phi[a], g.point(verts[b]))[0] == Numeric(a == b ? 1 : 0));

  std::mt19937_64 rng(45);
  for (int i = 0; i < 1000; ++i) {
    Vec x = testutil::rat_vec(rng, 2, 0, 1, 1 << 8);
    Numeric sum = 0;
    for (size_t a = 0; a < verts.size(); ++a) {
      const Numeric v = eval(phi[a], x)[0];
      REQUIRE(v.sign() >= 0);
      REQUIRE(v == fem_basis_ref(g, verts[a], x));
      sum += v;
    }
    REQUIRE(sum == Numeric(1));
  }
  CHECK_THROWS(fem_basis_net(g, {3, 0}));

  // combinations against an independent Kuhn interpolation
  for (size_t d = 1; d <= 3; ++d) {
    KuhnGrid h{d, 2};
    Vec values = testutil::rat_vec(rng, h.vertex_count(), -2, 2, 8);
    ReluNet par = fem_combination(h, values, FemMode::Parallel);
    ReluNet deep = fem_combination(h, values, FemMode::Deep);
    CHECK(deep.width() == d + 2);
    const auto hv = h.vertices();
    for (size_t k = 0; k < hv.size(); ++k) {
      REQUIRE(eval(par, h.point(hv[k]))[0] == values[k]);
      REQUIRE(eval(deep, h.point(hv[k]))[0] == values[k]);
    }
    for (int i = 0; i < 300; ++i) {
      Vec x = testutil::rat_vec(rng, d, 0, 1, 1 << 8);
      const Numeric want = kuhn_interp(h, values, x);
      REQUIRE(eval(par, x)[0] == want);
      REQUIRE(eval(deep, x)[0] == want);
    }
  }
}

TEST_CASE("ridge_interpolant") {
  RidgeResult one = ridge_interpolant({Vec{Numeric(1), Numeric(2)}}, Vec{Numeric(7)});
  CHECK(eval(one.net, Vec{Numeric(-4), Numeric(9)})[0] == Numeric(7));

  std::vector<Vec> pts{{Numeric(0), Numeric(0)}, {Numeric(1), Numeric(0)}, {Numeric(0), Numeric(1)}};
  RidgeResult r = ridge_interpolant(pts, Vec{Numeric(1), Numeric(2), Numeric(3)});
  for (size_t i = 0; i < 3; ++i) CHECK(eval(r.net, pts[i])[0] == Numeric(long(i) + 1));
  CHECK(r.net.width() == 3);
  CHECK(r.net.depth() == 2);

  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t d = 2 + trial % 3, D = 3 + trial;
    std::vector<Vec> p;
    // integer lattice points, many sharing projections onto the axes
    while (p.size() < D) {
      Vec x;
      for (size_t i = 0; i < d; ++i) x.push_back(Numeric(long(rng() % 4)));
      if (std::find(p.begin(), p.end(), x) == p.end()) p.push_back(x);
    }
    Vec y = testutil::rat_vec(rng, D, -5, 5, 4);
    RidgeResult rr = ridge_interpolant(p, y);
    CHECK(rr.net.depth() == D - 1);
    for (size_t i = 0; i < D; ++i) REQUIRE(eval(rr.net, p[i])[0] == y[i]);
  }
  CHECK_THROWS(ridge_interpolant(pts = {Vec{Numeric(1), Numeric(1)}, Vec{Numeric(1), Numeric(1)}}, Vec{Numeric(0), Numeric(1)}));
}
