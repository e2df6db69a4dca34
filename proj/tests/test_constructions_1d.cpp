#include <doctest.h>

#include <algorithm>
#include <set>

#include "relucalc/analysis.hpp"
#include "relucalc/constructions_1d.hpp"
#include "test_util.hpp"

using namespace relucalc;
using testutil::rat;

namespace {

// piecewise linear interpolation of sorted data, constant outside
mpq_class lerp_data(const Vec& t, const Vec& y, const mpq_class& x) {
  if (x <= t.front().q()) return y.front().q();
  if (x >= t.back().q()) return y.back().q();
  size_t k = 1;
  while (t[k].q() < x) ++k;
  const mpq_class &t0 = t[k - 1].q(), &t1 = t[k].q();
  return y[k - 1].q() + (y[k].q() - y[k - 1].q()) * (x - t0) / (t1 - t0);
}

std::pair<Vec, Vec> sample_data(std::mt19937_64& rng, size_t D, long den) {
  std::set<long> picks;
  while (picks.size() < D) picks.insert(long(rng() % size_t(den + 1)));
  Vec t, y;
  for (long p : picks) {
    t.push_back(Numeric::rational(p, den));
    y.push_back(rat(rng, -3, 3, 8));
  }
  return {t, y};
}

Cpwl1D random_cpwl(std::mt19937_64& rng, size_t k) {
  std::set<long> picks;
  while (picks.size() < k) picks.insert(long(rng() % 201) - 100);
  Cpwl1D g;
  for (long p : picks) {
    g.breakpoints.push_back(Numeric::rational(p, 16));
    g.values.push_back(rat(rng, -2, 2, 4));
  }
  g.left_slope = rat(rng, -2, 2, 4);
  g.right_slope = rat(rng, -2, 2, 4);
  return g;
}

}  // namespace

TEST_CASE("hat") {
  const Numeric p1 = Numeric::rational(-1, 3), p2 = Numeric::rational(1, 5), p3 = Numeric(2);
  ReluNet h = hat(p1, p2, p3);
  CHECK(h.width() == 3);
  CHECK(h.depth() == 1);
  CHECK(eval1(h, p2) == Numeric(1));
  CHECK(eval1(h, p1).is_zero());
  CHECK(eval1(h, p3).is_zero());
  CHECK(eval1(h, Numeric(-5)).is_zero());
  CHECK(eval1(h, Numeric(7)).is_zero());
  // linear on both flanks
  CHECK(eval1(h, (p1 + p2) / Numeric(2)) == Numeric::rational(1, 2));
  CHECK(eval1(h, (p2 + p3) / Numeric(2)) == Numeric::rational(1, 2));
  CHECK_THROWS(hat(p1, p1, p3));
  CHECK_THROWS(hat(p3, p2, p1));
  CHECK(hat01().width() == 2);
}

TEST_CASE("sawtooth") {
  ReluNet s1 = sawtooth(1), h = hat01();
  for (long i = 0; i <= 1000; ++i) {
    Numeric t = Numeric::rational(i, 1000);
    REQUIRE(eval1(s1, t) == eval1(h, t));
  }
  for (size_t L = 1; L <= 8; ++L) {
    ReluNet s = sawtooth(L);
    CHECK(s.width() == 2);
    CHECK(s.depth() == L);
    Cpwl1D f = exact_cpwl_1d(s, Interval{0, 1});
    size_t inner = 0;
    for (const auto& t : f.kinks()) inner += t.sign() > 0 && t < Numeric(1);
    CHECK(inner == (size_t(1) << L) - 1);
    CHECK(eval1(s, Numeric::pow2(-long(L))) == Numeric(1));
  }
}

TEST_CASE("shallow_interpolant") {
  ReluNet n = shallow_interpolant(Vec{Numeric(0), Numeric::rational(1, 2), Numeric(1)}, Vec{Numeric(0), Numeric(1), Numeric(0)});
  CHECK(n.width() == 2);
  CHECK(eval1(n, Numeric::rational(1, 2)) == Numeric(1));
  CHECK(eval1(n, Numeric(1)).is_zero());
  ReluNet c = shallow_interpolant(Vec{Numeric(3)}, Vec{Numeric(-2)});
  CHECK(eval1(c, Numeric(100)) == Numeric(-2));
  CHECK_THROWS(shallow_interpolant(Vec{Numeric(0), Numeric(0)}, Vec{Numeric(1), Numeric(2)}));

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t W = 1 + trial % 7;
    auto [t, y] = sample_data(rng, W + 1, 64);
    ReluNet net = shallow_interpolant(t, y);
    CHECK(net.width() == W);
    CHECK(net.depth() == 1);
    for (size_t i = 0; i < t.size(); ++i) REQUIRE(eval1(net, t[i]) == y[i]);
  }
}

TEST_CASE("deep_interpolant") {
  std::mt19937_64 rng(22);
  ReluNet two = deep_interpolant(Vec{Numeric::rational(1, 4), Numeric::rational(3, 4)}, Vec{Numeric(1), Numeric(2)});
  CHECK(eval1(two, Numeric::rational(1, 2)) == Numeric::rational(3, 2));
  for (int trial = 0; trial < 20; ++trial) {
    const size_t D = 2 + trial % 10;
    auto [t, y] = sample_data(rng, D, 128);
    ReluNet net = deep_interpolant(t, y);
    CHECK(net.width() == 3);
    CHECK(net.depth() == D - 1);
    for (size_t i = 0; i < D; ++i) REQUIRE(eval1(net, t[i]) == y[i]);
    // linear spline between the data
    for (int s = 0; s < 20; ++s) {
      Numeric x = rat(rng, 0, 1, 1024);
      if (x < t.front() || x > t.back()) continue;
      REQUIRE(eval1(net, x).q() == lerp_data(t, y, x.q()));
    }
  }
  CHECK_THROWS(deep_interpolant(Vec{Numeric(0), Numeric(2)}, Vec{Numeric(1), Numeric(1)}));
  CHECK_THROWS(deep_interpolant(Vec{Numeric(0), Numeric(0)}, Vec{Numeric(1), Numeric(1)}));
}

TEST_CASE("cpwl_to_net") {
  ReluNet c = cpwl_to_net(Cpwl1D::constant(Numeric(4)));
  CHECK(c.width() == 1);
  CHECK(eval1(c, Numeric(-9)) == Numeric(4));
  ReluNet aff = cpwl_to_net(Cpwl1D::affine(Numeric(2), Numeric(1)));
  CHECK(eval1(aff, Numeric(-3)) == Numeric(-5));
  CHECK(eval1(aff, Numeric(3)) == Numeric(7));

  Cpwl1D h;
  h.breakpoints = {Numeric(0), Numeric(1), Numeric(3)};
  h.values = {Numeric(0), Numeric(1), Numeric(0)};
  ReluNet hn = cpwl_to_net(h);
  CHECK(hn.width() == 3);
  CHECK(hn.depth() == 1);
  CHECK(same_function(exact_cpwl_1d(hn), h));
  // zero right ray, nonzero left ray
  h.left_slope = Numeric(2);
  ReluNet hm = cpwl_to_net(h);
  CHECK(hm.width() == 3);
  CHECK(same_function(exact_cpwl_1d(hm), h));

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Cpwl1D g = random_cpwl(rng, 1 + trial % 6);
    if (trial % 4 == 1) g.left_slope = 0;
    if (trial % 4 == 2) g.right_slope = 0;
    ReluNet net = cpwl_to_net(g);
    const bool flat_ray = g.left_slope.is_zero() || g.right_slope.is_zero();
    CHECK(net.width() <= g.breakpoints.size() + (flat_ray ? 0 : 1));
    CHECK(same_function(exact_cpwl_1d(net), g));
  }
}

TEST_CASE("bit extraction, n = 4") {
  std::vector<int> eps;
  for (int j = 0; j < 4; ++j) eps.insert(eps.end(), {1, -1, 1, -1});
  BitExtractPlan plan = BitExtractPlan::from_signs(4, eps);
  // y from the partial sums
  std::vector<long> y{0};
  for (int e : eps) y.push_back(y.back() + e);
  CHECK(plan.y == y);
  ReluNet net = bit_extract_net(plan);
  CHECK(net.width() == 11);
  CHECK(net.depth() <= 15 * 4 + 2);
  for (size_t i = 0; i <= plan.N(); ++i) REQUIRE(eval1(net, plan.t(i)) == Numeric(y[i]));
  Cpwl1D f = exact_cpwl_1d(net, Interval{0, 1});
  for (size_t i = 0; i < plan.N(); ++i) {
    auto e = sup_abs_diff(f, Cpwl1D::constant(Numeric(y[i])), Interval{plan.t(i), plan.t(i + 1)});
    CHECK(e.value <= Numeric(1));
  }
  // block numbers: signed binary digits equal the block signs
  for (size_t j = 0; j < 4; ++j) {
    Numeric R = plan.Y[j];
    for (size_t nu = 0; nu < 4; ++nu) {
      const int bit = R.sign() >= 0 ? 1 : -1;
      CHECK(bit == eps[j * 4 + nu]);
      R = Numeric(2) * R - Numeric(bit);
    }
  }
  CHECK(plan.delta == Numeric::pow2(-16));
}

TEST_CASE("bit extraction plan validation") {
  // a block that does not return to zero
  std::vector<int> bad(16, 1);
  CHECK_THROWS(BitExtractPlan::from_signs(4, bad));
  CHECK_THROWS(BitExtractPlan::from_signs(3, std::vector<int>(9, 1)));
  CHECK_THROWS(BitExtractPlan::from_values(4, {0, 2, 0}));
}

TEST_CASE("bit extraction, random plans n = 6") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<int> eps;
    for (int j = 0; j < 6; ++j) {
      std::vector<int> blk{1, 1, 1, -1, -1, -1};
      std::shuffle(blk.begin(), blk.end(), rng);
      eps.insert(eps.end(), blk.begin(), blk.end());
    }
    BitExtractPlan plan = BitExtractPlan::from_signs(6, eps);
    ReluNet net = bit_extract_net(plan);
    CHECK(net.width() == 11);
    CHECK(net.depth() <= 15 * 6 + 2);
    for (size_t i = 0; i <= plan.N(); ++i) REQUIRE(eval1(net, plan.t(i)) == Numeric(plan.y[i]));
  }
}

TEST_CASE("yarotsky approximant") {
  ScalarOracle absmid = [](const Numeric& t) { return abs(t - Numeric::rational(1, 2)); };
  ReluNet net = yarotsky_approx(absmid, 8);
  CHECK(net.width() == 11);
  CHECK(net.depth() <= 16 * 8 + 2);
  Numeric worst = 0;
  for (long i = 0; i <= 10000; ++i) {
    Numeric t = Numeric::rational(i, 10000);
    worst = max(worst, abs(eval1(net, t) - absmid(t)));
  }
  CHECK(worst <= Numeric::rational(6, 64));

  ScalarOracle ident = [](const Numeric& t) { return t; };
  Cpwl1D s0 = coarse_interpolant(ident, 4);
  for (long i = 0; i <= 16; ++i) CHECK(s0(Numeric::rational(i, 16)) == Numeric::rational(i, 16));
  ReluNet id = yarotsky_approx(ident, 4);
  for (long i = 0; i <= 64; ++i) {
    Numeric t = Numeric::rational(i, 64);
    CHECK(abs(eval1(id, t) - t) <= Numeric::rational(6, 16));
  }
  CHECK_THROWS(yarotsky_approx(ident, 5));
  CHECK_THROWS(yarotsky_approx(ident, 2));
}

TEST_CASE("yarotsky plan keeps the residual within 2/N") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    // random Lip-1 CPwL target
    Vec t{Numeric(0)}, y{rat(rng, -1, 1, 8)};
    for (int k = 1; k <= 6; ++k) t.push_back(Numeric::rational(k, 6));
    for (size_t k = 1; k < t.size(); ++k) y.push_back(y.back() + rat(rng, -1, 1, 32) * (t[k] - t[k - 1]));
    Cpwl1D g = Cpwl1D::interpolate(t, y);
    ScalarOracle f = [g](const Numeric& s) { return g(s); };
    const size_t n = 4 + 2 * (trial % 3);
    BitExtractPlan plan = yarotsky_plan(f, n);
    Cpwl1D s0 = coarse_interpolant(f, n);
    const Numeric N = Numeric(long(plan.N()));
    for (size_t i = 0; i <= plan.N(); ++i) {
      Numeric R = f(plan.t(i)) - s0(plan.t(i));
      REQUIRE(abs(R - Numeric(2) * Numeric(plan.y[i]) / N) <= Numeric(2) / N);
    }
  }
}
