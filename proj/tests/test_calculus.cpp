#include <doctest.h>

#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_multid.hpp"
#include "test_util.hpp"

using namespace relucalc;
using testutil::rat;

namespace {

Numeric H(const Numeric& t) { return Numeric(2) * relu(t) - Numeric(4) * relu(t - Numeric::rational(1, 2)); }

Numeric H_iter(Numeric t, size_t k) {
  for (size_t i = 0; i < k; ++i) t = H(t);
  return t;
}

Vec grid_point(size_t i, size_t n) { return Vec{Numeric::rational(long(i), long(n))}; }

}  // namespace

TEST_CASE("parallelize_sum") {
  ReluNet zero = parallelize_sum({hat01(), hat01()}, Vec{Numeric(1), Numeric(-1)});
  CHECK(zero.width() == 4);
  for (size_t i = 0; i <= 1000; ++i) REQUIRE(eval(zero, grid_point(i, 1000))[0].is_zero());
  ReluNet two = parallelize_sum({sawtooth(2), sawtooth(2)}, Vec{Numeric(1), Numeric(1)});
  CHECK(eval1(two, Numeric::rational(1, 4)) == Numeric(2));
  CHECK_THROWS(parallelize_sum({sawtooth(2), sawtooth(3)}, Vec{Numeric(1), Numeric(1)}));
  CHECK_THROWS(parallelize_sum({hat01(), zero_net(2)}, Vec{Numeric(1), Numeric(1)}));
}

TEST_CASE("concatenate_compose") {
  ReluNet c = concatenate_compose(hat01(), hat01());
  CHECK(c.depth() == 2);
  ReluNet s = sawtooth(2);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    Numeric t = rat(rng, -1, 2, 1 << 12);
    REQUIRE(eval1(c, t) == eval1(s, t));
    REQUIRE(eval1(c, t) == H_iter(t, 2));
  }
  ReluNet two_out = testutil::random_exact_net(rng, 1, {3}, 2);
  ReluNet three_in = testutil::random_exact_net(rng, 3, {2});
  CHECK_THROWS(concatenate_compose(three_in, two_out));

  // property: compose(f, g)(x) = f(g(x)) exactly, random shapes
  for (int trial = 0; trial < 30; ++trial) {
    ReluNet g = testutil::random_exact_net(rng, 2, {1 + rng() % 4, 1 + rng() % 3}, 3);
    ReluNet f = testutil::random_exact_net(rng, 3, {1 + rng() % 4});
    ReluNet fg = concatenate_compose(f, g);
    CHECK(fg.depth() == f.depth() + g.depth());
    for (int k = 0; k < 20; ++k) {
      Vec x = testutil::rat_vec(rng, 2, -2, 2, 64);
      REQUIRE(eval(fg, x) == eval(f, eval(g, x)));
    }
  }
}

TEST_CASE("extend_depth keeps values") {
  std::mt19937_64 rng(2);
  ReluNet net = testutil::random_exact_net(rng, 2, {3});
  ReluNet e = extend_depth(net, 4);
  CHECK(e.depth() == 4);
  for (int k = 0; k < 50; ++k) {
    Vec x = testutil::rat_vec(rng, 2, -3, 3, 64);
    CHECK(eval(e, x) == eval(net, x));
  }
}

TEST_CASE("add_by_depth") {
  const Box unit = Box::cube(1, 0, 1);
  SpecialNet single = add_by_depth({sawtooth(3)}, Vec{Numeric::rational(3, 2)}, unit);
  for (size_t i = 0; i <= 1000; ++i)
    REQUIRE(eval(single, grid_point(i, 1000))[0] == Numeric::rational(3, 2) * H_iter(grid_point(i, 1000)[0], 3));

  SpecialNet two = add_by_depth({sawtooth(2), sawtooth(3)}, Vec{Numeric(1), Numeric(1)}, unit);
  CHECK(two.net().width() == 2 + 1 + 1);
  CHECK(two.net().depth() == 5);
  for (size_t i = 0; i <= 1000; ++i) {
    Numeric t = grid_point(i, 1000)[0];
    REQUIRE(eval(two, Vec{t})[0] == H_iter(t, 2) + H_iter(t, 3));
  }
  CHECK_THROWS(add_by_depth({sawtooth(2)}, Vec{Numeric(1)}, Box::unbounded(1)));

  // agrees with parallelize_sum on random compatible nets
  std::mt19937_64 rng(4);
  const Box box = Box::cube(2, -1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ReluNet> nets;
    for (int j = 0; j < 3; ++j) nets.push_back(testutil::random_exact_net(rng, 2, {3, 3}));
    Vec alpha = testutil::rat_vec(rng, 3, -2, 2, 4);
    ReluNet par = parallelize_sum(nets, alpha);
    SpecialNet deep = add_by_depth(nets, alpha, box);
    CHECK(deep.net().width() == 3 + 2 + 1);
    CHECK(deep.net().depth() == 6);
    ReluNet conv = special_to_relu(deep, box);
    for (int k = 0; k < 100; ++k) {
      Vec x = testutil::rat_vec(rng, 2, -1, 1, 128);
      REQUIRE(eval(deep, x) == eval(par, x));
      REQUIRE(eval(conv, x) == eval(par, x));
    }
  }
}

TEST_CASE("shift_dilate and precompose") {
  ReluNet h = hat01();
  ReluNet same = shift_dilate(h, Numeric(1), Vec{Numeric(0)});
  ReluNet twice = shift_dilate(h, Numeric(2), Vec{Numeric(0)});
  CHECK(eval1(twice, Numeric::rational(1, 4)) == Numeric(1));
  CHECK(stats(twice).param_count == stats(h).param_count);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    Numeric t = rat(rng, -2, 2, 256);
    CHECK(eval1(same, t) == eval1(h, t));
    CHECK(eval1(twice, t) == H(Numeric(2) * t));
  }
  ReluNet net = testutil::random_exact_net(rng, 2, {3, 2});
  Numeric a = Numeric::rational(-3, 2);
  Vec c{Numeric::rational(1, 3), Numeric(2)};
  ReluNet sd = shift_dilate(net, a, c);
  AffineMap m;
  m.A = Matrix(2, 3);
  for (auto& v : m.A.a) v = rat(rng, -2, 2, 8);
  m.b = testutil::rat_vec(rng, 2, -1, 1, 8);
  ReluNet pc = precompose(net, m);
  CHECK(pc.input_dim() == 3);
  for (int k = 0; k < 100; ++k) {
    Vec x = testutil::rat_vec(rng, 2, -2, 2, 64);
    Vec ax{a * x[0] + c[0], a * x[1] + c[1]};
    REQUIRE(eval(sd, x) == eval(net, ax));
    Vec z = testutil::rat_vec(rng, 3, -2, 2, 64);
    Vec Az = m.b;
    for (size_t i = 0; i < 2; ++i)
      for (size_t j = 0; j < 3; ++j) Az[i] += m.A(i, j) * z[j];
    REQUIRE(eval(pc, z) == eval(net, Az));
  }
  ReluNet so = scale_output(net, Numeric(-5), Numeric::rational(1, 7));
  Vec x{Numeric::rational(1, 2), Numeric(-1)};
  CHECK(eval(so, x)[0] == Numeric(-5) * eval(net, x)[0] + Numeric::rational(1, 7));
}

TEST_CASE("power_sum") {
  Vec alpha{Numeric::rational(1, 4), Numeric::rational(1, 16), Numeric::rational(1, 64)};
  ReluNet p = power_sum(hat01(), alpha);
  CHECK(eval1(p, Numeric::rational(1, 2)) == Numeric::rational(1, 4));
  CHECK(p.width() == hat01().width() + 1);
  CHECK(p.depth() == 3 * hat01().depth());
  for (size_t i = 0; i <= 1000; ++i) {
    Numeric t = grid_point(i, 1000)[0];
    Numeric want = 0;
    for (size_t k = 0; k < alpha.size(); ++k) want += alpha[k] * H_iter(t, k + 1);
    REQUIRE(eval1(p, t) == want);
  }
  ReluNet one = power_sum(hat01(), Vec{Numeric(3)});
  for (size_t i = 0; i <= 100; ++i) {
    Numeric t = grid_point(i, 100)[0];
    REQUIRE(eval1(one, t) == Numeric(3) * H(t));
  }
}

TEST_CASE("translate_dilate_sum") {
  const Box R = Box::cube(2, 0, 1);
  // a 2-d tent with peak at the centre of the unit square
  std::vector<Vec> simplex{{Numeric(0), Numeric(0)}, {Numeric(1), Numeric(0)}, {Numeric(0), Numeric(1)}};
  ReluNet phi = tent_net(simplex, Vec{Numeric::rational(1, 4), Numeric::rational(1, 4)});
  TranslateDilateTerm id{AffineMap::scaled(2, Numeric(1), Vec{Numeric(0), Numeric(0)}), Numeric(1)};
  ReluNet one = translate_dilate_sum(phi, {id}, R);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 1000; ++k) {
    Vec x = testutil::rat_vec(rng, 2, 0, 1, 256);
    REQUIRE(eval(one, x) == eval(phi, x));
  }
  std::vector<TranslateDilateTerm> terms;
  for (int j = 0; j < 3; ++j) {
    Vec c = testutil::rat_vec(rng, 2, -1, 1, 4);
    terms.push_back({AffineMap::scaled(2, rat(rng, 1, 3, 2), c), rat(rng, -2, 2, 3)});
  }
  ReluNet sum = translate_dilate_sum(phi, terms, R);
  CHECK(sum.width() == 2 + 1 + phi.width());
  CHECK(sum.depth() == 3 * phi.depth());
  for (size_t i = 0; i <= 20; ++i)
    for (size_t j = 0; j <= 20; ++j) {
      Vec x{Numeric::rational(long(i), 20), Numeric::rational(long(j), 20)};
      Numeric want = 0;
      for (const auto& t : terms) {
        Vec y = t.map.b;
        for (size_t r = 0; r < 2; ++r)
          for (size_t c = 0; c < 2; ++c) y[r] += t.map.A(r, c) * x[c];
        want += t.coefficient * eval(phi, y)[0];
      }
      REQUIRE(eval(sum, x)[0] == want);
    }
  AffineMap bad;
  bad.A = Matrix(3, 2);
  bad.b = Vec(3);
  CHECK_THROWS(translate_dilate_sum(phi, {{bad, Numeric(1)}}, R));
}
