#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_product.hpp"
#include "relucalc/serialize.hpp"
#include "test_util.hpp"

using namespace relucalc;
using testutil::rat;

namespace {

bool same_structure(const ReluNet& a, const ReluNet& b) {
  if (a.input_dim() != b.input_dim() || a.depth() != b.depth()) return false;
  for (size_t l = 0; l <= a.depth(); ++l) {
    const auto &x = a.layer(l), &y = b.layer(l);
    if (x.weights.rows != y.weights.rows || x.weights.cols != y.weights.cols) return false;
    for (size_t i = 0; i < x.weights.a.size(); ++i)
      if (x.weights.a[i] != y.weights.a[i] || x.weights.a[i].mode() != y.weights.a[i].mode()) return false;
    for (size_t i = 0; i < x.bias.size(); ++i)
      if (x.bias[i] != y.bias[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("numeric: exact and float arithmetic") {
  Numeric a = Numeric::rational(1, 3), b = Numeric::rational(1, 6);
  CHECK(a + b == Numeric::rational(1, 2));
  CHECK((a * b).str() == "1/18");
  CHECK(Numeric(4).str() == "4");
  CHECK(Numeric::parse("-7/21") == Numeric::rational(-1, 3));
  CHECK(Numeric::parse("5").is_exact());
  CHECK_FALSE(Numeric::parse("0.5").is_exact());
  CHECK_FALSE((a + Numeric::real(0.5)).is_exact());
  CHECK(Numeric::pow2(-3) == Numeric::rational(1, 8));
  CHECK(Numeric::exact_from_double(0.1).is_exact());
  CHECK(Numeric::exact_from_double(0.1).to_double() == 0.1);
  CHECK(floor(Numeric::rational(-1, 2)) == Numeric(-1));
  CHECK(ceil(Numeric::rational(1, 2)) == Numeric(1));
  CHECK(relu(Numeric(-3)).is_zero());
  Numeric r;
  CHECK(exact_sqrt(Numeric::rational(9, 4), r));
  CHECK(r == Numeric::rational(3, 2));
  CHECK_FALSE(exact_sqrt(Numeric(2), r));
}

TEST_CASE("eval: worked examples") {
  CHECK(eval1(hat01(), Numeric::rational(1, 2)) == Numeric(1));
  CHECK(eval1(square_net(3), Numeric::rational(1, 2)) == Numeric::rational(1, 4));
  const ReluNet z = zero_net(3, 2, 2);
  const Vec x{Numeric(1), Numeric(-2), Numeric::rational(5, 7)};
  CHECK(eval(z, x)[0].is_zero());
  for (const auto& layer : preactivations(z, x))
    for (const auto& v : layer) CHECK(v.is_zero());

  auto pre = preactivations(hat01(), Vec{Numeric::rational(3, 4)});
  REQUIRE(pre.size() == 1);
  CHECK(pre[0] == Vec{Numeric::rational(3, 4), Numeric::rational(1, 4)});
  auto pre2 = preactivations(sawtooth(2), Vec{Numeric::rational(1, 4)});
  REQUIRE(pre2.size() == 2);
  CHECK(pre2[1] == Vec{Numeric::rational(1, 2), Numeric(0)});
}

TEST_CASE("eval: agrees with the reference forward pass on random nets") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t d = 1 + trial % 3;
    std::vector<size_t> widths(1 + trial % 4);
    for (auto& w : widths) w = 1 + rng() % 5;
    ReluNet net = testutil::random_exact_net(rng, d, widths, 1 + trial % 2);
    for (int s = 0; s < 5; ++s) {
      Vec x = testutil::rat_vec(rng, d, -2, 2, 16);
      Vec y = eval(net, x);
      auto ref = testutil::reference_eval(net, testutil::to_mpq(x));
      REQUIRE(y.size() == ref.size());
      for (size_t i = 0; i < y.size(); ++i) CHECK(y[i].q() == ref[i]);
      FloatEvaluator fe(net);
      auto yf = fe(to_doubles(x));
      for (size_t i = 0; i < y.size(); ++i) CHECK(yf[i] == doctest::Approx(y[i].to_double()).epsilon(1e-12));
    }
  }
}

TEST_CASE("stats and parameter count") {
  CHECK(param_count_formula(2, 1, 3, 2) == 25);
  CHECK(param_count_formula(1, 1, 2, 1) == 7);
  CHECK(stats(hat01()).param_count == 7);
  for (size_t L = 1; L <= 6; ++L) {
    NetStats s = stats(sawtooth(L));
    CHECK(s.width == 2);
    CHECK(s.depth == L);
    CHECK(s.param_count == param_count_formula(1, 1, 2, L));
  }
  // nonuniform widths count as the constant-width net after padding
  std::mt19937_64 rng(3);
  ReluNet net = testutil::random_exact_net(rng, 3, {4, 2, 5}, 2);
  ReluNet padded = pad_to_width(net, 5);
  size_t stored = 0;
  for (const auto& lp : padded.layers()) stored += lp.weights.a.size() + lp.bias.size();
  CHECK(stored == (5 * 4) + (5 * 6) + (5 * 6) + (2 * 6));
  CHECK(stats(net).param_count == stored);
  CHECK(stats(net).width == 5);
}

TEST_CASE("pad_to_width keeps the function") {
  const ReluNet h = hat01();
  const ReluNet p = pad_to_width(h, 4);
  CHECK(p.width() == 4);
  CHECK(stats(p).param_count == param_count_formula(1, 1, 4, 1));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    Numeric t = rat(rng, -3, 3, 97);
    CHECK(eval1(p, t) == eval1(h, t));
  }
  CHECK_THROWS(pad_to_width(h, 1));
  // random deep nets
  for (int trial = 0; trial < 20; ++trial) {
    ReluNet net = testutil::random_exact_net(rng, 2, {1 + rng() % 3, 1 + rng() % 3});
    ReluNet q = pad_to_width(net, 6);
    CHECK(q.width() == 6);
    for (int s = 0; s < 10; ++s) {
      Vec x = testutil::rat_vec(rng, 2, -2, 2, 32);
      CHECK(eval(q, x) == eval(net, x));
    }
  }
}

TEST_CASE("normalize_first_layer") {
  // neuron w = (3, 4), b = 5 feeding the output with weight 2
  LayerParams l1{Matrix(1, 2), Vec{Numeric(5)}}, out{Matrix(1, 1), Vec{Numeric(0)}};
  l1.weights(0, 0) = 3;
  l1.weights(0, 1) = 4;
  out.weights(0, 0) = 2;
  ReluNet net(2, {l1, out});
  ReluNet n = normalize_first_layer(net);
  CHECK(n.layer(0).weights(0, 0) == Numeric::rational(3, 5));
  CHECK(n.layer(0).weights(0, 1) == Numeric::rational(4, 5));
  CHECK(n.layer(0).bias[0] == Numeric(1));
  CHECK(n.layer(1).weights(0, 0) == Numeric(10));
  CHECK(normalize_first_layer(n).layer(0).weights(0, 0) == Numeric::rational(3, 5));

  // a zero row contributes the constant (b)+ downstream
  LayerParams z{Matrix(2, 1), Vec{Numeric(3), Numeric(-1)}}, o{Matrix(1, 2), Vec{Numeric(1)}};
  z.weights(1, 0) = 1;
  o.weights(0, 0) = 2;
  o.weights(0, 1) = 1;
  ReluNet zn(1, {z, o});
  ReluNet nz = normalize_first_layer(zn);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 30; ++i) {
    Numeric t = rat(rng, -4, 4, 16);
    CHECK(eval1(nz, t) == eval1(zn, t));
  }

  // property: random exact nets keep their values (float rows may appear)
  for (int trial = 0; trial < 20; ++trial) {
    ReluNet net2 = testutil::random_exact_net(rng, 2, {3, 2});
    ReluNet m = normalize_first_layer(net2);
    for (int s = 0; s < 10; ++s) {
      Vec x = testutil::rat_vec(rng, 2, -2, 2, 16);
      CHECK(eval(m, x)[0].to_double() == doctest::Approx(eval(net2, x)[0].to_double()).epsilon(1e-12));
    }
  }
}

TEST_CASE("special_to_relu") {
  std::vector<ReluNet> parts{hat01(), sawtooth(3), square_net(2)};
  Vec alpha{Numeric(2), Numeric::rational(-1, 3), Numeric(5)};
  const Box unit = Box::cube(1, 0, 1);
  SpecialNet s = add_by_depth(parts, alpha, unit);
  CHECK(s.has_relu_free());
  ReluNet r = special_to_relu(s, unit);
  for (long i = 0; i <= 1000; ++i) {
    Numeric t = Numeric::rational(i, 1000);
    Numeric want = Numeric(0);
    for (size_t j = 0; j < parts.size(); ++j) want += alpha[j] * eval1(parts[j], t);
    REQUIRE(eval1(r, t) == want);
    REQUIRE(eval(s, Vec{t})[0] == want);
  }
  CHECK_THROWS(special_to_relu(s, Box::unbounded(1)));

  // no ReLU-free channels: the net comes back unchanged
  ReluNet h = hat01();
  std::vector<ChannelRole> roles(2, ChannelRole::compute());
  SpecialNet plain(h, roles);
  CHECK(same_structure(special_to_relu(plain, unit), h));
}

TEST_CASE("to_mode") {
  ReluNet s = sawtooth(3);
  ReluNet f = to_mode(s, Mode::Float);
  CHECK_FALSE(f.is_exact());
  CHECK(to_mode(f, Mode::Exact).is_exact());
  CHECK(eval1(f, Numeric::real(0.3)).to_double() == doctest::Approx(eval1(s, Numeric::rational(3, 10)).to_double()));
}

TEST_CASE("serialization round trip") {
  BitExtractPlan plan = BitExtractPlan::from_signs(4, {1, -1, 1, -1, -1, 1, 1, -1, 1, 1, -1, -1, -1, 1, -1, 1});
  ReluNet net = bit_extract_net(plan);
  const std::string path = "rt_bitextract.net";
  save(net, path);
  NetDocument doc = load(path);
  CHECK(same_structure(doc.net, net));
  CHECK_FALSE(doc.is_special());
  std::remove(path.c_str());

  // 1/3 survives bit-exactly, doubles survive exactly too
  LayerParams l{Matrix(1, 1), Vec{Numeric::rational(1, 3)}}, o{Matrix(1, 1), Vec{Numeric::real(0.1)}};
  l.weights(0, 0) = Numeric::rational(-2, 7);
  o.weights(0, 0) = Numeric::real(1.0 / 3.0);
  ReluNet small(1, {l, o});
  NetDocument back = from_json_string(to_json_string(small, Box::cube(1, 0, 1)));
  CHECK(same_structure(back.net, small));
  CHECK(back.net.layer(0).bias[0].str() == "1/3");
  REQUIRE(back.domain_hint);
  CHECK(back.domain_hint->axes[0].hi == Numeric(1));

  SpecialNet sp = add_by_depth({hat01(), sawtooth(2)}, Vec{Numeric(1), Numeric(1)}, Box::cube(1, 0, 1));
  NetDocument sd = from_json_string(to_json_string(sp));
  CHECK(sd.is_special());
  CHECK(sd.roles->size() == sp.roles().size());

  const std::string text = to_json_string(small);
  CHECK_THROWS_AS(from_json_string(text.substr(0, text.size() / 2)), FormatError);
  CHECK_THROWS_AS(from_json_string("{\"version\": 1}"), FormatError);
  CHECK_THROWS(load("no_such_file.net"));
}
