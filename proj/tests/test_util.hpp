#pragma once

// Shared generators and a reference forward pass written directly on mpq_class.

#include <gmpxx.h>

#include <random>
#include <vector>

#include "relucalc/net.hpp"

namespace testutil {

using relucalc::Numeric;
using relucalc::ReluNet;
using relucalc::Vec;

inline Numeric rat(std::mt19937_64& rng, long lo, long hi, long den) {
  std::uniform_int_distribution<long> u(lo * den, hi * den);
  return Numeric::rational(u(rng), den);
}

inline Vec rat_vec(std::mt19937_64& rng, size_t n, long lo, long hi, long den) {
  Vec v;
  for (size_t i = 0; i < n; ++i) v.push_back(rat(rng, lo, hi, den));
  return v;
}

// exact net with the given hidden widths and small rational parameters
inline ReluNet random_exact_net(std::mt19937_64& rng, size_t d, const std::vector<size_t>& widths, size_t d_out = 1) {
  std::vector<relucalc::LayerParams> layers;
  size_t in = d;
  std::vector<size_t> all = widths;
  all.push_back(d_out);
  for (size_t w : all) {
    relucalc::LayerParams lp{relucalc::Matrix(w, in), Vec(w)};
    for (auto& x : lp.weights.a) x = rat(rng, -2, 2, 8);
    for (auto& x : lp.bias) x = rat(rng, -1, 1, 8);
    layers.push_back(std::move(lp));
    in = w;
  }
  return ReluNet(d, std::move(layers));
}

// forward pass on raw rationals, independent of relucalc::eval
inline std::vector<mpq_class> reference_eval(const ReluNet& net, const std::vector<mpq_class>& x,
                                             const std::vector<bool>& relu_free = {}) {
  std::vector<mpq_class> cur = x;
  for (size_t l = 0; l <= net.depth(); ++l) {
    const auto& lp = net.layer(l);
    std::vector<mpq_class> next(lp.weights.rows);
    for (size_t r = 0; r < lp.weights.rows; ++r) {
      mpq_class s = lp.bias[r].q();
      for (size_t c = 0; c < lp.weights.cols; ++c) s += lp.weights(r, c).q() * cur[c];
      const bool free = r < relu_free.size() && relu_free[r];
      if (l < net.depth() && !free && s < 0) s = 0;
      next[r] = s;
    }
    cur = std::move(next);
  }
  return cur;
}

inline mpq_class reference_eval1(const ReluNet& net, const mpq_class& t) { return reference_eval(net, {t})[0]; }

inline std::vector<mpq_class> to_mpq(const Vec& v) {
  std::vector<mpq_class> out;
  for (const auto& x : v) out.push_back(x.q());
  return out;
}

}  // namespace testutil
