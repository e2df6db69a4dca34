#include "relucalc/calculus.hpp"

#include <algorithm>
#include <stdexcept>

#include "relucalc/channel_builder.hpp"

namespace relucalc {

AffineMap AffineMap::scaled(size_t d, const Numeric& a, const Vec& c) {
  if (c.size() != d) throw std::invalid_argument("shift has wrong dimension");
  AffineMap m{Matrix(d, d), c};
  for (size_t i = 0; i < d; ++i) m.A(i, i) = a;
  return m;
}

ReluNet parallelize_sum(const std::vector<ReluNet>& nets, const Vec& alpha) {
  if (nets.empty()) throw std::invalid_argument("parallelize_sum needs at least one net");
  if (alpha.size() != nets.size()) throw std::invalid_argument("one coefficient per net required");
  const size_t d = nets[0].input_dim(), d_out = nets[0].output_dim(), L = nets[0].depth();
  for (const auto& n : nets)
    if (n.input_dim() != d || n.output_dim() != d_out || n.depth() != L)
      throw std::invalid_argument("parallelize_sum needs equal d, d' and depth");

  std::vector<LayerParams> layers;
  size_t prev_total = d;
  for (size_t l = 0; l < L; ++l) {
    size_t total = 0;
    for (const auto& n : nets) total += n.layer_width(l);
    LayerParams lp{Matrix(total, prev_total), Vec(total)};
    size_t row = 0, col = 0;
    for (const auto& n : nets) {
      const auto& src = n.layer(l);
      for (size_t i = 0; i < src.weights.rows; ++i) {
        for (size_t j = 0; j < src.weights.cols; ++j) lp.weights(row + i, (l == 0 ? 0 : col) + j) = src.weights(i, j);
        lp.bias[row + i] = src.bias[i];
      }
      row += src.weights.rows;
      col += src.weights.cols;
    }
    layers.push_back(std::move(lp));
    prev_total = total;
  }
  LayerParams out{Matrix(d_out, prev_total), Vec(d_out)};
  size_t col = 0;
  for (size_t k = 0; k < nets.size(); ++k) {
    const auto& src = nets[k].output_layer();
    for (size_t i = 0; i < d_out; ++i) {
      for (size_t j = 0; j < src.weights.cols; ++j) out.weights(i, col + j) = alpha[k] * src.weights(i, j);
      out.bias[i] += alpha[k] * src.bias[i];
    }
    col += src.weights.cols;
  }
  layers.push_back(std::move(out));
  return ReluNet(d, std::move(layers));
}

ReluNet concatenate_compose(const ReluNet& outer, const ReluNet& inner) {
  if (inner.output_dim() != outer.input_dim())
    throw std::invalid_argument("inner output dimension " + std::to_string(inner.output_dim()) +
                                " does not match outer input dimension " + std::to_string(outer.input_dim()));
  std::vector<LayerParams> layers(inner.layers().begin(), inner.layers().end() - 1);
  const auto& io = inner.output_layer();
  const auto& o1 = outer.layer(0);
  LayerParams splice{Matrix(o1.weights.rows, io.weights.cols), o1.bias};
  for (size_t i = 0; i < o1.weights.rows; ++i)
    for (size_t k = 0; k < o1.weights.cols; ++k) {
      const Numeric& w = o1.weights(i, k);
      if (w.is_zero()) continue;
      for (size_t j = 0; j < io.weights.cols; ++j)
        if (!io.weights(k, j).is_zero()) splice.weights(i, j) += w * io.weights(k, j);
      splice.bias[i] += w * io.bias[k];
    }
  layers.push_back(std::move(splice));
  layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
  return ReluNet(inner.input_dim(), std::move(layers));
}

ReluNet extend_depth(const ReluNet& net, size_t target_depth) {
  if (target_depth < net.depth()) throw std::invalid_argument("target depth below current depth");
  std::vector<LayerParams> layers = net.layers();
  const size_t k = net.output_dim();
  for (size_t e = net.depth(); e < target_depth; ++e) {
    LayerParams out = std::move(layers.back());
    layers.pop_back();
    LayerParams carry{Matrix(2 * k, out.weights.cols), Vec(2 * k)};
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < out.weights.cols; ++j) {
        carry.weights(i, j) = out.weights(i, j);
        carry.weights(k + i, j) = -out.weights(i, j);
      }
      carry.bias[i] = out.bias[i];
      carry.bias[k + i] = -out.bias[i];
    }
    LayerParams id{Matrix(k, 2 * k), Vec(k)};
    for (size_t i = 0; i < k; ++i) {
      id.weights(i, i) = 1;
      id.weights(i, k + i) = -1;
    }
    layers.push_back(std::move(carry));
    layers.push_back(std::move(id));
  }
  return ReluNet(net.input_dim(), std::move(layers));
}

namespace {

// output affine map of `net` applied to the previous layer's compute channels
Lin output_over(const ReluNet& net, size_t first_channel) {
  const auto& o = net.output_layer();
  Lin e = Lin::constant(o.bias[0]);
  for (size_t j = 0; j < o.weights.cols; ++j)
    if (!o.weights(0, j).is_zero()) e += Lin::node(first_channel + j, o.weights(0, j));
  return e;
}

}  // namespace

SpecialNet add_by_depth(const std::vector<ReluNet>& nets, const Vec& alpha, const Box& R) {
  if (nets.empty()) throw std::invalid_argument("add_by_depth needs at least one net");
  if (alpha.size() != nets.size()) throw std::invalid_argument("one coefficient per net required");
  if (!R.bounded()) throw std::invalid_argument("add_by_depth needs a bounded box");
  const size_t d = nets[0].input_dim();
  if (R.dim() != d) throw std::invalid_argument("box dimension mismatch");
  size_t W = 0;
  for (const auto& n : nets) {
    if (n.input_dim() != d || n.output_dim() != 1) throw std::invalid_argument("add_by_depth needs shared d and d'=1");
    W = std::max(W, n.width());
  }
  std::vector<ChannelRole> roles;
  for (size_t i = 0; i < d; ++i) roles.push_back(ChannelRole::source(i));
  for (size_t i = 0; i < W; ++i) roles.push_back(ChannelRole::compute());
  const size_t coll = d + W;
  roles.push_back(ChannelRole::collation());

  ChannelNetBuilder b(d, roles);
  for (size_t j = 0; j < nets.size(); ++j) {
    const ReluNet& n = nets[j];
    for (size_t l = 0; l < n.depth(); ++l) {
      b.next_layer();
      const auto& lp = n.layer(l);
      for (size_t r = 0; r < lp.weights.rows; ++r) {
        Lin e = Lin::constant(lp.bias[r]);
        for (size_t c = 0; c < lp.weights.cols; ++c) {
          const Numeric& w = lp.weights(r, c);
          if (w.is_zero()) continue;
          e += (l == 0 ? b.input(c) : b.prev(d + c)) * w;
        }
        b.set(d + r, e);
      }
      if (j == 0) continue;
      if (l == 0) {
        Lin acc = output_over(nets[j - 1], d) * alpha[j - 1];
        if (j >= 2) acc += b.prev(coll);
        b.set(coll, acc);
      } else {
        b.set(coll, b.prev(coll));
      }
    }
  }
  b.begin_output();
  Lin out = output_over(nets.back(), d) * alpha.back();
  if (nets.size() >= 2) out += b.prev(coll);
  return b.finish(out, R);
}

ReluNet precompose(const ReluNet& net, const AffineMap& map) {
  if (map.out_dim() != net.input_dim() || map.b.size() != map.out_dim())
    throw std::invalid_argument("affine map dimension mismatch");
  std::vector<LayerParams> layers = net.layers();
  const auto& l1 = net.layer(0);
  LayerParams nl{Matrix(l1.weights.rows, map.in_dim()), l1.bias};
  for (size_t i = 0; i < l1.weights.rows; ++i)
    for (size_t k = 0; k < l1.weights.cols; ++k) {
      const Numeric& w = l1.weights(i, k);
      if (w.is_zero()) continue;
      for (size_t j = 0; j < map.in_dim(); ++j)
        if (!map.A(k, j).is_zero()) nl.weights(i, j) += w * map.A(k, j);
      nl.bias[i] += w * map.b[k];
    }
  layers[0] = std::move(nl);
  return ReluNet(map.in_dim(), std::move(layers));
}

ReluNet shift_dilate(const ReluNet& net, const Numeric& a, const Vec& c) {
  return precompose(net, AffineMap::scaled(net.input_dim(), a, c));
}

ReluNet scale_output(const ReluNet& net, const Numeric& s, const Numeric& t) {
  std::vector<LayerParams> layers = net.layers();
  auto& o = layers.back();
  for (auto& w : o.weights.a) w *= s;
  for (auto& b : o.bias) b = b * s + t;
  return ReluNet(net.input_dim(), std::move(layers));
}

ReluNet power_sum(const ReluNet& T, const Vec& alpha, const Interval& domain) {
  if (T.input_dim() != 1 || T.output_dim() != 1) throw std::invalid_argument("power_sum needs a scalar T");
  if (alpha.empty()) throw std::invalid_argument("power_sum needs at least one coefficient");
  const size_t W = T.width();
  std::vector<ChannelRole> roles(W, ChannelRole::compute());
  roles.push_back(ChannelRole::collation());
  const size_t coll = W;
  ChannelNetBuilder b(1, roles);
  for (size_t i = 0; i < alpha.size(); ++i) {
    for (size_t l = 0; l < T.depth(); ++l) {
      b.next_layer();
      const auto& lp = T.layer(l);
      for (size_t r = 0; r < lp.weights.rows; ++r) {
        Lin e = Lin::constant(lp.bias[r]);
        if (l == 0) {
          Lin in = i == 0 ? b.input(0) : output_over(T, 0);
          e += in * lp.weights(r, 0);
        } else {
          for (size_t c = 0; c < lp.weights.cols; ++c)
            if (!lp.weights(r, c).is_zero()) e += b.prev(c) * lp.weights(r, c);
        }
        b.set(r, e);
      }
      if (i == 0) continue;
      Lin acc = l == 0 ? output_over(T, 0) * alpha[i - 1] : Lin{};
      if (i >= 2 || l > 0) acc += b.prev(coll);
      b.set(coll, acc);
    }
  }
  b.begin_output();
  Lin out = output_over(T, 0) * alpha.back();
  if (alpha.size() >= 2) out += b.prev(coll);
  Box box{{domain}};
  return special_to_relu(b.finish(out, box), box);
}

ReluNet translate_dilate_sum(const ReluNet& phi, const std::vector<TranslateDilateTerm>& terms, const Box& R) {
  if (phi.output_dim() != 1) throw std::invalid_argument("translate_dilate_sum needs scalar phi");
  if (terms.empty()) throw std::invalid_argument("translate_dilate_sum needs at least one term");
  std::vector<ReluNet> copies;
  Vec coef;
  for (const auto& t : terms) {
    if (t.map.in_dim() != R.dim()) throw std::invalid_argument("affine map input dimension mismatch");
    copies.push_back(precompose(phi, t.map));
    coef.push_back(t.coefficient);
  }
  return special_to_relu(add_by_depth(copies, coef, R), R);
}

}  // namespace relucalc
