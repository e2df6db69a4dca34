#include "relucalc/channel_builder.hpp"

#include <stdexcept>

namespace relucalc {

Lin& Lin::operator+=(const Lin& o) {
  for (const auto& t : o.terms) {
    bool merged = false;
    for (auto& s : terms)
      if (s.first == t.first) {
        s.second += t.second;
        merged = true;
        break;
      }
    if (!merged) terms.push_back(t);
  }
  c += o.c;
  return *this;
}

Lin Lin::operator*(const Numeric& s) const {
  Lin r = *this;
  for (auto& t : r.terms) t.second *= s;
  r.c *= s;
  return r;
}

ChannelNetBuilder::ChannelNetBuilder(size_t d, std::vector<ChannelRole> roles)
    : d_(d), roles_(std::move(roles)), source_channel_(d, SIZE_MAX) {
  for (size_t c = 0; c < roles_.size(); ++c)
    if (roles_[c].kind == ChannelRole::Kind::Source) source_channel_.at(roles_[c].coordinate) = c;
}

void ChannelNetBuilder::next_layer() {
  if (at_output_) throw std::logic_error("output already started");
  layers_.emplace_back(roles_.size());
  for (size_t c = 0; c < roles_.size(); ++c)
    if (roles_[c].kind == ChannelRole::Kind::Source) layers_.back()[c] = input(roles_[c].coordinate);
}

void ChannelNetBuilder::begin_output() {
  if (layers_.empty()) throw std::logic_error("special net needs at least one layer");
  at_output_ = true;
}

void ChannelNetBuilder::set(size_t channel, Lin expr) {
  if (layers_.empty() || at_output_) throw std::logic_error("set() needs an open hidden layer");
  if (roles_.at(channel).kind == ChannelRole::Kind::Source) throw std::logic_error("source channels are fixed");
  layers_.back()[channel] = std::move(expr);
}

Lin ChannelNetBuilder::prev(size_t channel) const {
  if (layers_.size() < (at_output_ ? 1u : 2u)) throw std::logic_error("no previous layer");
  return Lin::node(channel);
}

Lin ChannelNetBuilder::input(size_t i) const {
  if (i >= d_) throw std::out_of_range("input coordinate");
  size_t filling = layers_.size() + (at_output_ ? 1 : 0);
  if (filling <= 1) return Lin::node(i);
  if (source_channel_[i] == SIZE_MAX) throw std::logic_error("no source channel for this coordinate");
  return Lin::node(source_channel_[i]);
}

Lin ChannelNetBuilder::affine_in(const Vec& w, const Numeric& b) const {
  Lin r = Lin::constant(b);
  for (size_t i = 0; i < w.size(); ++i)
    if (!w[i].is_zero()) r += input(i) * w[i];
  return r;
}

SpecialNet ChannelNetBuilder::finish(const Lin& output, std::optional<Box> hint) const {
  return finish(std::vector<Lin>{output}, std::move(hint));
}

SpecialNet ChannelNetBuilder::finish(const std::vector<Lin>& outputs, std::optional<Box> hint) const {
  if (outputs.empty()) throw std::invalid_argument("special net needs an output");
  if (!at_output_) throw std::logic_error("begin_output() must precede finish()");
  const size_t W = roles_.size();
  std::vector<LayerParams> params;
  size_t fan_in = d_;
  auto fill = [](const Lin& e, Matrix& M, Vec& b, size_t row) {
    for (const auto& [j, w] : e.terms) M(row, j) += w;
    b[row] = e.c;
  };
  for (const auto& layer : layers_) {
    LayerParams lp{Matrix(W, fan_in), Vec(W)};
    for (size_t c = 0; c < W; ++c) fill(layer[c], lp.weights, lp.bias, c);
    params.push_back(std::move(lp));
    fan_in = W;
  }
  LayerParams out{Matrix(outputs.size(), W), Vec(outputs.size())};
  for (size_t i = 0; i < outputs.size(); ++i) fill(outputs[i], out.weights, out.bias, i);
  params.push_back(std::move(out));
  return SpecialNet(ReluNet(d_, std::move(params)), roles_, std::move(hint));
}

}  // namespace relucalc
