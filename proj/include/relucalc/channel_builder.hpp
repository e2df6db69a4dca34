#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "relucalc/net.hpp"

namespace relucalc {

// Sparse affine expression over the nodes of one layer (or the raw inputs).
struct Lin {
  std::vector<std::pair<size_t, Numeric>> terms;
  Numeric c = 0;

  static Lin node(size_t i, const Numeric& w = 1) { return Lin{{{i, w}}, 0}; }
  static Lin constant(const Numeric& v) { return Lin{{}, v}; }

  Lin& operator+=(const Lin& o);
  Lin& operator-=(const Lin& o) { return *this += o * Numeric(-1); }
  Lin operator*(const Numeric& s) const;
  friend Lin operator+(Lin a, const Lin& b) { return a += b; }
  friend Lin operator-(Lin a, const Lin& b) { return a -= b; }
  friend Lin operator+(Lin a, const Numeric& v) { a.c += v; return a; }
  friend Lin operator-(Lin a, const Numeric& v) { a.c -= v; return a; }
  friend Lin operator*(const Numeric& s, const Lin& a) { return a * s; }
  Lin operator-() const { return *this * Numeric(-1); }
};

// Builds a constant-width special net layer by layer. Expressions set for a
// layer refer to the previous layer's channels (inputs at layer 1). Source
// channels are filled automatically. Call begin_output() before building
// the output expression.
class ChannelNetBuilder {
 public:
  ChannelNetBuilder(size_t d, std::vector<ChannelRole> roles);

  void next_layer();
  // after this, prev()/input() refer to the last hidden layer
  void begin_output();
  void set(size_t channel, Lin expr);
  // value of channel in the previous layer
  Lin prev(size_t channel) const;
  // input coordinate i as seen from the current layer
  Lin input(size_t i) const;
  // w . x + b over the inputs
  Lin affine_in(const Vec& w, const Numeric& b) const;
  size_t layers() const { return layers_.size(); }
  size_t width() const { return roles_.size(); }
  size_t input_dim() const { return d_; }

  SpecialNet finish(const Lin& output, std::optional<Box> hint = std::nullopt) const;
  SpecialNet finish(const std::vector<Lin>& outputs, std::optional<Box> hint = std::nullopt) const;

 private:
  size_t d_;
  std::vector<ChannelRole> roles_;
  std::vector<size_t> source_channel_;
  std::vector<std::vector<Lin>> layers_;
  bool at_output_ = false;
};

}  // namespace relucalc
