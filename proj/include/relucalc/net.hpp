#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relucalc/numeric.hpp"

namespace relucalc {

struct Matrix {
  size_t rows = 0, cols = 0;
  std::vector<Numeric> a;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), a(r * c) {}
  Numeric& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  const Numeric& operator()(size_t i, size_t j) const { return a[i * cols + j]; }
};

// rows = fan-out, cols = fan-in
struct LayerParams {
  Matrix weights;
  Vec bias;
};

// Hidden layers 1..L followed by the affine output layer.
class ReluNet {
 public:
  ReluNet(size_t input_dim, std::vector<LayerParams> layers);

  size_t input_dim() const { return d_; }
  size_t output_dim() const { return layers_.back().weights.rows; }
  size_t depth() const { return layers_.size() - 1; }
  size_t width() const;
  size_t layer_width(size_t l) const { return layers_[l].weights.rows; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  const LayerParams& layer(size_t l) const { return layers_[l]; }
  const LayerParams& output_layer() const { return layers_.back(); }
  bool is_exact() const;

 private:
  size_t d_;
  std::vector<LayerParams> layers_;
};

struct Interval {
  Numeric lo, hi;
};

// axis-aligned box; Float infinities mark unbounded axes
struct Box {
  std::vector<Interval> axes;

  static Box cube(size_t d, Numeric lo, Numeric hi);
  static Box unbounded(size_t d);
  size_t dim() const { return axes.size(); }
  bool bounded() const;
  bool contains(std::span<const Numeric> x) const;
};

struct ChannelRole {
  enum class Kind { Source, Collation, Compute };
  Kind kind = Kind::Compute;
  size_t coordinate = 0;  // 0-based input index for Source channels
  bool relu_free = false;

  static ChannelRole source(size_t i, bool relu_free = true) { return {Kind::Source, i, relu_free}; }
  static ChannelRole collation(bool relu_free = true) { return {Kind::Collation, 0, relu_free}; }
  static ChannelRole compute() { return {Kind::Compute, 0, false}; }
};

// Constant-width net with per-channel roles.
class SpecialNet {
 public:
  SpecialNet(ReluNet net, std::vector<ChannelRole> roles, std::optional<Box> domain_hint = std::nullopt);

  const ReluNet& net() const { return net_; }
  const std::vector<ChannelRole>& roles() const { return roles_; }
  const std::optional<Box>& domain_hint() const { return hint_; }
  bool has_relu_free() const;

 private:
  ReluNet net_;
  std::vector<ChannelRole> roles_;
  std::optional<Box> hint_;
};

struct NetStats {
  size_t width = 0;
  size_t depth = 0;
  size_t param_count = 0;  // of the net padded to constant width
};

size_t param_count_formula(size_t d, size_t d_out, size_t W, size_t L);

Vec eval(const ReluNet& net, std::span<const Numeric> x);
Vec eval(const SpecialNet& net, std::span<const Numeric> x);
Numeric eval1(const ReluNet& net, const Numeric& t);
// pre-activation values of every hidden layer
std::vector<Vec> preactivations(const ReluNet& net, std::span<const Numeric> x);

NetStats stats(const ReluNet& net);
ReluNet pad_to_width(const ReluNet& net, size_t target);
ReluNet normalize_first_layer(const ReluNet& net);
ReluNet special_to_relu(const SpecialNet& snet, const Box& K);
// same, with lower[l][i] a known lower bound on K of ReLU-free channel i in hidden layer l
ReluNet special_to_relu(const SpecialNet& snet, const Box& K, const std::vector<Vec>& lower);
ReluNet to_mode(const ReluNet& net, Mode m);
ReluNet zero_net(size_t d, size_t width = 1, size_t depth = 1);

// Fast double-precision evaluator; holds a dense copy of the parameters.
class FloatEvaluator {
 public:
  explicit FloatEvaluator(const ReluNet& net, std::vector<bool> relu_free = {});
  explicit FloatEvaluator(const SpecialNet& net);
  std::vector<double> operator()(std::span<const double> x) const;
  double scalar(std::span<const double> x) const;
  double scalar(double t) const { return scalar(std::span<const double>(&t, 1)); }
  size_t input_dim() const { return d_; }

 private:
  struct Layer {
    size_t rows, cols;
    std::vector<double> w, b;
  };
  size_t d_;
  std::vector<Layer> layers_;
  std::vector<bool> relu_free_;
};

}  // namespace relucalc
