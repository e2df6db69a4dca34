#pragma once

#include <stdexcept>

#include "relucalc/channel_builder.hpp"
#include "relucalc/cpwl1d.hpp"

namespace relucalc::detail {

// Emits g(u) one kink per layer using a compute channel and a relu-free
// collation channel. Call step() once per layer with u expressed over the
// previous layer; value() gives g(u) over the previous layer afterwards.
class CpwlStream {
 public:
  CpwlStream(const Cpwl1D& g, size_t comp, size_t coll) : comp_(comp), coll_(coll) {
    Cpwl1D c = g.canonical();
    kinks_ = c.kinks();
    left_slope_ = c.left_slope;
    if (kinks_.empty()) {
      base_ = c(0);
    } else {
      base_ = c(kinks_[0]);
      Numeric s = c.left_slope;
      for (const auto& k : kinks_) {
        Numeric after = slope_after(c, k);
        jumps_.push_back(after - s);
        s = after;
      }
    }
  }

  size_t layers_needed() const { return kinks_.empty() ? 1 : kinks_.size(); }

  void step(ChannelNetBuilder& b, const Lin& u) {
    ++layer_;
    Lin coll;
    if (layer_ == 1)
      coll = kinks_.empty() ? u * left_slope_ + base_ : (u - kinks_[0]) * left_slope_ + base_;
    else
      coll = b.prev(coll_) + pending_;
    pending_ = Lin{};
    if (layer_ <= kinks_.size()) {
      b.set(comp_, u - kinks_[layer_ - 1]);
      pending_ = Lin::node(comp_, jumps_[layer_ - 1]);
    }
    b.set(coll_, coll);
  }

  Lin value(const ChannelNetBuilder& b) const {
    if (layer_ == 0) throw std::logic_error("stream has not started");
    return b.prev(coll_) + pending_;
  }
  bool done() const { return layer_ >= kinks_.size() && layer_ > 0; }

 private:
  static Numeric slope_after(const Cpwl1D& c, const Numeric& k) {
    for (size_t i = 0; i < c.breakpoints.size(); ++i)
      if (c.breakpoints[i] == k) return c.slope(i + 1);
    throw std::logic_error("kink not found");
  }

  size_t comp_, coll_;
  Vec kinks_, jumps_;
  Numeric left_slope_, base_;
  size_t layer_ = 0;
  Lin pending_;
};

}  // namespace relucalc::detail
