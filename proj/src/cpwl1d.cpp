#include "relucalc/cpwl1d.hpp"

#include <algorithm>
#include <stdexcept>

namespace relucalc {

Cpwl1D Cpwl1D::affine(const Numeric& a, const Numeric& b) {
  Cpwl1D f;
  f.breakpoints = {Numeric(0).to_mode(b.mode())};
  f.values = {b};
  f.left_slope = a;
  f.right_slope = a;
  return f;
}

Cpwl1D Cpwl1D::interpolate(const Vec& t, const Vec& y, const Numeric& left_slope, const Numeric& right_slope) {
  Cpwl1D f{t, y, left_slope, right_slope};
  f.validate();
  return f;
}

void Cpwl1D::validate() const {
  if (breakpoints.empty()) throw std::invalid_argument("Cpwl1D needs at least one knot");
  if (breakpoints.size() != values.size()) throw std::invalid_argument("Cpwl1D knot/value size mismatch");
  for (size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i - 1] < breakpoints[i])) throw std::invalid_argument("Cpwl1D knots must strictly increase");
}

Numeric Cpwl1D::slope(size_t k) const {
  if (k == 0) return left_slope;
  if (k >= breakpoints.size()) return right_slope;
  return (values[k] - values[k - 1]) / (breakpoints[k] - breakpoints[k - 1]);
}

Numeric Cpwl1D::operator()(const Numeric& t) const {
  const size_t K = breakpoints.size();
  if (t <= breakpoints[0]) return values[0] + left_slope * (t - breakpoints[0]);
  if (t >= breakpoints[K - 1]) return values[K - 1] + right_slope * (t - breakpoints[K - 1]);
  size_t k = std::upper_bound(breakpoints.begin(), breakpoints.end(), t) - breakpoints.begin();
  if (breakpoints[k - 1] == t) return values[k - 1];
  return values[k - 1] + slope(k) * (t - breakpoints[k - 1]);
}

Vec Cpwl1D::kinks() const {
  Vec out;
  Numeric s = left_slope;
  for (size_t k = 0; k < breakpoints.size(); ++k) {
    Numeric next = slope(k + 1);
    if (next != s) out.push_back(breakpoints[k]);
    s = std::move(next);
  }
  return out;
}

Cpwl1D Cpwl1D::canonical() const {
  Cpwl1D g;
  g.left_slope = left_slope;
  g.right_slope = right_slope;
  Numeric s = left_slope;
  for (size_t k = 0; k < breakpoints.size(); ++k) {
    Numeric next = slope(k + 1);
    if (next != s) {
      g.breakpoints.push_back(breakpoints[k]);
      g.values.push_back(values[k]);
    }
    s = std::move(next);
  }
  if (g.breakpoints.empty()) {
    g.breakpoints.push_back(breakpoints[0]);
    g.values.push_back(values[0]);
  }
  return g;
}

bool same_function(const Cpwl1D& f, const Cpwl1D& g) {
  Cpwl1D a = f.canonical(), b = g.canonical();
  if (a.left_slope != b.left_slope || a.right_slope != b.right_slope) return false;
  if (a.kink_count() == 0 && b.kink_count() == 0) return a(0) == b(0);
  if (a.breakpoints.size() != b.breakpoints.size()) return false;
  for (size_t i = 0; i < a.breakpoints.size(); ++i)
    if (a.breakpoints[i] != b.breakpoints[i] || a.values[i] != b.values[i]) return false;
  return true;
}

Cpwl1D operator-(const Cpwl1D& f, const Cpwl1D& g) {
  Vec knots;
  std::merge(f.breakpoints.begin(), f.breakpoints.end(), g.breakpoints.begin(), g.breakpoints.end(),
             std::back_inserter(knots));
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  Cpwl1D h;
  h.breakpoints = knots;
  for (const auto& t : knots) h.values.push_back(f(t) - g(t));
  h.left_slope = f.left_slope - g.left_slope;
  h.right_slope = f.right_slope - g.right_slope;
  return h;
}

}  // namespace relucalc
