#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relucalc/analysis.hpp"
#include "relucalc/calculus.hpp"
#include "relucalc/constructions_1d.hpp"

namespace relucalc {

namespace {

bool signs_match(const ReluNet& net, const Vec& points, const std::vector<int>& signs) {
  for (size_t i = 0; i < points.size(); ++i)
    if (eval1(net, points[i]).sign() != signs[i]) return false;
  return true;
}

void check_signs(const Vec& points, const std::vector<int>& signs) {
  if (points.size() != signs.size()) throw std::invalid_argument("one sign per point");
  for (int s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("signs must be +1 or -1");
}

ShatterResult shallow(size_t W, const Vec& points, const std::vector<int>& signs) {
  ShatterResult r;
  if (points.size() > W + 1) {
    r.note = "more than W+1 points; no constructive witness attempted";
    return r;
  }
  Vec y;
  for (int s : signs) y.push_back(Numeric(s));
  ReluNet net = pad_to_width(shallow_interpolant(points, y), W);
  r.realized = signs_match(net, points, signs);
  if (r.realized) r.witness = net;
  r.note = "interpolant through the sign values";
  return r;
}

// f(t) = a (w t + b)_+ + c with w = +-1 and b, a, c on a grid; by positive
// homogeneity of the ReLU, |w| = 1 loses nothing
ShatterResult upsilon11(const Upsilon11Grid& g, const Vec& points, const std::vector<int>& signs) {
  ShatterResult r;
  const long steps = std::lround(g.bound / g.resolution);
  std::vector<double> t;
  for (const auto& p : points) t.push_back(p.to_double());
  std::vector<double> h(t.size());
  for (int w : {-1, 1})
    for (long ib = -steps; ib <= steps; ++ib) {
      double b = ib * g.resolution;
      for (size_t i = 0; i < t.size(); ++i) h[i] = std::max(0.0, w * t[i] + b);
      for (long ia = -steps; ia <= steps; ++ia) {
        double a = ia * g.resolution;
        for (long ic = -steps; ic <= steps; ++ic) {
          double c = ic * g.resolution;
          bool ok = true;
          for (size_t i = 0; i < t.size() && ok; ++i) ok = signs[i] * (a * h[i] + c) > 0;
          if (!ok) continue;
          LayerParams l1{Matrix(1, 1), Vec{Numeric::real(b)}};
          l1.weights(0, 0) = Numeric(w);
          LayerParams out{Matrix(1, 1), Vec{Numeric::real(c)}};
          out.weights(0, 0) = Numeric::real(a);
          r.realized = true;
          r.witness = ReluNet(1, {l1, out});
          r.note = "grid point found";
          return r;
        }
      }
    }
  r.note = "no parameter on the grid realizes the pattern (evidence, not proof)";
  return r;
}

ShatterResult bit_extract(size_t n, const Vec& points, const std::vector<int>& signs) {
  Vec admissible = bit_extract_shatter_points(n);
  const size_t N = n * n;
  // odd nodes at 1, block boundaries at 0, even nodes at 0 or 2
  std::vector<long> y(N + 1, 0);
  for (size_t i = 0; i <= N; ++i) y[i] = i % 2 ? 1 : 0;
  for (size_t k = 0; k < points.size(); ++k) {
    auto it = std::find(admissible.begin(), admissible.end(), points[k]);
    if (it == admissible.end()) throw std::invalid_argument("point is not an admissible bit-extraction node");
    size_t i = size_t(std::lround(points[k].to_double() * double(N)));
    y[i] = signs[k] > 0 ? 2 : 0;
  }
  ReluNet net = scale_output(bit_extract_net(BitExtractPlan::from_values(n, y)), 1, -1);
  ShatterResult r;
  r.realized = signs_match(net, points, signs);
  if (r.realized) r.witness = std::move(net);
  r.note = "bit-extraction interpolant minus one";
  return r;
}

}  // namespace

Vec bit_extract_shatter_points(size_t n) {
  if (n < 4 || n % 2) throw std::invalid_argument("n must be even and >= 4");
  Vec out;
  for (size_t i = 2; i < n * n; i += 2)
    if (i % n) out.push_back(Numeric::rational(long(i), long(n * n)));
  return out;
}

ShatterResult shatter_check(const FamilyDescription& family, const Vec& points, const std::vector<int>& signs) {
  check_signs(points, signs);
  for (size_t i = 1; i < points.size(); ++i)
    if (!(points[i - 1] < points[i])) throw std::invalid_argument("points must be strictly increasing");
  if (auto* s = std::get_if<ShallowFamily>(&family)) return shallow(s->W, points, signs);
  if (auto* g = std::get_if<Upsilon11Grid>(&family)) return upsilon11(*g, points, signs);
  return bit_extract(std::get<BitExtractFamily>(family).n, points, signs);
}

bool shatters(const FamilyDescription& family, const Vec& points, std::vector<int>* failing) {
  const size_t k = points.size();
  if (k > 20) throw std::invalid_argument("too many points to enumerate all sign patterns");
  for (uint64_t mask = 0; mask < (uint64_t(1) << k); ++mask) {
    std::vector<int> s(k);
    for (size_t i = 0; i < k; ++i) s[i] = (mask >> i) & 1 ? 1 : -1;
    if (!shatter_check(family, points, s).realized) {
      if (failing) *failing = s;
      return false;
    }
  }
  return true;
}

}  // namespace relucalc
