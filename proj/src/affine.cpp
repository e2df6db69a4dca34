#include "relucalc/affine.hpp"

#include <algorithm>
#include <stdexcept>

namespace relucalc {

Numeric AffineFunction::operator()(const Vec& x) const {
  if (x.size() != w.size()) throw std::invalid_argument("affine function dimension mismatch");
  Numeric v = b;
  for (size_t i = 0; i < w.size(); ++i)
    if (!w[i].is_zero()) v += w[i] * x[i];
  return v;
}

void AffineFamily::validate() const {
  if (members.empty()) throw std::invalid_argument("affine family is empty");
  for (const auto& m : members)
    if (m.w.size() != dim()) throw std::invalid_argument("affine family members differ in dimension");
}

namespace {

// scale so that the largest |coefficient| is 1; keeps numbers small and lets
// duplicates be detected exactly
LinearConstraint normalized(LinearConstraint c) {
  Numeric m = abs(c.b);
  for (const auto& x : c.a) m = max(m, abs(x));
  if (m.is_zero()) return c;
  for (auto& x : c.a) x /= m;
  c.b /= m;
  return c;
}

bool same(const LinearConstraint& p, const LinearConstraint& q) {
  if (p.strict != q.strict || p.b != q.b) return false;
  for (size_t i = 0; i < p.a.size(); ++i)
    if (p.a[i] != q.a[i]) return false;
  return true;
}

void push_unique(std::vector<LinearConstraint>& v, LinearConstraint c) {
  c = normalized(std::move(c));
  for (const auto& e : v)
    if (same(e, c)) return;
  v.push_back(std::move(c));
}

std::optional<Vec> fm(const std::vector<LinearConstraint>& cons, size_t d) {
  if (d == 0) {
    for (const auto& c : cons)
      if (c.strict ? c.b.sign() <= 0 : c.b.sign() < 0) return std::nullopt;
    return Vec{};
  }
  const size_t k = d - 1;
  std::vector<const LinearConstraint*> lower, upper;
  std::vector<LinearConstraint> reduced;
  for (const auto& c : cons) {
    int s = c.a[k].sign();
    if (s > 0)
      lower.push_back(&c);
    else if (s < 0)
      upper.push_back(&c);
    else
      push_unique(reduced, LinearConstraint{Vec(c.a.begin(), c.a.begin() + k), c.b, c.strict});
  }
  // lower: x_k > -(a'x + b)/a_k ; upper: x_k < (a'x + b)/|a_k|
  for (const auto* p : lower)
    for (const auto* q : upper) {
      Numeric sp = p->a[k], sq = -q->a[k];
      LinearConstraint c{Vec(k), p->b / sp + q->b / sq, p->strict || q->strict};
      for (size_t i = 0; i < k; ++i) c.a[i] = p->a[i] / sp + q->a[i] / sq;
      push_unique(reduced, std::move(c));
    }
  auto sub = fm(reduced, k);
  if (!sub) return std::nullopt;
  Vec x = *sub;
  std::optional<Numeric> lo, hi;
  bool lo_strict = false, hi_strict = false;
  auto partial = [&](const LinearConstraint& c) {
    Numeric v = c.b;
    for (size_t i = 0; i < k; ++i)
      if (!c.a[i].is_zero()) v += c.a[i] * x[i];
    return v;
  };
  for (const auto* p : lower) {
    Numeric bound = -partial(*p) / p->a[k];
    if (!lo || bound > *lo || (bound == *lo && p->strict)) {
      lo_strict = (lo && bound == *lo) ? (lo_strict || p->strict) : p->strict;
      lo = bound;
    }
  }
  for (const auto* q : upper) {
    Numeric bound = partial(*q) / (-q->a[k]);
    if (!hi || bound < *hi || (bound == *hi && q->strict)) {
      hi_strict = (hi && bound == *hi) ? (hi_strict || q->strict) : q->strict;
      hi = bound;
    }
  }
  Numeric xk;
  if (lo && hi) {
    if (*lo < *hi)
      xk = (*lo + *hi) / Numeric(2);
    else if (*lo == *hi && !lo_strict && !hi_strict)
      xk = *lo;
    else
      return std::nullopt;  // cannot happen when elimination is exact
  } else if (lo) {
    xk = *lo + Numeric(1);
  } else if (hi) {
    xk = *hi - Numeric(1);
  } else {
    xk = Numeric(0);
  }
  x.push_back(xk);
  return x;
}

}  // namespace

std::optional<Vec> feasible_point(const std::vector<LinearConstraint>& cons, size_t d) {
  std::vector<LinearConstraint> cs;
  for (const auto& c : cons) {
    if (c.a.size() != d) throw std::invalid_argument("constraint dimension mismatch");
    push_unique(cs, c);
  }
  return fm(cs, d);
}

size_t rank(std::vector<Vec> rows) {
  if (rows.empty()) return 0;
  const size_t n = rows[0].size();
  size_t r = 0;
  for (size_t col = 0; col < n && r < rows.size(); ++col) {
    size_t piv = r;
    while (piv < rows.size() && rows[piv][col].is_zero()) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[r], rows[piv]);
    for (size_t i = r + 1; i < rows.size(); ++i) {
      if (rows[i][col].is_zero()) continue;
      Numeric f = rows[i][col] / rows[r][col];
      for (size_t j = col; j < n; ++j) rows[i][j] -= f * rows[r][j];
    }
    ++r;
  }
  return r;
}

std::optional<Vec> solve_linear(std::vector<Vec> M, Vec rhs) {
  const size_t n = M.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    if (M[0].size() != n) throw std::invalid_argument("solve_linear needs a square matrix");
    // largest magnitude pivot keeps Float mode stable; any nonzero is fine for Exact
    for (size_t i = col + 1; i < n; ++i)
      if (abs(M[i][col]) > abs(M[piv][col])) piv = i;
    if (M[piv][col].is_zero()) return std::nullopt;
    std::swap(M[col], M[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (size_t i = 0; i < n; ++i) {
      if (i == col || M[i][col].is_zero()) continue;
      Numeric f = M[i][col] / M[col][col];
      for (size_t j = col; j < n; ++j) M[i][j] -= f * M[col][j];
      rhs[i] -= f * rhs[col];
    }
  }
  for (size_t i = 0; i < n; ++i) rhs[i] /= M[i][i];
  return rhs;
}

}  // namespace relucalc
