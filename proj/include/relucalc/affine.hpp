#pragma once

#include <optional>
#include <vector>

#include "relucalc/numeric.hpp"

namespace relucalc {

struct AffineFunction {
  Vec w;
  Numeric b = 0;

  Numeric operator()(const Vec& x) const;
};

struct AffineFamily {
  std::vector<AffineFunction> members;

  size_t dim() const { return members.empty() ? 0 : members[0].w.size(); }
  size_t size() const { return members.size(); }
  void validate() const;
};

// a . x + b > 0 (strict) or >= 0
struct LinearConstraint {
  Vec a;
  Numeric b;
  bool strict = true;
};

// Exact Fourier-Motzkin feasibility test; returns a point satisfying all
// constraints when one exists.
std::optional<Vec> feasible_point(const std::vector<LinearConstraint>& cons, size_t d);

// Gaussian elimination helpers over Numeric
size_t rank(std::vector<Vec> rows);
// solves M x = rhs for square nonsingular M
std::optional<Vec> solve_linear(std::vector<Vec> M, Vec rhs);

}  // namespace relucalc
