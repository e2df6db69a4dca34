#pragma once

#include <vector>

#include "relucalc/affine.hpp"
#include "relucalc/net.hpp"

namespace relucalc {

enum class MinMax { Min, Max };
enum class MinMaxStrategy { Tournament, Recursive };

// Tournament: width 3 * 2^{ceil(log2 m) - 1}, depth ceil(log2 m), exact on R^d.
// Recursive: width d + 1, depth m - 1, exact on the box (required).
// apply_relu adds one layer. m = 1 gives the affine function itself.
ReluNet minmax_affine(const AffineFamily& family, MinMax op, MinMaxStrategy strategy, bool apply_relu,
                      const std::optional<Box>& box = std::nullopt);

enum class NetMinMaxStrategy { Parallel, Deep };
// Parallel: equal depths, width sum W_j, depth L_0 + ceil(log2 m).
// Deep: equal widths, width max(W_0, 3) + d + 1, depth sum L_j + m - 1, exact on the box.
ReluNet minmax_outputs(const std::vector<ReluNet>& nets, MinMax op, NetMinMaxStrategy strategy,
                       const std::optional<Box>& box = std::nullopt);

// ReLU(min z_j) with z_j the barycentric coordinates scaled so z_j(x*) = 1
ReluNet tent_net(const std::vector<Vec>& simplex, const Vec& x_star);
// affine z_j of the tent, one per vertex
AffineFamily tent_family(const std::vector<Vec>& simplex, const Vec& x_star);

struct ConvexPiece {
  int sign = 1;
  AffineFamily family;  // at most d + 1 members
};
struct ConvexPieceDecomposition {
  std::vector<ConvexPiece> terms;
  size_t dim() const;
  void validate() const;
  Numeric operator()(const Vec& x) const;
};

enum class CpwlMode { Shallow, Deep };
// Shallow: depth ceil(log2(d + 1)), width 3p 2^{ceil(log2(d + 1)) - 1}, exact on R^d.
// Deep: width d + 2, depth at most p d, exact on the box.
ReluNet cpwl_compile(const ConvexPieceDecomposition& decomp, CpwlMode mode, const std::optional<Box>& box = std::nullopt);

// Uniform grid on [0, 1]^d with n cubes per axis, each cube cut into d!
// simplices along the diagonal from (1, 0, ..., 0) to (0, 1, ..., 1).
struct KuhnGrid {
  size_t d = 2;
  size_t n = 1;

  size_t vertex_count() const;
  // integer lattice coordinates in {0..n}^d, first axis slowest
  std::vector<std::vector<long>> vertices() const;
  Vec point(const std::vector<long>& v) const;
  // each simplex as d + 1 lattice vertices
  std::vector<std::vector<std::vector<long>>> simplices() const;
  // simplices that have v as a vertex
  std::vector<std::vector<std::vector<long>>> star(const std::vector<long>& v) const;
};

// nodal function as ReLU(min over D_v), padded to (d + 1)! members by repetition
ReluNet fem_basis_net(const KuhnGrid& grid, const std::vector<long>& v);
// one affine z_Delta per simplex of D_v, before padding
AffineFamily fem_basis_family(const KuhnGrid& grid, const std::vector<long>& v);
// exact nodal function value (barycentric coordinate on the containing simplex)
Numeric fem_basis_ref(const KuhnGrid& grid, const std::vector<long>& v, const Vec& x);

enum class FemMode { Parallel, Deep };
// sum_v S(v) phi_v; values ordered as grid.vertices()
ReluNet fem_combination(const KuhnGrid& grid, const Vec& values, FemMode mode = FemMode::Parallel);

struct RidgeResult {
  ReluNet net;
  Vec direction;  // integer direction (1, k, ..., k^{d-1})
  size_t k = 0;
};
// S(v . x) with S the deep interpolant of the projected data
RidgeResult ridge_interpolant(const std::vector<Vec>& points, const Vec& values);

}  // namespace relucalc
