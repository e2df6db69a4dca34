#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "relucalc/affine.hpp"
#include "relucalc/cpwl1d.hpp"
#include "relucalc/net.hpp"

namespace relucalc {

// ---- exact univariate extraction

Cpwl1D exact_cpwl_1d(const ReluNet& net);
// the returned function equals net(clamp(t, lo, hi)); only [lo, hi] is meaningful
Cpwl1D exact_cpwl_1d(const ReluNet& net, const Interval& window);
Cpwl1D exact_cpwl_1d(const SpecialNet& net, const Interval& window);
// exact minimum over the window of every hidden channel, layer by layer
std::vector<Vec> channel_minima_1d(const SpecialNet& net, const Interval& window);
// special_to_relu with lifts from channel_minima_1d (interval lifts when the
// channels have too many pieces to track); d = 1 only
ReluNet special_to_relu_exact_1d(const SpecialNet& net, const Interval& window);

// ---- sup-norm errors

struct Quadratic1D {
  Numeric a, b, c;  // a t^2 + b t + c
  Numeric operator()(const Numeric& t) const { return (a * t + b) * t + c; }
};
using Oracle = std::function<double(std::span<const double>)>;
using Reference = std::variant<ReluNet, Cpwl1D, Quadratic1D, Oracle>;

struct GridMode {
  size_t resolution = 1000;  // points per axis
};
struct Exact1DMode {};
using SupMode = std::variant<Exact1DMode, GridMode>;

struct SupError {
  Numeric value;
  bool lower_bound_only = false;  // grid estimates
  Numeric argmax;                 // first coordinate of a maximizer
};

SupError sup_error(const ReluNet& net, const Reference& ref, const Box& domain, const SupMode& mode);
// exact sup over [lo, hi] of |f - g| and |f - q|
SupError sup_abs_diff(const Cpwl1D& f, const Cpwl1D& g, const Interval& I);
SupError sup_abs_diff(const Cpwl1D& f, const Quadratic1D& q, const Interval& I);

// max over a tensor grid of |net(x) - ref(x)| in double precision; resolution
// points per axis including both endpoints
double grid_max_error(const ReluNet& net, const Oracle& ref, const Box& domain, size_t resolution);
// calls f on every point of the grid
void for_each_grid_point(const Box& domain, size_t resolution, const std::function<void(std::span<const double>)>& f);

// ---- regions and arrangements

using ActivationPattern = std::vector<int8_t>;

struct ArrangementCellReport {
  size_t W = 0, d = 0;
  size_t cell_count = 0;
  size_t zaslavsky_bound = 0;
  bool in_general_position = false;
  std::vector<std::pair<ActivationPattern, Vec>> cells;  // sign pattern and witness point
};

ArrangementCellReport arrangement_cells(const AffineFamily& hyperplanes);
bool general_position(const AffineFamily& hyperplanes);
size_t zaslavsky_bound(size_t W, size_t d);

struct RegionCensus {
  size_t samples = 0;
  size_t hidden_nodes = 0;
  size_t distinct_patterns = 0;
  size_t samples_with_zero = 0;  // samples whose pattern contains a 0 entry
  double bound_3m = 0, bound_2m = 0;
  std::map<std::string, size_t> counts;  // pattern string -> samples
  std::optional<ArrangementCellReport> arrangement;
};

ActivationPattern activation_pattern(const ReluNet& net, std::span<const Numeric> x);
RegionCensus region_census(const ReluNet& net, const Box& domain, size_t samples, uint64_t seed = 1);
// first hidden layer as a hyperplane family
AffineFamily first_layer_hyperplanes(const ReluNet& net);

// ---- shattering

struct ShallowFamily {
  size_t W;
};
struct Upsilon11Grid {
  double resolution = 1e-2;
  double bound = 1.0;  // parameters searched in [-bound, bound]
};
struct BitExtractFamily {
  size_t n;
};
using FamilyDescription = std::variant<ShallowFamily, Upsilon11Grid, BitExtractFamily>;

struct ShatterResult {
  bool realized = false;
  std::optional<ReluNet> witness;
  std::string note;
};

ShatterResult shatter_check(const FamilyDescription& family, const Vec& points, const std::vector<int>& signs);
// every sign pattern on the points realized (stops at the first failure)
bool shatters(const FamilyDescription& family, const Vec& points, std::vector<int>* failing = nullptr);
// grid points t_i admissible for the bit-extraction family
Vec bit_extract_shatter_points(size_t n);

// ---- one-layer representability

struct CellGradient {
  Vec witness;
  Vec gradient;
};
struct JumpSpec {
  AffineFamily arrangement;
  std::map<ActivationPattern, CellGradient> cells;
};
struct OneLayerResult {
  bool representable = false;
  Vec a;                        // jump coefficient per hyperplane
  size_t violating_hyperplane = 0;
  std::string reason;
};

OneLayerResult one_layer_representable(const JumpSpec& spec);
// gradient data of a function that is affine on every cell of the arrangement
JumpSpec jump_spec_from_function(const AffineFamily& arrangement, const std::function<Numeric(const Vec&)>& f);
// exact gradient of a scalar net at a point where no pre-activation vanishes
Vec net_gradient(const ReluNet& net, const Vec& x);

// ---- realization map probe

struct Architecture {
  size_t d = 1, W = 3, L = 3;
};
size_t parameter_count(const Architecture& a);
ReluNet realize(const Architecture& a, const std::vector<double>& theta);
std::vector<double> flatten_parameters(const ReluNet& net);

struct LipschitzReport {
  std::vector<double> radii;
  std::vector<double> max_ratio;  // running maximum over nested samples
  size_t pairs_per_radius = 0;
};
LipschitzReport lipschitz_probe(const Architecture& a, std::vector<double> radii, size_t pairs, size_t grid = 201,
                                uint64_t seed = 1);

}  // namespace relucalc
