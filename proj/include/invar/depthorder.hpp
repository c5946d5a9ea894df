#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invar/imgcore.hpp"

namespace invar {

/// Regions 0..K-1 with symmetric, non-negative affinity weights.
struct RegionGraph {
  int regions = 0;
  Eigen::MatrixXd weight;  // K x K, zero diagonal
  double alpha = 1.0;
  double beta = 1.0;
  double eps = 1.5;
};

/// Sums alpha exp(-(I(x) - I(y))^2) + beta exp(-|v(x) - v(y)|^2) over unordered
/// pixel pairs with |x - y| < eps lying in different regions.  Labels must be
/// 0..K-1 with K = max label + 1.
RegionGraph build_region_graph(const LabelImage& labels, const Raster& img, const VectorField& flow,
                               double alpha, double beta, double eps);

struct OcclusionConstraint {
  int occluded = 0;
  int occluder = 0;
};

struct DepthLabeling {
  std::vector<int> depth;  // larger is closer
  double objective = 0.0;  // sum over region pairs of W |c_a - c_b|
  std::string method;      // "longest-path" or "simplex"
};

double labeling_objective(const RegionGraph& graph, const std::vector<int>& depth);

/// A directed cycle of the occlusion graph (occluded -> occluder), as the
/// sequence of regions on it, or nullopt when the graph is acyclic.
std::optional<std::vector<int>> occlusion_cycle(int regions, const std::vector<OcclusionConstraint>& constraints);

/// Minimizes sum W |c_a - c_b| over integer labels c >= 0 subject to
/// c(occluder) >= c(occluded) + 1.  Among optimal labelings the one with the
/// smallest label sum is returned.  Throws Error(CyclicOcclusion) for cyclic
/// constraints.
DepthLabeling depth_order(const RegionGraph& graph, const std::vector<OcclusionConstraint>& constraints);

}  // namespace invar
