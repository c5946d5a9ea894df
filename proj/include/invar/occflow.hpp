#pragma once

#include <optional>
#include <vector>

#include "invar/imgcore.hpp"

namespace invar {

struct FlowProblem {
  Raster frame_a;
  Raster frame_b;
  double lambda = 2e-5;  // occlusion sparsity (threshold lambda / (2 eps_w) at e = 0)
  double mu = 0.001;     // total variation
  int n_levels = 3;
  int warps_per_level = 10;
  int alternations = 4;   // e/v alternations per linearization
  int inner_iters = 50;   // primal-dual iterations per v-step
  double eps_w = 1e-3;    // re-weighting floor
  double tau_scale = 3.0; // mask threshold in robust standard deviations

  void validate() const;
};

// Linearization of frame b around v0 against frame a:
//   rho(v) = gx (u - u0) + gy (v - v0) + it.
struct Linearization {
  Raster gx;
  Raster gy;
  Raster it;
  VectorField v0;
};

struct FlowSolution {
  VectorField v;
  Raster e1;         // sparse occlusion residual
  Raster e2;         // dense data residual rho(v) - e1
  Mask occlusion;    // |e1| > tau_e
  double tau_e = 0.0;
  double objective = 0.0;
  std::vector<double> objective_trace;
  // Index into objective_trace where each linearization begins.
  std::vector<std::size_t> linearization_starts;
};

Linearization linearize(const Raster& a, const Raster& b, const VectorField& v0);

/// argmin_e (r - e)^2 + t w |e|.
inline double shrink(double r, double t, double w) {
  const double m = std::abs(r) - 0.5 * t * w;
  return m > 0.0 ? std::copysign(m, r) : 0.0;
}

/// Total variation, isotropic per component, forward differences with
/// Neumann boundary.
double total_variation(const VectorField& v);

/// rho(v) for a linearization.
Raster linear_residual(const Linearization& lin, const VectorField& v);

/// psi(v, e) = sum (rho - e)^2 + lambda sum w |e| + mu TV(v).
double flow_objective(const Linearization& lin, const VectorField& v, const Raster& e,
                      const Raster& weights, double lambda, double mu);

struct LinearizedResult {
  VectorField v;
  Raster e;
  std::vector<double> trace;  // psi after every half-step, starting at the initial iterate
};

/// Alternating minimization of psi at a fixed linearization and weights,
/// starting from `start`.  Throws SolverFailure if psi increases by more
/// than 1e-8 (relative) at any step.
LinearizedResult minimize_linearized(const Linearization& lin, const Raster& weights,
                                     const VectorField& start, double lambda, double mu,
                                     int alternations, int inner_iters);

/// Image pair at pyramid level `level` (0 = full resolution).
std::pair<Raster, Raster> pyramid_level(const FlowProblem& problem, int level);

/// Runs warps_per_level linearizations at one pyramid level, starting the
/// first linearization at v_init.  When `start` is given, the first
/// linearization's iterate starts there instead of at v_init (the
/// linearization point itself is unchanged).
FlowSolution solve_level(const FlowProblem& problem, int level, const VectorField& v_init,
                         const std::optional<VectorField>& start = std::nullopt);

/// Coarse-to-fine solve on the full pyramid.
FlowSolution solve(const FlowProblem& problem);

/// 3 * 1.4826 * MAD by default; `scale` multiplies the robust std.
double robust_threshold(const Raster& e, double scale);

}  // namespace invar
