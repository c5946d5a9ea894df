#include "invar/occflow.hpp"

#include <algorithm>
#include <cmath>

namespace invar {

void FlowProblem::validate() const {
  require_finite(frame_a, "flow frame_a");
  require_finite(frame_b, "flow frame_b");
  require(frame_a.rows() == frame_b.rows() && frame_a.cols() == frame_b.cols(),
          "flow: frames differ in size");
  require(frame_a.rows() >= 2 && frame_a.cols() >= 2, "flow: frames must be at least 2x2");
  require(std::isfinite(lambda) && lambda > 0.0, "flow: lambda must be > 0");
  require(std::isfinite(mu) && mu > 0.0, "flow: mu must be > 0");
  require(n_levels >= 1, "flow: n_levels must be >= 1");
  require(warps_per_level >= 1, "flow: warps_per_level must be >= 1");
  require(alternations >= 1, "flow: alternations must be >= 1");
  require(inner_iters >= 1, "flow: inner_iters must be >= 1");
  require(eps_w > 0.0, "flow: eps_w must be > 0");
  require(tau_scale > 0.0, "flow: tau_scale must be > 0");
}

Linearization linearize(const Raster& a, const Raster& b, const VectorField& v0) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "linearize: frames differ in size");
  require(v0.height() == a.rows() && v0.width() == a.cols(), "linearize: flow size mismatch");
  const Raster bw = warp(b, v0).image;
  auto [gx, gy] = gradient_xy(bw);
  return {std::move(gx), std::move(gy), bw - a, v0};
}

double total_variation(const VectorField& v) {
  const Eigen::Index h = v.height(), w = v.width();
  double tv = 0.0;
  for (const Raster* c : {&v.u, &v.v}) {
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const double dx = x + 1 < w ? (*c)(y, x + 1) - (*c)(y, x) : 0.0;
        const double dy = y + 1 < h ? (*c)(y + 1, x) - (*c)(y, x) : 0.0;
        tv += std::sqrt(dx * dx + dy * dy);
      }
    }
  }
  return tv;
}

Raster linear_residual(const Linearization& lin, const VectorField& v) {
  return lin.gx * (v.u - lin.v0.u) + lin.gy * (v.v - lin.v0.v) + lin.it;
}

double flow_objective(const Linearization& lin, const VectorField& v, const Raster& e,
                      const Raster& weights, double lambda, double mu) {
  const Raster rho = linear_residual(lin, v);
  return (rho - e).square().sum() + lambda * (weights * e.abs()).sum() + mu * total_variation(v);
}

namespace {

// Chambolle-Pock state for the v-subproblem
//   min_v sum (a.v - c)^2 + mu TV(v),
// kept across alternations so that successive v-steps continue one
// another.
struct PrimalDual {
  VectorField x, xbar;
  Raster pux, puy, pvx, pvy;
  double tau = 0.0, sigma = 0.0;

  PrimalDual(const VectorField& start, double mu)
      : x(start), xbar(start),
        pux(Raster::Zero(start.height(), start.width())), puy(pux), pvx(pux), pvy(pux) {
    // tau * sigma * ||grad||^2 <= 1 with ||grad||^2 <= 8.  The ratio tau /
    // sigma balances the primal scale (pixels) against the dual scale
    // (bounded by mu).
    const double r = 0.1 / mu;
    tau = r / std::sqrt(8.0);
    sigma = 1.0 / (r * std::sqrt(8.0));
  }

  static void dual_ascent(const Raster& c, Raster& px, Raster& py, double sigma, double mu) {
    const Eigen::Index h = c.rows(), w = c.cols();
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const double dx = x + 1 < w ? c(y, x + 1) - c(y, x) : 0.0;
        const double dy = y + 1 < h ? c(y + 1, x) - c(y, x) : 0.0;
        double qx = px(y, x) + sigma * dx;
        double qy = py(y, x) + sigma * dy;
        const double n = std::sqrt(qx * qx + qy * qy);
        if (n > mu) {
          qx *= mu / n;
          qy *= mu / n;
        }
        px(y, x) = qx;
        py(y, x) = qy;
      }
    }
  }

  // Negative adjoint of the forward-difference gradient.
  static double divergence(const Raster& px, const Raster& py, Eigen::Index y, Eigen::Index x) {
    const Eigen::Index h = px.rows(), w = px.cols();
    double d = 0.0;
    if (x + 1 < w) d += px(y, x);
    if (x > 0) d -= px(y, x - 1);
    if (y + 1 < h) d += py(y, x);
    if (y > 0) d -= py(y - 1, x);
    return d;
  }

  void iterate(const Raster& ax, const Raster& ay, const Raster& c, double mu, int iters) {
    const Eigen::Index h = x.height(), w = x.width();
    for (int it = 0; it < iters; ++it) {
      dual_ascent(xbar.u, pux, puy, sigma, mu);
      dual_ascent(xbar.v, pvx, pvy, sigma, mu);
      for (Eigen::Index y = 0; y < h; ++y) {
        for (Eigen::Index xx = 0; xx < w; ++xx) {
          const double tu = x.u(y, xx) + tau * divergence(pux, puy, y, xx);
          const double tv = x.v(y, xx) + tau * divergence(pvx, pvy, y, xx);
          const double gx = ax(y, xx), gy = ay(y, xx);
          // prox of tau * (a.v - c)^2
          const double k = 2.0 * tau * (gx * tu + gy * tv - c(y, xx)) / (1.0 + 2.0 * tau * (gx * gx + gy * gy));
          const double nu = tu - k * gx;
          const double nv = tv - k * gy;
          xbar.u(y, xx) = 2.0 * nu - x.u(y, xx);
          xbar.v(y, xx) = 2.0 * nv - x.v(y, xx);
          x.u(y, xx) = nu;
          x.v(y, xx) = nv;
        }
      }
    }
  }
};

void check_descent(std::vector<double>& trace, double value) {
  const double prev = trace.back();
  trace.push_back(value);
  if (!std::isfinite(value) || value > prev + 1e-8 * std::max(1.0, std::abs(prev)))
    throw SolverFailure("flow objective increased", trace);
}

}  // namespace

LinearizedResult minimize_linearized(const Linearization& lin, const Raster& weights,
                                     const VectorField& start, double lambda, double mu,
                                     int alternations, int inner_iters) {
  require(start.height() == lin.it.rows() && start.width() == lin.it.cols(),
          "minimize_linearized: start size mismatch");
  require(weights.rows() == lin.it.rows() && weights.cols() == lin.it.cols(),
          "minimize_linearized: weight size mismatch");
  LinearizedResult res{start, Raster::Zero(lin.it.rows(), lin.it.cols()), {}};
  res.trace.push_back(flow_objective(lin, res.v, res.e, weights, lambda, mu));
  PrimalDual pd(start, mu);
  // a.v0 - it; the v-step target is c = a.v0 - it + e.
  const Raster base = lin.gx * lin.v0.u + lin.gy * lin.v0.v - lin.it;
  for (int k = 0; k < alternations; ++k) {
    // v-step first: starting from e = 0 lets the flow absorb what it can
    // before the sparse term is asked to explain the rest.
    pd.iterate(lin.gx, lin.gy, base + res.e, mu, inner_iters);
    const double candidate = flow_objective(lin, pd.x, res.e, weights, lambda, mu);
    // The primal-dual sequence is not monotone; keep the last accepted
    // iterate when it is not improved upon.
    if (candidate <= res.trace.back()) {
      res.v = pd.x;
      check_descent(res.trace, candidate);
    } else {
      check_descent(res.trace, res.trace.back());
    }

    const Raster rho = linear_residual(lin, res.v);
    for (Eigen::Index i = 0; i < rho.size(); ++i)
      res.e.data()[i] = shrink(rho.data()[i], lambda, weights.data()[i]);
    check_descent(res.trace, flow_objective(lin, res.v, res.e, weights, lambda, mu));
  }
  return res;
}

std::pair<Raster, Raster> pyramid_level(const FlowProblem& problem, int level) {
  Raster a = problem.frame_a, b = problem.frame_b;
  for (int l = 0; l < level; ++l) {
    a = downsample2(a);
    b = downsample2(b);
  }
  return {std::move(a), std::move(b)};
}

double robust_threshold(const Raster& e, double scale) {
  std::vector<double> v(e.data(), e.data() + e.size());
  auto median = [](std::vector<double>& xs) {
    const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
    std::nth_element(xs.begin(), mid, xs.end());
    double m = *mid;
    if (xs.size() % 2 == 0) m = 0.5 * (m + *std::max_element(xs.begin(), mid));
    return m;
  };
  const double med = median(v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(e.data()[i] - med);
  return scale * 1.4826 * median(v);
}

FlowSolution solve_level(const FlowProblem& problem, int level, const VectorField& v_init,
                         const std::optional<VectorField>& start) {
  problem.validate();
  const auto [a, b] = pyramid_level(problem, level);
  require(v_init.height() == a.rows() && v_init.width() == a.cols(),
          "solve_level: v_init does not match the level grid");

  FlowSolution sol;
  VectorField v = v_init;
  Raster e;
  Linearization lin;
  for (int w = 0; w < problem.warps_per_level; ++w) {
    lin = linearize(a, b, v);
    // Without a previous estimate every pixel is weighted as if e = 0.
    const Raster weights = w == 0 ? Raster::Constant(a.rows(), a.cols(), 1.0 / problem.eps_w)
                                  : Raster(1.0 / (e.abs() + problem.eps_w));
    const VectorField& from = (w == 0 && start) ? *start : v;
    auto res = minimize_linearized(lin, weights, from, problem.lambda, problem.mu,
                                   problem.alternations, problem.inner_iters);
    sol.linearization_starts.push_back(sol.objective_trace.size());
    sol.objective_trace.insert(sol.objective_trace.end(), res.trace.begin(), res.trace.end());
    v = std::move(res.v);
    e = std::move(res.e);
  }
  sol.e2 = linear_residual(lin, v) - e;
  sol.v = std::move(v);
  sol.e1 = std::move(e);
  sol.objective = sol.objective_trace.back();
  sol.tau_e = robust_threshold(sol.e1, problem.tau_scale);
  sol.occlusion = (sol.e1.abs() > sol.tau_e).cast<unsigned char>();
  return sol;
}

FlowSolution solve(const FlowProblem& problem) {
  problem.validate();
  int levels = 1;
  for (Eigen::Index h = problem.frame_a.rows(), w = problem.frame_a.cols();
       levels < problem.n_levels && h / 2 >= 8 && w / 2 >= 8; h /= 2, w /= 2)
    ++levels;

  FlowSolution sol;
  std::vector<double> trace;
  std::vector<std::size_t> starts;
  VectorField v;
  for (int level = levels - 1; level >= 0; --level) {
    const auto [a, b] = pyramid_level(problem, level);
    v = level == levels - 1 ? VectorField(a.rows(), a.cols()) : resize_flow(v, a.rows(), a.cols());
    sol = solve_level(problem, level, v);
    for (std::size_t s : sol.linearization_starts) starts.push_back(trace.size() + s);
    trace.insert(trace.end(), sol.objective_trace.begin(), sol.objective_trace.end());
    v = sol.v;
  }
  sol.objective_trace = std::move(trace);
  sol.linearization_starts = std::move(starts);
  return sol;
}

}  // namespace invar
