#include "invar/depthorder.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "invar/error.hpp"

namespace invar {

namespace {

constexpr double kTol = 1e-9;

// Dense tableau simplex for min c^T x subject to A x = b, x >= 0, with Bland's
// rule throughout.
class Simplex {
 public:
  Simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) : m_(A.rows()), n_(A.cols()) {
    tab_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double s = b(i) < 0.0 ? -1.0 : 1.0;
      tab_.row(i).head(n_) = s * A.row(i);
      tab_(i, n_ + i) = 1.0;
      tab_(i, n_ + m_) = s * b(i);
    }
    allowed_.assign(n_ + m_, true);
    basis_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  // Phase I; returns false when infeasible.
  bool find_feasible() {
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
    cost.tail(m_).setOnes();
    set_objective(cost);
    run();
    if (-tab_(m_, n_ + m_) > 1e-7) return false;
    for (Eigen::Index j = n_; j < n_ + m_; ++j) allowed_[j] = false;
    // Pivot degenerate artificials out where possible.
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j)
        if (std::abs(tab_(i, j)) > kTol) {
          pivot(i, j);
          break;
        }
    }
    return true;
  }

  void minimize(const Eigen::VectorXd& c) {
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
    cost.head(n_) = c;
    set_objective(cost);
    if (!run()) throw Error(ErrorCode::SolverFailure, "depth_order: unbounded linear program");
  }

  // Keeps only the optimal face: columns with positive reduced cost stay zero.
  void freeze_optimal_face() {
    for (Eigen::Index j = 0; j < n_; ++j)
      if (tab_(m_, j) > kTol) allowed_[j] = false;
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) x(basis_[i]) = tab_(i, n_ + m_);
    return x;
  }

 private:
  void set_objective(const Eigen::VectorXd& cost) {
    tab_.row(m_).setZero();
    tab_.row(m_).head(n_ + m_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost(basis_[i]);
      if (cb != 0.0) tab_.row(m_) -= cb * tab_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    tab_.row(r) /= tab_(r, c);
    for (Eigen::Index i = 0; i <= m_; ++i)
      if (i != r && tab_(i, c) != 0.0) tab_.row(i) -= tab_(i, c) * tab_.row(r);
    basis_[r] = c;
  }

  // Returns false when unbounded.
  bool run() {
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n_ + m_; ++j)
        if (allowed_[j] && tab_(m_, j) < -kTol) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (tab_(i, enter) <= kTol) continue;
        const double ratio = tab_(i, n_ + m_) / tab_(i, enter);
        if (leave < 0 || ratio < best - kTol || (ratio <= best + kTol && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  Eigen::Index m_, n_;
  Eigen::MatrixXd tab_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> allowed_;
};

void check_constraints(int K, const std::vector<OcclusionConstraint>& constraints) {
  for (const auto& c : constraints)
    require(c.occluded >= 0 && c.occluded < K && c.occluder >= 0 && c.occluder < K,
            "depth_order: constraint refers to an unknown region");
}

}  // namespace

RegionGraph build_region_graph(const LabelImage& labels, const Raster& img, const VectorField& flow,
                               double alpha, double beta, double eps) {
  require(labels.size() > 0, "build_region_graph: empty segmentation");
  require(img.rows() == labels.rows() && img.cols() == labels.cols() && flow.height() == labels.rows() &&
              flow.width() == labels.cols(),
          "build_region_graph: image, flow and labels differ in size");
  require(alpha >= 0.0 && beta >= 0.0 && eps > 0.0, "build_region_graph: alpha, beta >= 0 and eps > 0");
  require(labels.minCoeff() >= 0, "build_region_graph: negative label");
  require_finite(img, "build_region_graph");
  RegionGraph g;
  g.regions = labels.maxCoeff() + 1;
  g.alpha = alpha;
  g.beta = beta;
  g.eps = eps;
  g.weight = Eigen::MatrixXd::Zero(g.regions, g.regions);
  const int r = static_cast<int>(std::ceil(eps));
  const Eigen::Index H = labels.rows(), W = labels.cols();
  for (Eigen::Index y = 0; y < H; ++y)
    for (Eigen::Index x = 0; x < W; ++x)
      for (int dy = 0; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          // Each unordered pair once: forward half-plane only.
          if (dy == 0 && dx <= 0) continue;
          if (dx * dx + dy * dy >= eps * eps) continue;
          const Eigen::Index y2 = y + dy, x2 = x + dx;
          if (y2 >= H || x2 < 0 || x2 >= W) continue;
          const int a = labels(y, x), b = labels(y2, x2);
          if (a == b) continue;
          const double di = img(y, x) - img(y2, x2);
          const double du = flow.u(y, x) - flow.u(y2, x2), dv = flow.v(y, x) - flow.v(y2, x2);
          const double w = alpha * std::exp(-di * di) + beta * std::exp(-(du * du + dv * dv));
          g.weight(a, b) += w;
          g.weight(b, a) += w;
        }
  return g;
}

double labeling_objective(const RegionGraph& graph, const std::vector<int>& depth) {
  require(static_cast<int>(depth.size()) == graph.regions, "labeling_objective: wrong number of labels");
  double s = 0.0;
  for (int a = 0; a < graph.regions; ++a)
    for (int b = a + 1; b < graph.regions; ++b) s += graph.weight(a, b) * std::abs(depth[a] - depth[b]);
  return s;
}

std::optional<std::vector<int>> occlusion_cycle(int regions, const std::vector<OcclusionConstraint>& constraints) {
  check_constraints(regions, constraints);
  std::vector<std::vector<int>> out(regions);
  for (const auto& c : constraints) out[c.occluded].push_back(c.occluder);
  // Iterative DFS with colours; the grey stack is the current path.
  std::vector<int> colour(regions, 0), parent(regions, -1);
  for (int s = 0; s < regions; ++s) {
    if (colour[s]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{s, 0}};
    colour[s] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == out[v].size()) {
        colour[v] = 2;
        stack.pop_back();
        continue;
      }
      const int w = out[v][next++];
      if (colour[w] == 1) {
        std::vector<int> cycle{w};
        for (int u = v; u != w; u = parent[u]) cycle.push_back(u);
        std::reverse(cycle.begin() + 1, cycle.end());
        return cycle;
      }
      if (colour[w] == 0) {
        colour[w] = 1;
        parent[w] = v;
        stack.emplace_back(w, 0);
      }
    }
  }
  return std::nullopt;
}

DepthLabeling depth_order(const RegionGraph& graph, const std::vector<OcclusionConstraint>& constraints) {
  const int K = graph.regions;
  require(K >= 1 && graph.weight.rows() == K && graph.weight.cols() == K, "depth_order: malformed region graph");
  require(graph.weight.allFinite() && graph.weight.minCoeff() >= 0.0, "depth_order: weights must be >= 0");
  if (const auto cycle = occlusion_cycle(K, constraints)) {
    std::string path;
    for (int r : *cycle) path += std::to_string(r) + " -> ";
    path += std::to_string(cycle->front());
    throw Error(ErrorCode::CyclicOcclusion, "depth_order: cyclic occlusion " + path);
  }

  DepthLabeling out;
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b)
      if (graph.weight(a, b) > 0.0) edges.emplace_back(a, b);

  if (edges.empty()) {
    // Longest path from the sources of the constraint DAG: the smallest labels.
    std::vector<std::vector<int>> succ(K);
    std::vector<int> indeg(K, 0);
    for (const auto& c : constraints) {
      succ[c.occluded].push_back(c.occluder);
      ++indeg[c.occluder];
    }
    out.depth.assign(K, 0);
    std::queue<int> q;
    for (int r = 0; r < K; ++r)
      if (indeg[r] == 0) q.push(r);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : succ[v]) {
        out.depth[w] = std::max(out.depth[w], out.depth[v] + 1);
        if (--indeg[w] == 0) q.push(w);
      }
    }
    out.method = "longest-path";
  } else {
    // Columns: c (K), p_e and n_e per edge, one surplus per constraint.
    const Eigen::Index E = static_cast<Eigen::Index>(edges.size());
    const Eigen::Index C = static_cast<Eigen::Index>(constraints.size());
    const Eigen::Index n = K + 2 * E + C;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(E + C, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(E + C);
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n), tie = Eigen::VectorXd::Zero(n);
    for (Eigen::Index e = 0; e < E; ++e) {
      const auto [a, bb] = edges[e];
      A(e, a) = 1.0;
      A(e, bb) = -1.0;
      A(e, K + 2 * e) = -1.0;
      A(e, K + 2 * e + 1) = 1.0;
      cost(K + 2 * e) = cost(K + 2 * e + 1) = graph.weight(a, bb);
    }
    for (Eigen::Index k = 0; k < C; ++k) {
      A(E + k, constraints[k].occluder) += 1.0;
      A(E + k, constraints[k].occluded) -= 1.0;
      A(E + k, K + 2 * E + k) = -1.0;
      b(E + k) = 1.0;
    }
    tie.head(K).setOnes();
    Simplex lp(A, b);
    if (!lp.find_feasible()) throw Error(ErrorCode::Infeasible, "depth_order: infeasible linear program");
    lp.minimize(cost);
    lp.freeze_optimal_face();
    lp.minimize(tie);
    const Eigen::VectorXd x = lp.solution();
    out.depth.resize(K);
    for (int r = 0; r < K; ++r) out.depth[r] = static_cast<int>(std::lround(x(r)));
    out.method = "simplex";
  }
  for (const auto& c : constraints)
    if (out.depth[c.occluder] < out.depth[c.occluded] + 1)
      throw Error(ErrorCode::SolverFailure, "depth_order: rounded labeling violates an occlusion constraint");
  out.objective = labeling_objective(graph, out.depth);
  return out;
}

}  // namespace invar
