#include "invar/timewarp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "invar/error.hpp"

namespace invar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Keeps the common input defined where no warp lands when lambda = 0.
constexpr double kAnchor = 1e-9;

void require_series(const TimeSeries& s, const char* what) {
  require(s.rows() >= 2 && s.cols() >= 1, std::string(what) + ": series needs at least 2 samples");
  require(s.allFinite(), std::string(what) + ": non-finite sample");
}

Eigen::VectorXd initial_state(const LtiModel& m) {
  return m.x0.size() == 0 ? Eigen::VectorXd::Zero(m.states()) : m.x0;
}

// Response of the outputs to the inputs: y = free + L vec(u), with vec(u)
// stacking input rows.
struct Convolution {
  Eigen::MatrixXd L;
  Eigen::VectorXd free;
};

Convolution convolution(const LtiModel& m, int T) {
  const int n = m.states(), p = m.inputs(), d = m.outputs();
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n) + m.A;
  std::vector<Eigen::MatrixXd> g;  // C phi^k B
  Eigen::MatrixXd pk = m.B;
  for (int k = 0; k + 1 < T; ++k) {
    g.push_back(m.C * pk);
    pk = phi * pk;
  }
  Convolution c;
  c.L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T) * d, static_cast<Eigen::Index>(T) * p);
  c.free.resize(static_cast<Eigen::Index>(T) * d);
  Eigen::VectorXd x = initial_state(m);
  for (int t = 0; t < T; ++t) {
    c.free.segment(t * d, d) = m.C * x;
    x = phi * x;
    for (int s = 0; s < t; ++s) c.L.block(t * d, s * p, d, p) = g[t - 1 - s];
  }
  return c;
}

Eigen::VectorXd flatten(const TimeSeries& s) {
  Eigen::VectorXd v(s.size());
  for (Eigen::Index t = 0; t < s.rows(); ++t) v.segment(t * s.cols(), s.cols()) = s.row(t).transpose();
  return v;
}

TimeSeries unflatten(const Eigen::VectorXd& v, int cols) {
  TimeSeries s(v.size() / cols, cols);
  for (Eigen::Index t = 0; t < s.rows(); ++t) s.row(t) = v.segment(t * cols, cols).transpose();
  return s;
}

// Linear interpolation weights of position s on the grid: (i0, 1 - f), (i0 + 1, f).
std::pair<Eigen::Index, double> split(double s, Eigen::Index n) {
  const Eigen::Index i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), n - 2);
  return {i0, s - static_cast<double>(i0)};
}

TimeSeries warped(const TimeSeries& u0, const std::vector<double>& w) {
  TimeSeries out(static_cast<Eigen::Index>(w.size()), u0.cols());
  for (std::size_t t = 0; t < w.size(); ++t) {
    const auto [i0, f] = split(w[t], u0.rows());
    out.row(static_cast<Eigen::Index>(t)) = (1.0 - f) * u0.row(i0) + f * u0.row(i0 + 1);
  }
  return out;
}

double curvature(const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t t = 1; t + 1 < w.size(); ++t) {
    const double c = w[t + 1] - 2.0 * w[t] + w[t - 1];
    s += c * c;
  }
  return s;
}

// Warp on the sub-sample grid q / K minimizing
// coupling |u(t) - u0(w(t))|^2 + mu (second difference)^2.
std::vector<double> best_warp(const TimeSeries& u, const TimeSeries& u0, const TwdcParams& p) {
  const int T = static_cast<int>(u.rows()), K = p.resolution;
  const int Q = K * (T - 1) + 1, S = K * p.max_slope + 1;
  std::vector<double> grid(Q);
  for (int q = 0; q < Q; ++q) grid[q] = static_cast<double>(q) / K;
  const TimeSeries u0q = warped(u0, grid);
  // D[t][q][k]: best cost with w(t) = q / K reached by increment k / K.
  std::vector<double> D(static_cast<std::size_t>(T) * Q * S, kInf);
  std::vector<int> from(D.size(), -1);
  auto at = [&](int t, int q, int k) { return (static_cast<std::size_t>(t) * Q + q) * S + k; };
  auto local = [&](int t, int q) { return p.coupling * (u.row(t) - u0q.row(q)).squaredNorm(); };
  const double bend_unit = p.mu / (static_cast<double>(K) * K);
  D[at(0, 0, 0)] = local(0, 0);
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < Q; ++i)
      for (int k = 0; k < S && k <= i; ++k) {
        double best = kInf;
        int arg = -1;
        for (int kp = 0; kp < S; ++kp) {
          const double prev = D[at(t - 1, i - k, kp)];
          if (prev == kInf) continue;
          // The first step has no previous increment to bend from.
          const double bend = t == 1 ? 0.0 : bend_unit * (k - kp) * (k - kp);
          if (prev + bend < best) {
            best = prev + bend;
            arg = kp;
          }
        }
        if (arg < 0) continue;
        D[at(t, i, k)] = best + local(t, i);
        from[at(t, i, k)] = arg;
      }
  int k = 0;
  for (int kk = 1; kk < S; ++kk)
    if (D[at(T - 1, Q - 1, kk)] < D[at(T - 1, Q - 1, k)]) k = kk;
  if (D[at(T - 1, Q - 1, k)] == kInf) throw Error(ErrorCode::Infeasible, "twdc: no admissible warp");
  std::vector<double> w(T);
  int i = Q - 1;
  for (int t = T - 1; t >= 0; --t) {
    w[t] = grid[i];
    if (t == 0) break;
    const int kp = from[at(t, i, k)];
    i -= k;
    k = kp;
  }
  return w;
}

TimeSeries common_input(const TimeSeries& u1, const std::vector<double>& w1, const TimeSeries& u2,
                        const std::vector<double>& w2, const TwdcParams& p) {
  const int T = static_cast<int>(u1.rows());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(T, T) * kAnchor;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(T, u1.cols());
  for (const auto& [u, w] : {std::pair{&u1, &w1}, std::pair{&u2, &w2}})
    for (int t = 0; t < T; ++t) {
      const auto [i0, f] = split((*w)[t], T);
      const double a0 = 1.0 - f, a1 = f;
      M(i0, i0) += p.coupling * a0 * a0;
      M(i0 + 1, i0 + 1) += p.coupling * a1 * a1;
      M(i0, i0 + 1) += p.coupling * a0 * a1;
      M(i0 + 1, i0) += p.coupling * a0 * a1;
      rhs.row(i0) += p.coupling * a0 * u->row(t);
      rhs.row(i0 + 1) += p.coupling * a1 * u->row(t);
    }
  for (int t = 0; t + 1 < T; ++t) {
    M(t, t) += p.lambda;
    M(t + 1, t + 1) += p.lambda;
    M(t, t + 1) -= p.lambda;
    M(t + 1, t) -= p.lambda;
  }
  return M.ldlt().solve(rhs);
}

struct Side {
  const TimeSeries* y;
  Eigen::VectorXd target;  // vec(y) - free response
  TimeSeries u;
  std::vector<double> w;
};

}  // namespace

DtwResult dtw(const TimeSeries& x, const TimeSeries& y) {
  require_series(x, "dtw");
  require_series(y, "dtw");
  require(x.cols() == y.cols(), "dtw: feature dimensions differ");
  const Eigen::Index T = x.rows(), S = y.rows();
  Eigen::MatrixXd D(T, S);
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index k = 0; k < S; ++k) {
      const double c = (x.row(i) - y.row(k)).squaredNorm();
      double best = 0.0;
      if (i > 0 || k > 0) {
        best = kInf;
        if (i > 0 && k > 0) best = std::min(best, D(i - 1, k - 1));
        if (i > 0) best = std::min(best, D(i - 1, k));
        if (k > 0) best = std::min(best, D(i, k - 1));
      }
      D(i, k) = c + best;
    }
  DtwResult r;
  r.cost = D(T - 1, S - 1);
  Eigen::Index i = T - 1, k = S - 1;
  r.path.emplace_back(static_cast<int>(i), static_cast<int>(k));
  while (i > 0 || k > 0) {
    const double diag = i > 0 && k > 0 ? D(i - 1, k - 1) : kInf;
    const double up = i > 0 ? D(i - 1, k) : kInf;
    const double left = k > 0 ? D(i, k - 1) : kInf;
    if (diag <= up && diag <= left) {
      --i;
      --k;
    } else if (up <= left) {
      --i;
    } else {
      --k;
    }
    r.path.emplace_back(static_cast<int>(i), static_cast<int>(k));
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

double series_l2(const TimeSeries& x, const TimeSeries& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), "series_l2: shapes differ");
  return (x - y).squaredNorm();
}

void validate(const LtiModel& m) {
  const Eigen::Index n = m.A.rows();
  require(n >= 1 && m.A.cols() == n, "lti: A must be square");
  require(m.B.rows() == n && m.B.cols() >= 1, "lti: B must have n rows");
  require(m.C.cols() == n && m.C.rows() >= 1, "lti: C must have n columns");
  require(m.x0.size() == 0 || m.x0.size() == n, "lti: initial state has the wrong size");
  require(m.A.allFinite() && m.B.allFinite() && m.C.allFinite() && m.x0.allFinite(), "lti: non-finite entries");
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n) + m.A;
  const double rho = phi.eigenvalues().cwiseAbs().maxCoeff();
  require(rho < 1.05, "lti: discretized dynamics have spectral radius >= 1.05");
}

TimeSeries simulate(const LtiModel& model, const TimeSeries& u, const std::vector<double>& warp) {
  validate(model);
  require(u.cols() == model.inputs(), "simulate: input dimension does not match B");
  require(u.rows() >= 1 && u.allFinite(), "simulate: bad input series");
  const Eigen::Index T = warp.empty() ? u.rows() : static_cast<Eigen::Index>(warp.size());
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(model.states(), model.states()) + model.A;
  TimeSeries out(T, model.outputs());
  Eigen::VectorXd m = initial_state(model);
  for (Eigen::Index t = 0; t < T; ++t) {
    out.row(t) = (model.C * m).transpose();
    Eigen::VectorXd ut;
    if (warp.empty()) {
      ut = u.row(t).transpose();
    } else {
      const double s = warp[t];
      require(std::isfinite(s) && s >= 0.0 && s <= u.rows() - 1.0, "simulate: warp leaves the input");
      const Eigen::Index i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), u.rows() - 1);
      const Eigen::Index i1 = std::min<Eigen::Index>(i0 + 1, u.rows() - 1);
      const double f = s - i0;
      ut = ((1.0 - f) * u.row(i0) + f * u.row(i1)).transpose();
    }
    m = phi * m + model.B * ut;
  }
  return out;
}

TwdcResult twdc(const TimeSeries& x, const TimeSeries& y, const LtiModel& model, const TwdcParams& p) {
  validate(model);
  require_series(x, "twdc");
  require_series(y, "twdc");
  require(x.rows() == y.rows(), "twdc: series lengths differ");
  require(x.cols() == model.outputs() && y.cols() == model.outputs(), "twdc: output dimension does not match C");
  require(p.lambda >= 0.0 && p.mu >= 0.0 && p.ridge >= 0.0 && p.coupling > 0.0, "twdc: weights must be >= 0");
  require(p.max_slope >= 1 && p.resolution >= 1 && p.iterations >= 0, "twdc: bad slope, resolution or budget");
  const int T = static_cast<int>(x.rows()), m = model.inputs();
  const Convolution conv = convolution(model, T);
  const Eigen::MatrixXd LtL = conv.L.transpose() * conv.L;

  // The last input never reaches an output; conditioning is judged on the rest.
  const Eigen::Index obs = static_cast<Eigen::Index>(T - 1) * m;
  const Eigen::MatrixXd N =
      LtL.topLeftCorner(obs, obs) + p.ridge * Eigen::MatrixXd::Identity(obs, obs);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(N, Eigen::EigenvaluesOnly).eigenvalues();
  const double cond = ev.minCoeff() > 0.0 ? ev.maxCoeff() / ev.minCoeff() : kInf;
  if (!(cond <= p.max_condition))
    throw Error(ErrorCode::Conditioning, "twdc: deconvolution condition number " + std::to_string(cond));

  Side side[2] = {{&x, flatten(x) - conv.free, {}, {}}, {&y, flatten(y) - conv.free, {}, {}}};
  const Eigen::Index nu = static_cast<Eigen::Index>(T) * m;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nu, nu);
  std::vector<double> identity(T);
  for (int t = 0; t < T; ++t) identity[t] = t;

  // Plain ridge deconvolution; the unobserved last input falls to zero.
  const Eigen::LDLT<Eigen::MatrixXd> ridge_solver(LtL + std::max(p.ridge, kAnchor) * I);
  for (Side& s : side) {
    s.u = unflatten(ridge_solver.solve(conv.L.transpose() * s.target), m);
    s.w = identity;
  }
  TimeSeries u0 = common_input(side[0].u, side[0].w, side[1].u, side[1].w, p);

  auto objective = [&]() {
    double j = kAnchor * u0.squaredNorm();
    for (const Side& s : side) {
      const Eigen::VectorXd fu = flatten(s.u);
      j += (s.target - conv.L * fu).squaredNorm() + p.ridge * fu.squaredNorm();
      j += p.coupling * (s.u - warped(u0, s.w)).squaredNorm() + p.mu * curvature(s.w);
    }
    for (int t = 0; t + 1 < T; ++t) j += p.lambda * (u0.row(t + 1) - u0.row(t)).squaredNorm();
    return j;
  };

  TwdcResult r;
  r.objective.push_back(objective());
  const Eigen::LDLT<Eigen::MatrixXd> coupled(LtL + (p.ridge + p.coupling) * I);
  for (int it = 0; it < p.iterations; ++it) {
    for (Side& s : side)
      s.u = unflatten(coupled.solve(conv.L.transpose() * s.target + p.coupling * flatten(warped(u0, s.w))), m);
    for (Side& s : side) s.w = best_warp(s.u, u0, p);
    u0 = common_input(side[0].u, side[0].w, side[1].u, side[1].w, p);
    const double j = objective();
    const double prev = r.objective.back();
    if (j > prev + 1e-9 * std::max(1.0, std::abs(prev)))
      throw Error(ErrorCode::SolverFailure, "twdc: objective increased");
    r.objective.push_back(j);
    if (prev - j <= 1e-12 * std::max(1.0, std::abs(prev))) break;
  }
  r.cost = r.objective.back();
  r.u0 = u0;
  r.u1 = side[0].u;
  r.u2 = side[1].u;
  r.w1 = side[0].w;
  r.w2 = side[1].w;
  return r;
}

namespace experimental {

LtiModel fit_lti(const TimeSeries& y, const TimeSeries& u) {
  require(y.rows() == u.rows() && y.rows() >= 3, "fit_lti: series lengths differ or are too short");
  const Eigen::Index n = y.cols(), m = u.cols(), T = y.rows();
  Eigen::MatrixXd X(T - 1, n + m);
  X << y.topRows(T - 1), u.topRows(T - 1);
  const Eigen::MatrixXd dY = y.bottomRows(T - 1) - y.topRows(T - 1);
  const Eigen::MatrixXd theta = X.colPivHouseholderQr().solve(dY);  // (n + m) x n
  LtiModel model;
  model.A = theta.topRows(n).transpose();
  model.B = theta.bottomRows(m).transpose();
  model.C = Eigen::MatrixXd::Identity(n, n);
  model.x0 = y.row(0).transpose();
  return model;
}

}  // namespace experimental

}  // namespace invar
