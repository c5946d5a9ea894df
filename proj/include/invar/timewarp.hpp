#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace invar {

/// One sample per row, one feature per column.
using TimeSeries = Eigen::MatrixXd;

/// Index pairs (i, k) from (0, 0) to (T-1, S-1).
using WarpPath = std::vector<std::pair<int, int>>;

struct DtwResult {
  double cost = 0.0;
  WarpPath path;
};

/// Dynamic time warping with squared Euclidean local cost and steps
/// (1,1), (1,0), (0,1).  Backtracking prefers the diagonal, then (1,0).
DtwResult dtw(const TimeSeries& x, const TimeSeries& y);

/// Sum of squared differences of equal-length series, i.e. DTW restricted to
/// the diagonal path.
double series_l2(const TimeSeries& x, const TimeSeries& y);

struct LtiModel {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd C;  // d x n
  Eigen::VectorXd x0;  // n; empty means zero

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
};

/// Checks dimensions and that the unit-step Euler matrix I + A has spectral
/// radius below 1.05.
void validate(const LtiModel& model);

/// Forward Euler with unit step: m(0) = x0, m(t+1) = m(t) + A m(t) + B u(w(t)),
/// output row t is C m(t).  u(w) interpolates the rows of u linearly; an empty
/// warp is the identity.  The output has as many rows as the warp (or u).
TimeSeries simulate(const LtiModel& model, const TimeSeries& u, const std::vector<double>& warp = {});

struct TwdcParams {
  double lambda = 1.0;   // smoothness of the common input
  double mu = 1.0;       // second difference penalty on the warps
  double ridge = 1e-6;   // deconvolution ridge
  double coupling = 1.0;  // weight of |u_j - u_0(w_j)|^2
  int max_slope = 2;      // warp increments lie in [0, max_slope]
  int resolution = 4;     // warps live on the grid of 1/resolution samples
  int iterations = 10;
  double max_condition = 1e8;
};

struct TwdcResult {
  double cost = 0.0;
  std::vector<double> objective;  // after initialization and after each outer iteration
  TimeSeries u0;
  TimeSeries u1, u2;
  std::vector<double> w1, w2;
};

/// Time warping under dynamic constraints with a known model.  Minimizes
///   sum_j |y_j - C m_j(u_j)|^2 + ridge |u_j|^2 + coupling |u_j - u_0(w_j)|^2
///         + mu sum_t (w_j(t+1) - 2 w_j(t) + w_j(t-1))^2
///   + lambda sum_t |u_0(t+1) - u_0(t)|^2
/// by exact block coordinate descent over (u_1, u_2), (w_1, w_2) and u_0.
/// Warps map the sample grid into [0, T-1] on a sub-sample grid with
/// w(0) = 0 and w(T-1) = T-1; u_0(w) interpolates linearly.  Both series must have the same length.  Throws
/// Error(Conditioning) when the ridge deconvolution matrix has condition
/// number above max_condition, and Error(SolverFailure) if the objective
/// ever increases.
TwdcResult twdc(const TimeSeries& x, const TimeSeries& y, const LtiModel& model, const TwdcParams& params = {});

namespace experimental {

/// Least-squares fit of A and B for a fully observed state (C = I): regresses
/// y(t+1) - y(t) on [y(t), u(t)].  Blind identification is not attempted.
LtiModel fit_lti(const TimeSeries& y, const TimeSeries& u);

}  // namespace experimental

}  // namespace invar
