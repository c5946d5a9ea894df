#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace invar {

enum class BasisKind { Gaussian, Box };

/// Bumps on the line: exp(-(t - c)^2 / (2 w^2)) or the indicator of
/// [c - w/2, c + w/2].
struct FlatBasis {
  BasisKind kind = BasisKind::Gaussian;
  std::vector<double> centres;
  double width = 1.0;

  int size() const { return static_cast<int>(centres.size()); }
  double eval(int k, double t) const;
};

/// x(t) = sum_k alpha_k b_k(t).
double radiance(const FlatBasis& basis, const Eigen::VectorXd& alpha, double t);

/// Uniform ball of the given radius around mean in coefficient space.
struct ClassModel {
  Eigen::VectorXd mean;
  double radius = 0.0;
};

struct FlatScene {
  FlatBasis basis;
  ClassModel pos;  // c = +1
  ClassModel neg;  // c = -1
};

/// True when the two coefficient balls do not intersect.
bool disjoint(const FlatScene& scene);

Eigen::VectorXd sample_coefficients(const ClassModel& cls, std::mt19937_64& rng);

/// Sample i reads the radiance blurred by N(0, (s eps)^2) at world position
/// s * sites[i], plus N(0, noise^2).
struct Sensor {
  double scale = 1.0;
  double pitch = 1.0;
  std::vector<double> sites;
  double noise = 0.0;

  /// n sites at pitch spacing, centred on 0.
  static Sensor uniform(int n, double pitch, double noise, double scale = 1.0);
};

/// Only [a, b] of the world line shows the object.  Pixels whose quantization
/// interval [s t_i - s eps, s t_i + s eps] leaves it read background, uniform
/// on [bg_lo, bg_hi].
struct Occlusion {
  double a = 0.0;
  double b = 0.0;
  double bg_lo = 0.0;
  double bg_hi = 1.0;
};

/// sites x basis matrix of blurred, sampled bumps.
Eigen::MatrixXd blur_matrix(const FlatBasis& basis, const Sensor& sensor);

Eigen::VectorXd measure(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                        std::mt19937_64& rng, const std::optional<Occlusion>& occlusion = std::nullopt);

/// blur_matrix^T blur_matrix / noise^2.
Eigen::MatrixXd fisher_information(const FlatBasis& basis, const Sensor& sensor);

/// Mean outer product of the score d/d alpha log p(y | alpha) over simulated
/// measurements of a fixed alpha.
Eigen::MatrixXd empirical_fisher(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                                 int trials, std::uint64_t seed);

struct BhattacharyyaParams {
  int max_dims = 4;        // wider samples are averaged down in contiguous groups
  int queries = 2500;      // per class where the integrand is averaged; 0: all samples
  int bootstrap = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 1;  // bootstrap and trial streams
  int threads = 0;         // 0: hardware concurrency
};

struct BhattacharyyaEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int dims = 0;
};

/// Averages adjacent columns down to at most max_dims.
Eigen::MatrixXd pool_columns(const Eigen::MatrixXd& samples, int max_dims);

/// Integral of sqrt(p+ p-) from Gaussian KDEs (Silverman bandwidth per class
/// and dimension, leave-one-out at the query's own class) built on all rows,
/// with sqrt(p+ p-) / mixture averaged over the query rows.  Rows are samples.
BhattacharyyaEstimate bhattacharyya_from_samples(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                                                 const BhattacharyyaParams& params = {});

/// generator(c, rng) draws one sample of class c in {+1, -1}.  Trial k of
/// class c gets its own stream seeded from (seed, c, k).
using SampleGenerator = std::function<Eigen::VectorXd(int, std::mt19937_64&)>;

BhattacharyyaEstimate bhattacharyya_error(const SampleGenerator& generator, int n_mc,
                                          const BhattacharyyaParams& params = {});

std::mt19937_64 trial_stream(std::uint64_t seed, int cls, int trial);

struct CurvePoint {
  double scale = 1.0;
  BhattacharyyaEstimate error;
};

/// Error of a fixed sensor placed at each scale in turn.
std::vector<CurvePoint> passive_curve(const FlatScene& scene, const Sensor& sensor, const std::vector<double>& scales,
                                      int n_mc, const BhattacharyyaParams& params = {},
                                      const std::optional<Occlusion>& occlusion = std::nullopt);

struct ActiveBudget {
  double min_scale = 1.0;  // closest reachable scale
  int translations = 1;    // K shifts of pitch / K
  int repeats = 1;         // reads averaged per site
};

/// Samples at s = min_scale and sites t_i + k pitch / K, each the mean of
/// `repeats` reads, ordered by position.
Eigen::VectorXd active_measure(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                               const ActiveBudget& budget, std::mt19937_64& rng,
                               const std::optional<Occlusion>& occlusion = std::nullopt);

BhattacharyyaEstimate active_error(const FlatScene& scene, const Sensor& sensor, const ActiveBudget& budget, int n_mc,
                                   const BhattacharyyaParams& params = {},
                                   const std::optional<Occlusion>& occlusion = std::nullopt);

}  // namespace invar
