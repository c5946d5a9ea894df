#include "invar/flatland.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "invar/error.hpp"

namespace invar {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_basis(const FlatBasis& basis) {
  require(basis.size() > 0, "flatland: empty basis");
  require(std::isfinite(basis.width) && basis.width > 0.0, "flatland: basis width must be > 0");
  for (double c : basis.centres) require(std::isfinite(c), "flatland: non-finite basis centre");
}

void check_sensor(const Sensor& s) {
  require(std::isfinite(s.scale) && s.scale >= 1.0, "flatland: sensor scale must be >= 1");
  require(std::isfinite(s.pitch) && s.pitch > 0.0, "flatland: pixel pitch must be > 0");
  require(!s.sites.empty(), "flatland: sensor has no sites");
  for (double t : s.sites) require(std::isfinite(t), "flatland: non-finite sample site");
  require(std::isfinite(s.noise) && s.noise >= 0.0, "flatland: noise must be >= 0");
}

void check_class(const ClassModel& c, int n) {
  require(c.mean.size() == n, "flatland: class mean does not match the basis");
  require(c.mean.allFinite() && std::isfinite(c.radius) && c.radius >= 0.0, "flatland: bad class model");
}

void check_scene(const FlatScene& scene) {
  check_basis(scene.basis);
  check_class(scene.pos, scene.basis.size());
  check_class(scene.neg, scene.basis.size());
}

// Integral of N(t - mu; sigma^2) b_k(t) dt.
double blurred_bump(const FlatBasis& basis, int k, double mu, double sigma) {
  const double c = basis.centres[k], w = basis.width;
  if (basis.kind == BasisKind::Box)
    return normal_cdf((c + 0.5 * w - mu) / sigma) - normal_cdf((c - 0.5 * w - mu) / sigma);
  const double v = w * w + sigma * sigma;
  return w / std::sqrt(v) * std::exp(-(mu - c) * (mu - c) / (2.0 * v));
}

// Gaussian KDE of one class, rows sorted along the dimension that best
// separates points relative to the bandwidth so queries can scan a window.
class Kde {
 public:
  explicit Kde(const Eigen::MatrixXd& pts) : n_(pts.rows()), d_(pts.cols()) {
    const double factor = std::pow(4.0 / ((d_ + 2.0) * n_), 1.0 / (d_ + 4.0));
    inv_h_.resize(d_);
    log_norm_ = -0.5 * d_ * std::log(2.0 * kPi);
    double best = -1.0;
    for (Eigen::Index j = 0; j < d_; ++j) {
      const auto col = pts.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / std::max<Eigen::Index>(n_ - 1, 1));
      const double h = std::max(sd, 1e-9 * std::max(1.0, std::abs(mean))) * factor;
      inv_h_(j) = 1.0 / h;
      log_norm_ -= std::log(h);
      const double spread = (col.maxCoeff() - col.minCoeff()) / h;
      if (spread > best) {
        best = spread;
        axis_ = j;
      }
    }
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) { return pts(a, axis_) < pts(b, axis_); });
    scaled_.resize(n_ * d_);
    key_.resize(n_);
    for (Eigen::Index r = 0; r < n_; ++r) {
      for (Eigen::Index j = 0; j < d_; ++j) scaled_[r * d_ + j] = pts(order_[r], j) * inv_h_(j);
      key_[r] = scaled_[r * d_ + axis_];
    }
  }

  // Density at q, leaving out the original row `skip` (or none for -1).
  double density(const Eigen::RowVectorXd& q, Eigen::Index skip) const {
    const Eigen::RowVectorXd z = q.cwiseProduct(inv_h_.transpose());
    // exp(-r^2 / 2) < 1e-16 beyond 8.6 bandwidths, along the axis or overall.
    const double centre = z(axis_);
    auto lo = std::lower_bound(key_.begin(), key_.end(), centre - kReach);
    auto hi = std::upper_bound(key_.begin(), key_.end(), centre + kReach);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const Eigen::Index r = it - key_.begin();
      if (order_[r] == skip) continue;
      const double* row = &scaled_[r * d_];
      double d2 = 0.0;
      for (Eigen::Index j = 0; j < d_ && d2 <= kReach * kReach; ++j) d2 += (row[j] - z(j)) * (row[j] - z(j));
      if (d2 <= kReach * kReach) s += std::exp(-0.5 * d2);
    }
    const Eigen::Index count = skip >= 0 ? n_ - 1 : n_;
    return count > 0 ? s * std::exp(log_norm_) / count : 0.0;
  }

 private:
  static constexpr double kReach = 8.6;
  Eigen::Index n_, d_, axis_ = 0;
  Eigen::VectorXd inv_h_;
  double log_norm_ = 0.0;
  std::vector<Eigen::Index> order_;
  std::vector<double> scaled_;  // row-major, divided by the bandwidths
  std::vector<double> key_;
};

int thread_count(int requested, Eigen::Index work) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  t = std::max(t, 1);
  return static_cast<int>(std::min<Eigen::Index>(t, std::max<Eigen::Index>(work / 256, 1)));
}

// Runs body(i) for i in [0, n) over contiguous chunks.
template <class Body>
void parallel_for(Eigen::Index n, int threads, Body body) {
  const int t = thread_count(threads, n);
  if (t == 1) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int k = 0; k < t; ++k)
    pool.emplace_back([&, k] {
      for (Eigen::Index i = n * k / t; i < n * (k + 1) / t; ++i) body(i);
    });
  for (auto& th : pool) th.join();
}

Eigen::MatrixXd draw(const SampleGenerator& gen, int cls, int n, const BhattacharyyaParams& p) {
  std::vector<Eigen::VectorXd> rows(n);
  parallel_for(n, p.threads, [&](Eigen::Index k) {
    std::mt19937_64 rng = trial_stream(p.seed, cls, static_cast<int>(k));
    rows[k] = gen(cls, rng);
  });
  const Eigen::Index d = rows.front().size();
  Eigen::MatrixXd out(n, d);
  for (int k = 0; k < n; ++k) {
    require(rows[k].size() == d && rows[k].allFinite(), "bhattacharyya_error: generator samples differ in size");
    out.row(k) = rows[k].transpose();
  }
  return out;
}

Sensor at_scale(const Sensor& s, double scale) {
  Sensor out = s;
  out.scale = scale;
  return out;
}

}  // namespace

double FlatBasis::eval(int k, double t) const {
  const double c = centres.at(k);
  if (kind == BasisKind::Box) return std::abs(t - c) <= 0.5 * width ? 1.0 : 0.0;
  return std::exp(-(t - c) * (t - c) / (2.0 * width * width));
}

double radiance(const FlatBasis& basis, const Eigen::VectorXd& alpha, double t) {
  require(alpha.size() == basis.size(), "radiance: coefficient count differs from the basis");
  double x = 0.0;
  for (int k = 0; k < basis.size(); ++k) x += alpha(k) * basis.eval(k, t);
  return x;
}

bool disjoint(const FlatScene& scene) {
  check_scene(scene);
  return (scene.pos.mean - scene.neg.mean).norm() > scene.pos.radius + scene.neg.radius;
}

Eigen::VectorXd sample_coefficients(const ClassModel& cls, std::mt19937_64& rng) {
  const Eigen::Index n = cls.mean.size();
  require(n > 0, "sample_coefficients: empty class mean");
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (Eigen::Index k = 0; k < n; ++k) dir(k) = g(rng);
    norm = dir.norm();
  }
  const double r = cls.radius * std::pow(u(rng), 1.0 / static_cast<double>(n));
  return cls.mean + r / norm * dir;
}

Sensor Sensor::uniform(int n, double pitch, double noise, double scale) {
  require(n >= 1, "Sensor::uniform: need at least one site");
  Sensor s;
  s.scale = scale;
  s.pitch = pitch;
  s.noise = noise;
  for (int i = 0; i < n; ++i) s.sites.push_back((i - 0.5 * (n - 1)) * pitch);
  return s;
}

Eigen::MatrixXd blur_matrix(const FlatBasis& basis, const Sensor& sensor) {
  check_basis(basis);
  check_sensor(sensor);
  const double sigma = sensor.scale * sensor.pitch;
  Eigen::MatrixXd m(sensor.sites.size(), basis.size());
  for (std::size_t i = 0; i < sensor.sites.size(); ++i)
    for (int k = 0; k < basis.size(); ++k) m(i, k) = blurred_bump(basis, k, sensor.scale * sensor.sites[i], sigma);
  return m;
}

Eigen::VectorXd measure(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                        std::mt19937_64& rng, const std::optional<Occlusion>& occlusion) {
  require(alpha.size() == basis.size() && alpha.allFinite(), "measure: coefficients do not match the basis");
  if (occlusion)
    require(occlusion->a <= occlusion->b && occlusion->bg_lo <= occlusion->bg_hi, "measure: bad occlusion interval");
  Eigen::VectorXd y = blur_matrix(basis, sensor) * alpha;
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> bg(occlusion ? occlusion->bg_lo : 0.0, occlusion ? occlusion->bg_hi : 1.0);
  const double half = sensor.scale * sensor.pitch;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (occlusion) {
      const double t = sensor.scale * sensor.sites[i];
      if (t - half < occlusion->a || t + half > occlusion->b) {
        y(i) = bg(rng);
        continue;
      }
    }
    if (sensor.noise > 0.0) y(i) += sensor.noise * g(rng);
  }
  return y;
}

Eigen::MatrixXd fisher_information(const FlatBasis& basis, const Sensor& sensor) {
  require(sensor.noise > 0.0, "fisher_information: needs noise > 0");
  const Eigen::MatrixXd b = blur_matrix(basis, sensor);
  return b.transpose() * b / (sensor.noise * sensor.noise);
}

Eigen::MatrixXd empirical_fisher(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                                 int trials, std::uint64_t seed) {
  require(trials >= 1, "empirical_fisher: trials must be >= 1");
  require(sensor.noise > 0.0, "empirical_fisher: needs noise > 0");
  const Eigen::MatrixXd b = blur_matrix(basis, sensor);
  const Eigen::VectorXd mean = b * alpha;
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(alpha.size(), alpha.size());
  for (int k = 0; k < trials; ++k) {
    const Eigen::VectorXd score = b.transpose() * (measure(basis, alpha, sensor, rng) - mean) /
                                  (sensor.noise * sensor.noise);
    acc += score * score.transpose();
  }
  return acc / trials;
}

Eigen::MatrixXd pool_columns(const Eigen::MatrixXd& samples, int max_dims) {
  require(max_dims >= 1, "pool_columns: max_dims must be >= 1");
  const Eigen::Index d = samples.cols();
  if (d <= max_dims) return samples;
  Eigen::MatrixXd out(samples.rows(), max_dims);
  for (int g = 0; g < max_dims; ++g) {
    const Eigen::Index lo = d * g / max_dims, hi = d * (g + 1) / max_dims;
    out.col(g) = samples.middleCols(lo, hi - lo).rowwise().mean();
  }
  return out;
}

BhattacharyyaEstimate bhattacharyya_from_samples(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                                                 const BhattacharyyaParams& params) {
  require(pos.rows() >= 2 && neg.rows() >= 2, "bhattacharyya: need at least two samples per class");
  require(pos.cols() == neg.cols() && pos.cols() > 0, "bhattacharyya: classes differ in dimension");
  require(pos.allFinite() && neg.allFinite(), "bhattacharyya: non-finite sample");
  require(params.bootstrap >= 1 && params.confidence > 0.0 && params.confidence < 1.0,
          "bhattacharyya: bad bootstrap settings");
  const Eigen::MatrixXd p = pool_columns(pos, params.max_dims), q = pool_columns(neg, params.max_dims);
  const Kde kp(p), kq(q);
  const Eigen::Index n1 = p.rows(), n2 = q.rows();
  const double w1 = static_cast<double>(n1) / (n1 + n2), w2 = static_cast<double>(n2) / (n1 + n2);
  // Rows are i.i.d., so the leading rows of each class are a fair query set.
  const Eigen::Index m1 = params.queries > 0 ? std::min<Eigen::Index>(params.queries, n1) : n1;
  const Eigen::Index m2 = params.queries > 0 ? std::min<Eigen::Index>(params.queries, n2) : n2;
  const Eigen::Index n = m1 + m2;
  // Queries from class c stand for draws from p_c; weighting by the class
  // shares makes sqrt(p+ p-) / (w1 p+ + w2 p-) integrate to the coefficient.
  std::vector<double> f(n);
  parallel_for(n, params.threads, [&](Eigen::Index i) {
    const bool first = i < m1;
    const Eigen::RowVectorXd y = first ? p.row(i) : q.row(i - m1);
    const double a = kp.density(y, first ? i : -1), b = kq.density(y, first ? -1 : i - m1);
    const double mix = w1 * a + w2 * b;
    f[i] = mix > 0.0 ? std::sqrt(a * b) / mix : 0.0;
  });
  auto combine = [&](double s1, double s2) { return w1 * s1 / m1 + w2 * s2 / m2; };
  BhattacharyyaEstimate out;
  out.dims = static_cast<int>(p.cols());
  out.value = combine(std::accumulate(f.begin(), f.begin() + m1, 0.0), std::accumulate(f.begin() + m1, f.end(), 0.0));
  // Percentile bootstrap over the per-query terms, resampled within each class.
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Eigen::Index> pick1(0, m1 - 1), pick2(m1, n - 1);
  std::vector<double> means(params.bootstrap);
  for (double& m : means) {
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index k = 0; k < m1; ++k) s1 += f[pick1(rng)];
    for (Eigen::Index k = 0; k < m2; ++k) s2 += f[pick2(rng)];
    m = combine(s1, s2);
  }
  std::sort(means.begin(), means.end());
  const double tail = 0.5 * (1.0 - params.confidence);
  auto at = [&](double quantile) {
    const auto k = static_cast<std::size_t>(std::clamp(quantile * (means.size() - 1), 0.0, means.size() - 1.0));
    return means[k];
  };
  out.ci_low = at(tail);
  out.ci_high = at(1.0 - tail);
  return out;
}

std::mt19937_64 trial_stream(std::uint64_t seed, int cls, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cls + 2), static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

BhattacharyyaEstimate bhattacharyya_error(const SampleGenerator& generator, int n_mc,
                                          const BhattacharyyaParams& params) {
  require(static_cast<bool>(generator), "bhattacharyya_error: no generator");
  require(n_mc >= 1000, "bhattacharyya_error: needs at least 1000 trials per class");
  return bhattacharyya_from_samples(draw(generator, +1, n_mc, params), draw(generator, -1, n_mc, params), params);
}

std::vector<CurvePoint> passive_curve(const FlatScene& scene, const Sensor& sensor, const std::vector<double>& scales,
                                      int n_mc, const BhattacharyyaParams& params,
                                      const std::optional<Occlusion>& occlusion) {
  check_scene(scene);
  std::vector<CurvePoint> out;
  for (double s : scales) {
    const Sensor at = at_scale(sensor, s);
    check_sensor(at);
    const SampleGenerator gen = [&](int c, std::mt19937_64& rng) {
      const Eigen::VectorXd alpha = sample_coefficients(c > 0 ? scene.pos : scene.neg, rng);
      return measure(scene.basis, alpha, at, rng, occlusion);
    };
    out.push_back({s, bhattacharyya_error(gen, n_mc, params)});
  }
  return out;
}

Eigen::VectorXd active_measure(const FlatBasis& basis, const Eigen::VectorXd& alpha, const Sensor& sensor,
                               const ActiveBudget& budget, std::mt19937_64& rng,
                               const std::optional<Occlusion>& occlusion) {
  require(budget.translations >= 1 && budget.repeats >= 1, "active_measure: translations and repeats must be >= 1");
  Sensor shifted = at_scale(sensor, budget.min_scale);
  check_sensor(shifted);
  const int K = budget.translations;
  const double step = sensor.pitch / K;
  shifted.sites.clear();
  for (double t : sensor.sites)
    for (int k = 0; k < K; ++k) shifted.sites.push_back(t + k * step);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shifted.sites.size()));
  for (int r = 0; r < budget.repeats; ++r) acc += measure(basis, alpha, shifted, rng, occlusion);
  acc /= budget.repeats;
  // Sites may be given in any order; report them by position.
  std::vector<Eigen::Index> order(shifted.sites.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return shifted.sites[a] < shifted.sites[b]; });
  Eigen::VectorXd out(acc.size());
  for (Eigen::Index i = 0; i < acc.size(); ++i) out(i) = acc(order[i]);
  return out;
}

BhattacharyyaEstimate active_error(const FlatScene& scene, const Sensor& sensor, const ActiveBudget& budget, int n_mc,
                                   const BhattacharyyaParams& params, const std::optional<Occlusion>& occlusion) {
  check_scene(scene);
  const SampleGenerator gen = [&](int c, std::mt19937_64& rng) {
    const Eigen::VectorXd alpha = sample_coefficients(c > 0 ? scene.pos : scene.neg, rng);
    return active_measure(scene.basis, alpha, sensor, budget, rng, occlusion);
  };
  return bhattacharyya_error(gen, n_mc, params);
}

}  // namespace invar
