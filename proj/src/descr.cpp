#include "invar/descr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "invar/error.hpp"

namespace invar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

Patch extract_patch(const Raster& img, const Frame& frame, const PatchParams& params) {
  require_finite(img, "extract_patch");
  require(params.size >= 2 && params.half_width > 0.0, "extract_patch: bad patch parameters");
  require(frame.sigma > 0.0 && std::isfinite(frame.sigma), "extract_patch: frame sigma must be > 0");
  require(frame.t.x() >= 0.0 && frame.t.y() >= 0.0 && frame.t.x() <= img.cols() - 1.0 &&
              frame.t.y() <= img.rows() - 1.0,
          "extract_patch: frame centre outside the image");
  const int g = params.size;
  const double s = 2.0 * params.half_width * frame.sigma / g;
  const double c = std::cos(frame.theta), sn = std::sin(frame.theta);
  // Samples outside the image take the nearest edge value.
  Raster raw(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const double u = s * (j - g / 2), v = s * (i - g / 2);
      raw(i, j) = sample_bilinear(img, frame.t.x() + c * u - sn * v, frame.t.y() + sn * u + c * v);
    }
  auto cn = canonize_contrast(raw);
  return {std::move(cn.patch), cn.alpha, cn.beta};
}

std::vector<double> cell_directions(const Raster& patch, int grid) {
  require(grid >= 1 && patch.rows() % grid == 0 && patch.cols() % grid == 0,
          "cell_directions: grid must divide the patch");
  const auto [gx, gy] = gradient_xy(patch);
  const Eigen::Index ch = patch.rows() / grid, cw = patch.cols() / grid;
  std::vector<double> out;
  out.reserve(grid * grid);
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c) {
      const double sx = gx.block(r * ch, c * cw, ch, cw).sum();
      const double sy = gy.block(r * ch, c * cw, ch, cw).sum();
      out.push_back(sx == 0.0 && sy == 0.0 ? 0.0 : wrap_2pi(std::atan2(sy, sx)));
    }
  return out;
}

TemplateDescriptor best_template(const std::vector<Patch>& samples, int grid) {
  require(!samples.empty(), "best_template: empty track");
  const std::size_t cells = static_cast<std::size_t>(grid) * grid;
  std::vector<double> sc(cells, 0.0), ss(cells, 0.0);
  for (const Patch& p : samples) {
    const auto dir = cell_directions(p.values, grid);
    for (std::size_t k = 0; k < cells; ++k) {
      sc[k] += std::cos(dir[k]);
      ss[k] += std::sin(dir[k]);
    }
  }
  TemplateDescriptor t;
  t.grid = grid;
  t.count = static_cast<int>(samples.size());
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < cells; ++k) {
    t.mean.push_back(wrap_2pi(std::atan2(ss[k], sc[k])));
    const double r = std::hypot(sc[k], ss[k]) / n;
    // Rounding leaves R slightly below 1 for identical angles.
    t.std.push_back(r >= 1.0 - 1e-12 ? 0.0 : std::sqrt(-2.0 * std::log(std::max(r, 1e-300))));
  }
  return t;
}

TimeHOG time_hog(const std::vector<Patch>& samples, int grid, int bins) {
  require(!samples.empty(), "time_hog: empty track");
  require(bins >= 2, "time_hog: need at least 2 bins");
  const std::size_t len = static_cast<std::size_t>(grid) * grid * bins;
  std::vector<std::vector<double>> per;
  for (const Patch& p : samples) {
    const Raster& v = p.values;
    require(grid >= 1 && v.rows() % grid == 0 && v.cols() % grid == 0, "time_hog: grid must divide the patch");
    const auto [gx, gy] = gradient_xy(v);
    const Eigen::Index ch = v.rows() / grid, cw = v.cols() / grid;
    std::vector<double> h(len, 0.0);
    for (Eigen::Index y = 0; y < v.rows(); ++y)
      for (Eigen::Index x = 0; x < v.cols(); ++x) {
        const double m = std::hypot(gx(y, x), gy(y, x));
        if (m == 0.0) continue;
        // Bin centres at k 2 pi / bins.
        const double pos = wrap_2pi(std::atan2(gy(y, x), gx(y, x))) * bins / kTwoPi;
        const int lo = static_cast<int>(std::floor(pos)) % bins;
        const double frac = pos - std::floor(pos);
        const std::size_t cell = static_cast<std::size_t>((y / ch) * grid + x / cw);
        h[cell * bins + lo] += m * (1.0 - frac);
        h[cell * bins + (lo + 1) % bins] += m * frac;
      }
    per.push_back(std::move(h));
  }
  // Summing in a canonical order makes the result exactly order-free.
  std::sort(per.begin(), per.end());
  TimeHOG out;
  out.grid = grid;
  out.bins = bins;
  out.hist.assign(len, 0.0);
  for (const auto& h : per)
    for (std::size_t k = 0; k < len; ++k) out.hist[k] += h[k];
  for (std::size_t c = 0; c < len; c += bins) {
    double total = 0.0;
    for (int b = 0; b < bins; ++b) total += out.hist[c + b];
    if (total > 0.0)
      for (int b = 0; b < bins; ++b) out.hist[c + b] /= total;
  }
  return out;
}

DescrMetric descr_metric_from_string(const std::string& name) {
  std::string s;
  for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "l2") return DescrMetric::L2;
  if (s == "chi2") return DescrMetric::Chi2;
  throw Error(ErrorCode::InvalidArgument, "unknown descriptor metric: " + name);
}

const char* to_string(DescrMetric m) { return m == DescrMetric::L2 ? "L2" : "chi2"; }

double descr_distance(const TemplateDescriptor& a, const TemplateDescriptor& b, DescrMetric metric) {
  require(metric == DescrMetric::L2, "descr_distance: templates support only the L2 metric");
  require(a.grid == b.grid && a.mean.size() == b.mean.size(), "descr_distance: incompatible templates");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    const double d = std::abs(a.mean[k] - b.mean[k]);
    const double w = std::min(d, kTwoPi - d);
    sum += w * w;
  }
  return std::sqrt(sum);
}

double descr_distance(const TimeHOG& a, const TimeHOG& b, DescrMetric metric) {
  require(a.grid == b.grid && a.bins == b.bins && a.hist.size() == b.hist.size(),
          "descr_distance: incompatible histograms");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.hist.size(); ++k) {
    const double d = a.hist[k] - b.hist[k];
    if (metric == DescrMetric::L2) {
      sum += d * d;
    } else {
      const double s = a.hist[k] + b.hist[k];
      if (s > 0.0) sum += d * d / s;
    }
  }
  return metric == DescrMetric::L2 ? std::sqrt(sum) : 0.5 * sum;
}

}  // namespace invar
