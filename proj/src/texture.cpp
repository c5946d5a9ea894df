#include "invar/texture.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "invar/detect.hpp"
#include "invar/error.hpp"

namespace invar {

namespace {

double entropy_bits(const std::map<std::vector<int>, long>& counts, double n) {
  double h = 0.0;
  for (const auto& [key, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

Offsets square_offsets(int halfwidth) {
  require(halfwidth >= 0, "square_offsets: negative half-width");
  Offsets out;
  for (int dy = -halfwidth; dy <= halfwidth; ++dy)
    for (int dx = -halfwidth; dx <= halfwidth; ++dx)
      if (dx != 0 || dy != 0) out.emplace_back(dx, dy);
  return out;
}

Image<int> quantize(const Raster& region, int levels) {
  require(levels >= 1, "quantize: need at least one level");
  require_finite(region, "quantize");
  const double lo = region.minCoeff(), hi = region.maxCoeff();
  Image<int> q = Image<int>::Zero(region.rows(), region.cols());
  if (hi <= lo) return q;
  for (Eigen::Index y = 0; y < region.rows(); ++y)
    for (Eigen::Index x = 0; x < region.cols(); ++x) {
      const int k = static_cast<int>(std::floor((region(y, x) - lo) / (hi - lo) * levels));
      q(y, x) = std::min(k, levels - 1);
    }
  return q;
}

double cond_entropy(const Raster& region, const Offsets& omega, int levels) {
  require(region.size() > 0, "cond_entropy: empty region");
  int rx = 0, ry = 0;
  for (const auto& o : omega) {
    require(o.x() != 0 || o.y() != 0, "cond_entropy: omega must exclude the origin");
    rx = std::max(rx, std::abs(o.x()));
    ry = std::max(ry, std::abs(o.y()));
  }
  require(region.cols() > 2 * rx && region.rows() > 2 * ry, "cond_entropy: region smaller than the neighbourhood");
  const Image<int> q = quantize(region, levels);
  // H(C | ctx) = H(ctx, C) - H(ctx); the centre is the last key entry.
  std::map<std::vector<int>, long> joint, context;
  std::vector<int> key(omega.size() + 1);
  long n = 0;
  for (Eigen::Index y = ry; y < region.rows() - ry; ++y)
    for (Eigen::Index x = rx; x < region.cols() - rx; ++x) {
      for (std::size_t k = 0; k < omega.size(); ++k) key[k] = q(y + omega[k].y(), x + omega[k].x());
      key.back() = q(y, x);
      ++joint[key];
      ++context[std::vector<int>(key.begin(), key.end() - 1)];
      ++n;
    }
  const double h = entropy_bits(joint, static_cast<double>(n)) - entropy_bits(context, static_cast<double>(n));
  return std::max(h, 0.0);
}

TextureModel infer_neighborhood(const Raster& region, double beta, const std::vector<int>& halfwidths,
                                int levels) {
  require(!halfwidths.empty(), "infer_neighborhood: no candidates");
  require(beta > 0.0, "infer_neighborhood: beta must be > 0");
  TextureModel best;
  bool have = false;
  for (int h : halfwidths) {
    TextureModel m;
    m.halfwidth = h;
    m.sigma = 2.0 * h + 1.0;
    m.entropy_bits = cond_entropy(region, square_offsets(h), levels);
    m.levels = levels;
    m.beta = beta;
    m.objective = m.entropy_bits + m.sigma * m.sigma / beta;
    if (!have || m.objective < best.objective || (m.objective == best.objective && h < best.halfwidth)) {
      best = m;
      have = true;
    }
  }
  return best;
}

std::vector<double> entropy_profile(const Raster& img, int x, int y, const std::vector<int>& halfwidths,
                                    int levels) {
  require(x >= 0 && y >= 0 && x < img.cols() && y < img.rows(), "entropy_profile: centre outside the image");
  const Image<int> q = quantize(img, levels);
  std::vector<double> out;
  for (int h : halfwidths) {
    require(h >= 0, "entropy_profile: negative half-width");
    std::vector<long> counts(levels, 0);
    long n = 0;
    for (int v = std::max(0, y - h); v <= std::min<int>(img.rows() - 1, y + h); ++v)
      for (int u = std::max(0, x - h); u <= std::min<int>(img.cols() - 1, x + h); ++u) {
        ++counts[q(v, u)];
        ++n;
      }
    double e = 0.0;
    for (long c : counts)
      if (c > 0) e -= static_cast<double>(c) / n * std::log2(static_cast<double>(c) / n);
    out.push_back(e);
  }
  return out;
}

const char* to_string(RegionKind k) { return k == RegionKind::Texture ? "texture" : "structure"; }

RegionKind texture_or_structure(const Raster& region, double sigma, double rel_thresh) {
  require_finite(region, "texture_or_structure");
  require(sigma > 0.0 && region.rows() >= sigma && region.cols() >= sigma,
          "texture_or_structure: region side must be >= sigma");
  const double k = 1.6;
  const Raster fine = gaussian_blur(region, sigma);
  const Raster dog = -(gaussian_blur(fine, sigma * std::sqrt(k * k - 1.0)) - fine);
  const double peak = dog.abs().maxCoeff();
  if (!(peak > 0.0)) return RegionKind::Texture;
  // Strict 8-neighbour extrema away from the region edge.
  int strong = 0;
  for (Eigen::Index y = 1; y + 1 < dog.rows(); ++y)
    for (Eigen::Index x = 1; x + 1 < dog.cols(); ++x) {
      const double v = dog(y, x);
      if (std::abs(v) < rel_thresh * peak) continue;
      bool is_max = true, is_min = true;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = dog(y + dy, x + dx);
          is_max = is_max && v > n;
          is_min = is_min && v < n;
        }
      if ((is_max || is_min) && transversal(dog, static_cast<int>(x), static_cast<int>(y))) ++strong;
    }
  if (strong == 1) return RegionKind::Structure;
  return RegionKind::Texture;
}

}  // namespace invar
