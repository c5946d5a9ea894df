#include "invar/imgcore.hpp"

#include <algorithm>

namespace invar {

std::vector<double> gaussian_kernel(double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "gaussian_kernel: sigma must be finite and > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

template <typename Scalar>
Image<Scalar> convolve_rows(const Image<Scalar>& img, const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  const Eigen::Index w = img.cols();
  Image<Scalar> out(img.rows(), w);
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const Eigen::Index xx = std::clamp<Eigen::Index>(x + k, 0, w - 1);
        acc += taps[k + radius] * static_cast<double>(img(y, xx));
      }
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> convolve_cols(const Image<Scalar>& img, const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  const Eigen::Index h = img.rows();
  Image<Scalar> out(h, img.cols());
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const Eigen::Index yy = std::clamp<Eigen::Index>(y + k, 0, h - 1);
        acc += taps[k + radius] * static_cast<double>(img(yy, x));
      }
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

}  // namespace

template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& img, double sigma) {
  require(std::isfinite(sigma), "gaussian_blur: sigma must be finite");
  require(sigma >= 0.0, "gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto taps = gaussian_kernel(sigma);
  return convolve_cols(convolve_rows(img, taps), taps);
}

template <typename Scalar>
std::pair<Image<Scalar>, Image<Scalar>> gradient_xy(const Image<Scalar>& img) {
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  require(w >= 2 && h >= 2, "gradient: raster must be at least 2x2");
  Image<Scalar> gx(h, w), gy(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    gx(y, 0) = img(y, 1) - img(y, 0);
    gx(y, w - 1) = img(y, w - 1) - img(y, w - 2);
    for (Eigen::Index x = 1; x + 1 < w; ++x) gx(y, x) = (img(y, x + 1) - img(y, x - 1)) / Scalar(2);
  }
  for (Eigen::Index x = 0; x < w; ++x) {
    gy(0, x) = img(1, x) - img(0, x);
    gy(h - 1, x) = img(h - 1, x) - img(h - 2, x);
    for (Eigen::Index y = 1; y + 1 < h; ++y) gy(y, x) = (img(y + 1, x) - img(y - 1, x)) / Scalar(2);
  }
  return {std::move(gx), std::move(gy)};
}

template Image<double> gaussian_blur(const Image<double>&, double);
template Image<float> gaussian_blur(const Image<float>&, double);
template std::pair<Image<double>, Image<double>> gradient_xy(const Image<double>&);
template std::pair<Image<float>, Image<float>> gradient_xy(const Image<float>&);

double sample_bilinear(const Raster& img, double x, double y) {
  const double w = static_cast<double>(img.cols());
  const double h = static_cast<double>(img.rows());
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, img.cols() - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, img.rows() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x1);
  const double bottom = (1.0 - fx) * img(y1, x0) + fx * img(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

WarpResult warp(const Raster& img, const VectorField& field) {
  require(field.width() == img.cols() && field.height() == img.rows(),
          "warp: field and raster dimensions differ");
  WarpResult out{Raster(img.rows(), img.cols()), Mask(img.rows(), img.cols())};
  const double xmax = static_cast<double>(img.cols() - 1);
  const double ymax = static_cast<double>(img.rows() - 1);
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const double sx = static_cast<double>(x) + field.u(y, x);
      const double sy = static_cast<double>(y) + field.v(y, x);
      out.valid(y, x) = (sx >= 0.0 && sx <= xmax && sy >= 0.0 && sy <= ymax) ? 1 : 0;
      out.image(y, x) = sample_bilinear(img, sx, sy);
    }
  }
  return out;
}

ScaleSpace build_scale_space(const Raster& img, double sigma0, int steps_per_octave,
                             int n_levels, ScaleSpaceMode mode) {
  require_finite(img, "build_scale_space");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "build_scale_space: sigma0 must be > 0");
  require(steps_per_octave >= 1, "build_scale_space: steps_per_octave must be >= 1");
  require(n_levels >= 1, "build_scale_space: n_levels must be >= 1");

  ScaleSpace ss;
  ss.base = img;
  ss.mode = mode;
  ss.sigma0 = sigma0;
  ss.steps_per_octave = steps_per_octave;
  ss.levels.reserve(n_levels);

  Raster current = gaussian_blur(img, sigma0);
  double current_sigma = sigma0;
  int octave = 0;
  ss.levels.push_back({sigma0, current, 0});
  for (int k = 1; k < n_levels; ++k) {
    const double sigma_k = ss.sigma_at(k);
    // In the pyramid variant the per-level blur is expressed in the current
    // octave's pixel units.
    const double unit = std::exp2(octave);
    const double inc = std::sqrt(sigma_k * sigma_k - current_sigma * current_sigma) / unit;
    current = gaussian_blur(current, inc);
    current_sigma = sigma_k;
    if (mode == ScaleSpaceMode::Pyramid && k % steps_per_octave == 0 && current.rows() >= 4 &&
        current.cols() >= 4) {
      Raster decimated(current.rows() / 2, current.cols() / 2);
      for (Eigen::Index y = 0; y < decimated.rows(); ++y)
        for (Eigen::Index x = 0; x < decimated.cols(); ++x) decimated(y, x) = current(2 * y, 2 * x);
      current = std::move(decimated);
      ++octave;
    }
    ss.levels.push_back({sigma_k, current, octave});
  }
  return ss;
}

Raster downsample2(const Raster& img, double antialias_sigma) {
  const Raster smooth = gaussian_blur(img, antialias_sigma);
  const Eigen::Index h = std::max<Eigen::Index>(1, img.rows() / 2);
  const Eigen::Index w = std::max<Eigen::Index>(1, img.cols() / 2);
  Raster out(h, w);
  // Sample at the centroid of each 2x2 block so the coarse grid stays
  // aligned with the fine one under the x_fine = 2 x_coarse + 0.5 mapping.
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      out(y, x) = sample_bilinear(smooth, 2.0 * x + 0.5, 2.0 * y + 0.5);
  return out;
}

VectorField resize_flow(const VectorField& field, Eigen::Index height, Eigen::Index width) {
  VectorField out(height, width);
  const double sx = static_cast<double>(width) / static_cast<double>(field.width());
  const double sy = static_cast<double>(height) / static_cast<double>(field.height());
  for (Eigen::Index y = 0; y < height; ++y) {
    for (Eigen::Index x = 0; x < width; ++x) {
      const double cx = (static_cast<double>(x) + 0.5) / sx - 0.5;
      const double cy = (static_cast<double>(y) + 0.5) / sy - 0.5;
      out.u(y, x) = sx * sample_bilinear(field.u, cx, cy);
      out.v(y, x) = sy * sample_bilinear(field.v, cx, cy);
    }
  }
  return out;
}

Raster shift(const Raster& img, int dx, int dy) {
  Raster out(img.rows(), img.cols());
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const Eigen::Index sx = std::clamp<Eigen::Index>(x - dx, 0, img.cols() - 1);
      const Eigen::Index sy = std::clamp<Eigen::Index>(y - dy, 0, img.rows() - 1);
      out(y, x) = img(sy, sx);
    }
  }
  return out;
}

double rms(const Raster& a, const Raster& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "rms: dimension mismatch");
  return std::sqrt((a - b).square().mean());
}

}  // namespace invar
