#pragma once

#include <Eigen/Core>

#include <cmath>
#include <utility>
#include <vector>

#include "invar/error.hpp"

namespace invar {

// Dense images are row-major Eigen arrays indexed (row, col) = (y, x).  Pixel
// centers sit at integer coordinates; (0,0) is the top-left pixel.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Raster = Image<double>;
using Mask = Image<unsigned char>;
using LabelImage = Image<int>;

struct VectorField {
  Raster u;
  Raster v;

  VectorField() = default;
  VectorField(Eigen::Index height, Eigen::Index width)
      : u(Raster::Zero(height, width)), v(Raster::Zero(height, width)) {}

  Eigen::Index width() const { return u.cols(); }
  Eigen::Index height() const { return u.rows(); }
};

struct Gradient {
  Raster gx;
  Raster gy;
};

struct WarpResult {
  Raster image;
  Mask valid;  // 1 where x + field stayed inside the domain
};

enum class ScaleSpaceMode { SameGrid, Pyramid };

struct ScaleLevel {
  double sigma;  // in base-image pixels
  Raster smoothed;
  int octave = 0;  // decimation count; always 0 on the same-grid variant
};

struct ScaleSpace {
  Raster base;
  std::vector<ScaleLevel> levels;
  ScaleSpaceMode mode = ScaleSpaceMode::SameGrid;
  double sigma0 = 0.0;
  int steps_per_octave = 1;

  std::size_t size() const { return levels.size(); }
  double sigma(std::size_t k) const { return levels[k].sigma; }
  // Fractional level index to scale, following the geometric schedule.
  double sigma_at(double level) const {
    return sigma0 * std::exp2(level / steps_per_octave);
  }
};

/// Normalised 1-D Gaussian taps of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian smoothing with replicate-edge borders.  sigma == 0 is
/// the identity.
template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& img, double sigma);

/// Central differences in the interior, one-sided at the borders.
template <typename Scalar>
std::pair<Image<Scalar>, Image<Scalar>> gradient_xy(const Image<Scalar>& img);

inline Gradient gradient(const Raster& img) {
  auto [gx, gy] = gradient_xy(img);
  return {std::move(gx), std::move(gy)};
}

/// Bilinear sample with coordinates clamped into the domain.
double sample_bilinear(const Raster& img, double x, double y);

/// Samples img at x + field(x).  Out-of-domain samples take the nearest
/// in-domain value and are flagged invalid.
WarpResult warp(const Raster& img, const VectorField& field);

ScaleSpace build_scale_space(const Raster& img, double sigma0, int steps_per_octave,
                             int n_levels,
                             ScaleSpaceMode mode = ScaleSpaceMode::SameGrid);

/// Blur at sigma then keep every second sample.
Raster downsample2(const Raster& img, double antialias_sigma = 1.0);

/// Bilinear resize of a flow field to (height, width); displacements are
/// scaled by the resize ratio.
VectorField resize_flow(const VectorField& field, Eigen::Index height, Eigen::Index width);

/// Integer translation with replicate-edge fill: out(y, x) = img(y - dy, x - dx).
Raster shift(const Raster& img, int dx, int dy);

double rms(const Raster& a, const Raster& b);

template <typename Scalar>
void require_finite(const Image<Scalar>& img, const char* what) {
  require(img.size() > 0, std::string(what) + ": empty raster");
  require(img.allFinite(), std::string(what) + ": non-finite values");
}

}  // namespace invar
