#pragma once

// Synthetic scenes shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "invar/imgcore.hpp"

namespace synth {

using invar::Raster;

inline Raster noise(int h, int w, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(y, x) = u(rng);
  return img;
}

// Smooth random texture rescaled to [0.1, 0.9].
inline Raster texture(int h, int w, double sigma, std::mt19937& rng) {
  Raster t = invar::gaussian_blur(noise(h, w, rng), sigma);
  const double lo = t.minCoeff(), hi = t.maxCoeff();
  return 0.1 + 0.8 * (t - lo) / (hi - lo);
}

inline Raster gaussian_blob(int h, int w, double cx, double cy, double s, double amp = 1.0) {
  Raster img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img(y, x) = amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * s * s));
  return img;
}

// Square of side `side` with top-left corner (x0, y0) filled from `fg`,
// everything else from `bg`.  fg is indexed relative to the square so the
// square's own texture moves with it.
inline Raster paste_square(const Raster& bg, const Raster& fg, int x0, int y0, int side) {
  Raster out = bg;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      if (y0 + y >= 0 && y0 + y < bg.rows() && x0 + x >= 0 && x0 + x < bg.cols())
        out(y0 + y, x0 + x) = fg(y, x);
  return out;
}

inline Raster rot90(const Raster& img) {
  Raster out(img.cols(), img.rows());
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x) out(img.cols() - 1 - x, y) = img(y, x);
  return out;
}

inline Raster flip_x(const Raster& img) { return img.rowwise().reverse(); }
inline Raster flip_y(const Raster& img) { return img.colwise().reverse(); }

struct OcclusionScene {
  Raster a, b;
  invar::Mask strip;  // background pixels of a that the square covers in b
};

// Textured square (side 40) moving `dx` px right over an independent
// background texture.
inline OcclusionScene moving_square(unsigned seed, int x0 = 40, int y0 = 44, int dx = 3) {
  std::mt19937 rng(seed);
  const Raster bg = texture(128, 128, 1.0, rng);
  const Raster fg = texture(40, 40, 1.5, rng);
  OcclusionScene s{paste_square(bg, fg, x0, y0, 40), paste_square(bg, fg, x0 + dx, y0, 40),
                   invar::Mask::Zero(128, 128)};
  for (int y = y0; y < y0 + 40; ++y)
    for (int x = x0 + 40; x < x0 + 40 + dx; ++x) s.strip(y, x) = 1;
  return s;
}

// Smooth field on an h x w grid: a broad positive envelope centred in the
// image plus random narrow bumps and dips near the centre.  The envelope
// dominates far from the centre, so the field has no critical points near
// the border.  (dx, dy) translates the whole field analytically.
inline Raster bump_field(int h, int w, unsigned seed, double dx = 0.0, double dy = 0.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(-18.0, 18.0), amp(0.15, 0.6), width(2.0, 4.0);
  std::uniform_int_distribution<int> count(4, 9);
  const double cx = 0.5 * (w - 1) + dx, cy = 0.5 * (h - 1) + dy;
  Raster f = gaussian_blob(h, w, cx, cy, 12.0);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double bx = cx + pos(rng), by = cy + pos(rng);
    const double a = amp(rng) * (i % 3 == 2 ? -1.0 : 1.0);
    f += gaussian_blob(h, w, bx, by, width(rng), a);
  }
  return f;
}

inline double iou(const invar::Mask& a, const invar::Mask& b) {
  int inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    inter += a.data()[i] && b.data()[i];
    uni += a.data()[i] || b.data()[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

// Random positive and negative blobs of width 1.5-4 scattered over h x w.
inline Raster blob_canvas(int h, int w, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> px(0.0, w - 1.0), py(0.0, h - 1.0), amp(0.3, 1.0), width(1.5, 4.0);
  Raster f = Raster::Zero(h, w);
  for (int i = 0; i < n; ++i) {
    const double x = px(rng), y = py(rng), s = width(rng), a = amp(rng) * (i % 2 ? -1.0 : 1.0);
    f += gaussian_blob(h, w, x, y, s, a);
  }
  return f;
}

// Windows of a wider blob canvas whose content moves `step` px right per frame.
inline std::vector<Raster> shifted_sequence(int n_frames, int h, int w, int step, unsigned seed) {
  const int extra = step * (n_frames - 1);
  const Raster canvas = blob_canvas(h, w + extra, (h * (w + extra)) / 150, seed);
  std::vector<Raster> out;
  for (int t = 0; t < n_frames; ++t) out.push_back(canvas.block(0, extra - step * t, h, w));
  return out;
}

struct OcclusionScript {
  std::vector<Raster> frames;
  double x = 0.0, y = 0.0;  // the covered blob
  int k = 0;                // first frame in which it is covered
};

// Static blobs with a flat square sweeping in from the left; the square first
// covers the target blob at frame k.
inline OcclusionScript occlusion_script(unsigned seed, int n_frames = 8) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> kd(2, n_frames - 2);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  OcclusionScript s;
  s.k = kd(rng);
  s.x = 64.0 + jitter(rng);
  s.y = 48.0 + jitter(rng);
  Raster base = blob_canvas(96, 128, 12, seed + 1000);
  // Keep the neighbourhood of the target free of other structure.
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x) {
      const double d = std::hypot(x - s.x, y - s.y);
      base(y, x) *= std::clamp((d - 10.0) / 6.0, 0.0, 1.0);
    }
  base += gaussian_blob(96, 128, s.x, s.y, 2.5, 1.0);
  const int side = 20, speed = 24;
  const Raster fill = Raster::Constant(side, side, 0.2);
  for (int t = 0; t < n_frames; ++t) {
    const int x0 = static_cast<int>(std::lround(s.x)) - side / 2 - speed * (s.k - t);
    const int y0 = static_cast<int>(std::lround(s.y)) - side / 2;
    Raster f = base;
    for (int y = std::max(0, y0); y < std::min(96, y0 + side); ++y)
      for (int x = std::max(0, x0); x < std::min(128, x0 + side); ++x) f(y, x) = fill(0, 0);
    s.frames.push_back(f);
  }
  return s;
}

}  // namespace synth
