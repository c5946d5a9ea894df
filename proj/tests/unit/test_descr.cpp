#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "invar/descr.hpp"
#include "synth.hpp"

using namespace invar;

namespace {

struct Blob {
  double x, y, s, a;
};

std::vector<Blob> random_blobs(unsigned seed, int n, double lo, double hi, double wmin = 3.0, double wmax = 7.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> p(lo, hi), w(wmin, wmax), a(0.3, 1.0);
  std::vector<Blob> out;
  for (int i = 0; i < n; ++i) out.push_back({p(rng), p(rng), w(rng), a(rng) * (i % 2 ? -1.0 : 1.0)});
  return out;
}

// Renders the blobs seen through the similarity x' = c + lambda R(phi) (x - c) + d,
// i.e. pixel x' shows the canonical field at the pre-image of x'.
Raster render(const std::vector<Blob>& blobs, int size, double phi = 0.0, double lambda = 1.0,
              Eigen::Vector2d d = Eigen::Vector2d::Zero()) {
  const double c = 0.5 * (size - 1);
  const double cs = std::cos(phi), sn = std::sin(phi);
  Raster img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = x - c - d.x(), v = y - c - d.y();
      const double px = c + (cs * u + sn * v) / lambda, py = c + (-sn * u + cs * v) / lambda;
      double f = 0.0;
      for (const auto& b : blobs) {
        const double r2 = (px - b.x) * (px - b.x) + (py - b.y) * (py - b.y);
        f += b.a * std::exp(-r2 / (2 * b.s * b.s));
      }
      img(y, x) = f;
    }
  return img;
}

// Bilinear version of render() for sampled images.
Raster warp_similarity(const Raster& src, double phi, double lambda, Eigen::Vector2d d) {
  const int size = static_cast<int>(src.rows());
  const double c = 0.5 * (size - 1);
  const double cs = std::cos(phi), sn = std::sin(phi);
  Raster img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = x - c - d.x(), v = y - c - d.y();
      img(y, x) = sample_bilinear(src, c + (cs * u + sn * v) / lambda, c + (-sn * u + cs * v) / lambda);
    }
  return img;
}

Patch ramp_patch(double angle) {
  Raster r(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) r(y, x) = std::cos(angle) * x + std::sin(angle) * y;
  return {canonize_contrast(r).patch, 1.0, 0.0};
}

}  // namespace

TEST_CASE("extract_patch copies pixels on the unit grid") {
  std::mt19937 rng(2);
  const Raster img = synth::texture(80, 80, 1.5, rng);
  Frame f;
  f.t = {40, 37};
  f.sigma = 4.0;  // spacing 2 * 4 * 4 / 32 = 1
  const Patch p = extract_patch(img, f);
  const Raster ref = canonize_contrast(img.block(37 - 16, 40 - 16, 32, 32)).patch;
  CHECK((p.values - ref).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(p.values.mean()) < 1e-12);

  f.t = {10, 10};
  CHECK_THROWS_AS(extract_patch(Raster::Constant(40, 40, 3.0), f), Error);
  try {
    extract_patch(Raster::Constant(40, 40, 3.0), f);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FlatPatch);
  }
  f.t = {-5, 3};
  CHECK_THROWS_AS(extract_patch(img, f), Error);
}

TEST_CASE("extract_patch undoes the frame's similarity") {
  const auto blobs = random_blobs(7, 12, 30, 98, 12.0, 20.0);
  const Raster canon = render(blobs, 128);
  Frame f0;
  f0.t = {63.5, 63.5};
  f0.sigma = 3.0;
  const Patch p0 = extract_patch(canon, f0);
  for (unsigned k = 0; k < 10; ++k) {
    std::mt19937 rng(k);
    std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), sc(0.8, 1.25), sh(-6, 6);
    const double phi = ang(rng), lambda = sc(rng);
    const Eigen::Vector2d d(sh(rng), sh(rng));
    const Raster img = 1.7 * render(blobs, 128, phi, lambda, d) + 0.4;
    Frame f = f0;
    f.t = f0.t + d;
    f.sigma = lambda * f0.sigma;
    f.theta = phi;
    const Patch p = extract_patch(img, f);
    const double rms = std::sqrt((p.values - p0.values).square().mean());
    CHECK(rms < 1e-3);
  }
}

TEST_CASE("best template") {
  const Patch a = ramp_patch(0.3);
  const auto dir = cell_directions(a.values, 8);
  const TemplateDescriptor one = best_template({a});
  const TemplateDescriptor three = best_template({a, a, a});
  for (std::size_t k = 0; k < dir.size(); ++k) {
    CHECK(one.mean[k] == doctest::Approx(dir[k]).epsilon(1e-12));
    CHECK(three.mean[k] == doctest::Approx(dir[k]).epsilon(1e-12));
    CHECK(three.std[k] == 0.0);
    CHECK(dir[k] == doctest::Approx(0.3).epsilon(1e-9));
  }
  CHECK(three.count == 3);

  const TemplateDescriptor mix = best_template({ramp_patch(0.0), ramp_patch(std::numbers::pi / 2)});
  for (double m : mix.mean) CHECK(m == doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
  for (double s : mix.std) CHECK(s > 0.5);

  std::mt19937 rng(5);
  const Raster img = synth::texture(64, 64, 2.0, rng);
  Frame f;
  f.t = {31.3, 30.8};
  f.sigma = 2.5;
  f.theta = 0.7;
  const auto t1 = best_template({extract_patch(img, f), extract_patch(Raster(img * 0.5 + 3.0), f)});
  const auto t2 = best_template({extract_patch(Raster(img * 2.0 - 1.0), f), extract_patch(img, f)});
  for (std::size_t k = 0; k < t1.mean.size(); ++k) CHECK(t1.mean[k] == doctest::Approx(t2.mean[k]).epsilon(1e-9));
  for (double m : t1.mean) CHECK((m >= 0.0 && m < 2 * std::numbers::pi));

  CHECK_THROWS_AS(best_template({}), Error);
}

TEST_CASE("time HOG") {
  std::mt19937 rng(6);
  std::vector<Patch> samples;
  Frame f;
  f.t = {31, 31};
  f.sigma = 2.0;
  const Raster img = synth::texture(64, 64, 1.5, rng);
  for (int k = 0; k < 5; ++k) {
    f.theta = 0.4 * k;
    samples.push_back(extract_patch(img, f));
  }
  const TimeHOG h = time_hog(samples);
  CHECK(h.hist.size() == 4u * 4u * 8u);
  for (int c = 0; c < 16; ++c) {
    double s = 0.0;
    for (int b = 0; b < 8; ++b) s += h.hist[c * 8 + b];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto shuffled = samples;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[2]);
  CHECK(time_hog(shuffled).hist == h.hist);

  const TimeHOG single = time_hog({samples[0]});
  const TimeHOG twice = time_hog({samples[0], samples[0]});
  for (std::size_t k = 0; k < single.hist.size(); ++k) CHECK(single.hist[k] == doctest::Approx(twice.hist[k]).epsilon(1e-12));

  const TimeHOG alt = time_hog({ramp_patch(0.0), ramp_patch(std::numbers::pi), ramp_patch(0.0), ramp_patch(std::numbers::pi)});
  for (int c = 0; c < 16; ++c) {
    CHECK(alt.hist[c * 8 + 0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(alt.hist[c * 8 + 4] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("descriptor distances") {
  TimeHOG a, b;
  a.grid = b.grid = 1;
  a.bins = b.bins = 4;
  a.hist = {1, 0, 0.5, 0.5};
  b.hist = {0, 1, 0.5, 0.5};
  CHECK(descr_distance(a, a) == 0.0);
  CHECK(descr_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
  CHECK(descr_distance(a, b, DescrMetric::Chi2) == doctest::Approx(1.0));
  CHECK(descr_distance(a, b, DescrMetric::Chi2) == descr_distance(b, a, DescrMetric::Chi2));

  TemplateDescriptor s, t;
  s.grid = t.grid = 1;
  s.mean = {0.1, 6.2};
  t.mean = {6.2, 0.1};
  const double w = 2 * std::numbers::pi - 6.1;
  CHECK(descr_distance(s, t) == doctest::Approx(std::sqrt(2.0) * w));
  CHECK(std::abs(descr_distance(s, t) - descr_distance(t, s)) < 1e-12);
  CHECK_THROWS_AS(descr_distance(s, t, DescrMetric::Chi2), Error);
  CHECK(descr_metric_from_string("CHI2") == DescrMetric::Chi2);
}

TEST_CASE("detect, canonize and describe is similarity and contrast invariant") {
  std::vector<double> matched, unmatched;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    const Raster a = synth::texture(128, 128, 2.5, rng);
    std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), sc(0.8, 1.25), sh(-4, 4), al(0.5, 2.0);
    const double phi = ang(rng), lambda = sc(rng);
    const Eigen::Vector2d d(sh(rng), sh(rng));
    const Raster b = al(rng) * warp_similarity(a, phi, lambda, d) + sh(rng);
    auto describe = [](const Raster& img) {
      const ScaleSpace ss = build_scale_space(img, 1.6, 3, 12);
      std::vector<std::pair<Frame, TimeHOG>> out;
      for (Frame f : detect_blobs(ss, DetectorKind::DoG, 0.02)) {
        if (f.t.x() < 24 || f.t.y() < 24 || f.t.x() > 103 || f.t.y() > 103) continue;
        try {
          // Frames without a unique dominant orientation are not canonizable.
          const Orientation o = dominant_orientation(img, f);
          if (o.peak_ratio > 0.8) continue;
          f.theta = o.theta;
          out.push_back({f, time_hog({extract_patch(img, f)})});
        } catch (const Error&) {
        }
      }
      return out;
    };
    const auto da = describe(a), db = describe(b);
    const double c = 63.5, cs = std::cos(phi), sn = std::sin(phi);
    for (const auto& [fa, ha] : da) {
      const Eigen::Vector2d u = fa.t - Eigen::Vector2d(c, c);
      const Eigen::Vector2d mapped = Eigen::Vector2d(c, c) + lambda * Eigen::Vector2d(cs * u.x() - sn * u.y(), sn * u.x() + cs * u.y()) + d;
      for (const auto& [fb, hb] : db) {
        const bool same = (fb.t - mapped).norm() < 1.0 * lambda && std::abs(std::log(fb.sigma / (lambda * fa.sigma))) < 0.15;
        (same ? matched : unmatched).push_back(descr_distance(ha, hb));
      }
    }
  }
  REQUIRE(matched.size() > 40);
  std::sort(unmatched.begin(), unmatched.end());
  const double p1 = unmatched[unmatched.size() / 100];
  const auto below = std::count_if(matched.begin(), matched.end(), [&](double v) { return v < p1; });
  MESSAGE(below << " of " << matched.size() << " matched pairs below the 1st percentile " << p1);
  CHECK(below >= 0.95 * matched.size());
}
