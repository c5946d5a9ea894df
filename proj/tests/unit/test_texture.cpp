#include "doctest.h"

#include <cmath>
#include <random>

#include "invar/error.hpp"
#include "invar/texture.hpp"
#include "synth.hpp"

using namespace invar;

namespace {

Raster coin_flips(int side, std::mt19937& rng) {
  std::bernoulli_distribution b(0.5);
  Raster r(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) r(y, x) = b(rng) ? 1.0 : 0.0;
  return r;
}

Raster checkerboard(int side) {
  Raster r(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) r(y, x) = (x + y) % 2;
  return r;
}

// Period-4 pattern 0011 along x with an independent phase per row, so the
// rows above and below say nothing about the centre.
Raster jittered_stripes(int side, std::mt19937& rng) {
  std::uniform_int_distribution<int> phase(0, 3);
  Raster r(side, side);
  for (int y = 0; y < side; ++y) {
    const int p = phase(rng);
    for (int x = 0; x < side; ++x) r(y, x) = ((x + p) / 2) % 2;
  }
  return r;
}

// Disks of a fine checkerboard scattered over a flat background; one disk is
// centred in the image.
Raster checker_disks(int side, int radius, int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pos(0, side - 1);
  std::vector<Eigen::Vector2i> centres{{side / 2, side / 2}};
  const int gap2 = 4 * radius * radius + 16;
  while (static_cast<int>(centres.size()) < count) {
    const Eigen::Vector2i c(pos(rng), pos(rng));
    bool ok = true;
    for (const auto& q : centres) ok = ok && (q - c).squaredNorm() >= gap2;
    if (ok) centres.push_back(c);
  }
  Raster img = Raster::Constant(side, side, 0.2);
  for (const auto& c : centres)
    for (int y = std::max(0, c.y() - radius); y <= std::min(side - 1, c.y() + radius); ++y)
      for (int x = std::max(0, c.x() - radius); x <= std::min(side - 1, c.x() + radius); ++x)
        if ((Eigen::Vector2i(x, y) - c).squaredNorm() <= radius * radius) img(y, x) = (x + y) % 2 ? 1.0 : 0.6;
  return img;
}

// Maximal runs of at least `min_len` samples whose consecutive differences
// stay below tol.
int count_plateaus(const std::vector<double>& e, double tol, int min_len) {
  int plateaus = 0, run = 1;
  for (std::size_t i = 1; i <= e.size(); ++i) {
    if (i < e.size() && std::abs(e[i] - e[i - 1]) < tol) {
      ++run;
      continue;
    }
    if (run >= min_len) ++plateaus;
    run = 1;
  }
  return plateaus;
}

}  // namespace

TEST_CASE("conditional entropy on constructed regions") {
  const Raster flat = Raster::Constant(32, 32, 0.4);
  for (int h = 0; h <= 3; ++h) CHECK(cond_entropy(flat, square_offsets(h)) == 0.0);

  std::mt19937 rng(5);
  const Offsets left{{-1, 0}};
  const Offsets two{{-1, 0}, {0, -1}};
  const Offsets three{{-1, 0}, {0, -1}, {-1, -1}};
  for (int trial = 0; trial < 10; ++trial) {
    const Raster noise = coin_flips(64, rng);
    CHECK(cond_entropy(noise, {}, 2) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(cond_entropy(noise, left, 2) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(cond_entropy(noise, two, 2) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(cond_entropy(noise, three, 2) == doctest::Approx(1.0).epsilon(0.1));
  }

  CHECK(cond_entropy(checkerboard(32), left) == 0.0);
  CHECK(cond_entropy(checkerboard(32), {}) == doctest::Approx(1.0));

  CHECK_THROWS_AS(cond_entropy(flat, {{0, 0}}), Error);
  CHECK_THROWS_AS(cond_entropy(Raster::Zero(3, 3), square_offsets(2)), Error);
}

TEST_CASE("conditional entropy does not grow with the neighbourhood") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> off(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Raster tex = synth::texture(64, 64, 1.0 + trial % 3, rng);
    const int levels = 2 + trial % 3;
    // Nested random offset sets.
    Offsets omega;
    double prev = cond_entropy(tex, omega, levels);
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector2i o(off(rng), off(rng));
      if (o == Eigen::Vector2i::Zero()) o = {1, 0};
      omega.push_back(o);
      const double h = cond_entropy(tex, omega, levels);
      CHECK(h >= 0.0);
      CHECK(h <= prev + 0.05);
      prev = h;
    }
    // Nested squares.
    double sq_prev = cond_entropy(tex, square_offsets(0), levels);
    for (int h = 1; h <= 2; ++h) {
      const double e = cond_entropy(tex, square_offsets(h), levels);
      CHECK(e <= sq_prev + 0.05);
      sq_prev = e;
    }
  }
}

TEST_CASE("neighbourhood inference") {
  const std::vector<int> cands{0, 1, 2, 3};

  SUBCASE("checkerboard takes the smallest square with zero entropy") {
    const TextureModel m = infer_neighborhood(checkerboard(48), 100.0, cands);
    CHECK(m.halfwidth == 1);
    CHECK(m.entropy_bits == 0.0);
    CHECK(m.sigma == 3.0);
  }

  SUBCASE("constant region takes the smallest candidate") {
    const TextureModel m = infer_neighborhood(Raster::Constant(32, 32, 1.0), 100.0, {2, 1, 3});
    CHECK(m.halfwidth == 1);
    CHECK(m.entropy_bits == 0.0);
  }

  SUBCASE("period-4 stripes need a square spanning a period") {
    std::mt19937 rng(23);
    const Raster s = jittered_stripes(64, rng);
    CHECK(cond_entropy(s, square_offsets(1)) > 0.3);
    const TextureModel m = infer_neighborhood(s, 100.0, cands);
    CHECK(m.sigma >= 4.0);
    CHECK(m.halfwidth == 2);
  }

  SUBCASE("agrees with an exhaustive sweep") {
    std::mt19937 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
      const Raster tex = synth::texture(40, 40, 1.5, rng);
      const double beta = 20.0 + 40.0 * trial;
      const TextureModel m = infer_neighborhood(tex, beta, cands, 4);
      for (int h : cands) {
        const double side = 2.0 * h + 1.0;
        CHECK(m.objective <= cond_entropy(tex, square_offsets(h), 4) + side * side / beta);
      }
      CHECK(m.objective == doctest::Approx(m.entropy_bits + m.sigma * m.sigma / beta));
    }
  }

  CHECK_THROWS_AS(infer_neighborhood(checkerboard(16), 10.0, {}), Error);
  CHECK_THROWS_AS(infer_neighborhood(checkerboard(16), 0.0, cands), Error);
}

TEST_CASE("texture or structure") {
  for (double s : {2.0, 3.0, 4.0, 6.0})
    CHECK(texture_or_structure(synth::gaussian_blob(48, 48, 24, 24, s), s) == RegionKind::Structure);
  CHECK(texture_or_structure(Raster::Constant(32, 32, 0.7), 4.0) == RegionKind::Texture);

  // Random dots seen at a scale well above the dot size, in regions of 16 sigma.
  int texture = 0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    texture += texture_or_structure(coin_flips(64, rng), 4.0) == RegionKind::Texture;
  }
  CHECK(texture == 20);

  // Total function over arbitrary regions and scales.
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> sig(1.0, 10.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Raster r = synth::texture(32, 32, 1.0 + trial % 4, rng);
    const RegionKind k = texture_or_structure(r, sig(rng));
    CHECK((k == RegionKind::Texture) != (k == RegionKind::Structure));
  }
  CHECK_THROWS_AS(texture_or_structure(Raster::Zero(4, 4), 8.0), Error);
}

TEST_CASE("entropy profile of a two-scale composite is a staircase") {
  const std::vector<int> scales{1, 2, 3, 4, 6, 8, 11, 16, 23, 32, 45, 64, 90, 128, 180, 256, 360};
  for (unsigned seed : {1u, 2u, 3u}) {
    const Raster img = checker_disks(768, 16, 300, seed);
    const auto e = entropy_profile(img, 384, 384, scales);
    CHECK(e.front() < e.back());
    CHECK(count_plateaus(e, 0.05, 3) >= 2);
  }
}
