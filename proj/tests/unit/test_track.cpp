#include "doctest.h"

#include <cmath>
#include <random>

#include "invar/track.hpp"
#include "synth.hpp"

using namespace invar;

TEST_CASE("proper sampling of constructed pairs") {
  const Raster blob = synth::gaussian_blob(64, 64, 30, 32, 3.0);
  for (double s : {0.0, 1.0, 3.0, 8.0}) CHECK(properly_sampled(blob, blob, s));

  CHECK_FALSE(properly_sampled(blob, Raster::Zero(64, 64) + 0.0 * blob + synth::gaussian_blob(64, 64, 10, 10, 3.0)
                                         + synth::gaussian_blob(64, 64, 50, 50, 3.0), 3.0));
  const Raster moved = synth::gaussian_blob(64, 64, 32, 32, 3.0);
  CHECK(properly_sampled(blob, moved, 3.0));
  const Raster extra = moved + synth::gaussian_blob(64, 64, 56, 8, 2.0, 0.7);
  CHECK_FALSE(properly_sampled(blob, extra, 3.0));
  // The region test ignores structure outside the window.
  CHECK(properly_sampled(blob, extra, 3.0, Window{22, 24, 17, 17}));

  // Deleting the blob.
  const Raster two = blob + synth::gaussian_blob(64, 64, 12, 50, 2.5, 0.8);
  CHECK_FALSE(properly_sampled(two, blob, 2.5));
}

TEST_CASE("coarsest proper scale") {
  std::mt19937 rng(4);
  const Raster canvas = synth::texture(64, 80, 0.7, rng);
  const Raster a = canvas.block(0, 8, 64, 64), b = canvas.block(0, 0, 64, 64);
  std::vector<double> schedule;
  for (int k = 0; k < 16; ++k) schedule.push_back(0.7 * std::exp2(k / 2.0));
  CHECK(coarsest_proper_scale(a, a, schedule) == schedule.front());
  const auto s = coarsest_proper_scale(a, b, schedule);
  REQUIRE(s.has_value());
  CHECK(*s > schedule.front());
  MESSAGE("8 px shift coalesces at sigma " << *s);

  int none = 0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 r(seed);
    const Raster p = synth::noise(48, 48, r), q = synth::noise(48, 48, r);
    none += !coarsest_proper_scale(p, q, {0.5, 0.7, 1.0, 1.4}).has_value();
  }
  CHECK(none >= 19);
}

TEST_CASE("selection tree links") {
  const Raster img = synth::blob_canvas(96, 96, 60, 3);
  const SelectionTree tree = build_selection_tree(img);
  REQUIRE(tree.nodes.size() > 10);
  CHECK(!tree.roots.empty());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent < 0) continue;
    CHECK(n.parent < static_cast<int>(i));
    const auto& p = tree.nodes[n.parent].frame;
    CHECK(p.sigma > n.frame.sigma);
    CHECK((p.t - n.frame.t).norm() <= TrackParams{}.support_factor * p.sigma);
  }
}

TEST_CASE("SSD displacement recovers shifts") {
  std::mt19937 rng(9);
  const Raster a = synth::texture(64, 64, 1.5, rng);
  const Raster b = shift(a, 3, -2);
  const Eigen::Vector2d d = ssd_displacement(a, b, {32, 32}, 6, Eigen::Vector2d::Zero(), 4).d;
  CHECK(d.x() == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d.y() == doctest::Approx(-2.0).epsilon(1e-9));
  const Raster c = synth::gaussian_blob(64, 64, 30.4, 32, 3.0), e = synth::gaussian_blob(64, 64, 31.7, 32, 3.0);
  const Eigen::Vector2d f = ssd_displacement(c, e, {30, 32}, 6, Eigen::Vector2d::Zero(), 3).d;
  CHECK(f.x() == doctest::Approx(1.3).epsilon(0.1));
  CHECK(std::abs(f.y()) < 1e-6);
}

TEST_CASE("static sequence keeps every track live") {
  const Raster img = synth::blob_canvas(80, 80, 40, 5);
  const auto tracks = track_sequence({img, img, img});
  REQUIRE(!tracks.empty());
  for (const auto& tr : tracks) {
    INFO(std::string(to_string(tr.reason)) << " at " << tr.samples[0].frame.t.transpose() << " s " << tr.samples[0].frame.sigma);
    CHECK(tr.status == TrackStatus::Live);
    CHECK(tr.samples.size() == 3);
    for (const auto& s : tr.samples) CHECK(s.displacement.norm() < 1e-9);
  }
}

TEST_CASE("global shift") {
  const auto frames = synth::shifted_sequence(10, 96, 96, 3, 11);
  const auto tracks = track_sequence(frames);
  int interior = 0, followed = 0;
  for (const auto& tr : tracks) {
    for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t == tr.samples[i - 1].t + 1);
    if (tr.samples.front().t != 0) continue;
    const Frame& f = tr.samples.front().frame;
    // Tracks whose support stays in view for the whole sequence.
    const double r = 3.0 * f.sigma;
    const bool stays = f.t.x() - r > 3 && f.t.x() + 27 + r < 92 && f.t.y() - r > 3 && f.t.y() + r < 92;
    bool exact = true;
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
      exact = exact && (tr.samples[i].displacement - Eigen::Vector2d(3, 0)).norm() <= 0.3;
    if (tr.status == TrackStatus::Live) CHECK(exact);
    interior += stays;
    followed += stays && exact && tr.status == TrackStatus::Live;
  }
  MESSAGE(followed << " of " << interior << " interior tracks followed");
  REQUIRE(interior > 20);
  CHECK(followed >= 0.9 * interior);
}

TEST_CASE("occlusion breaks the covered track") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto script = synth::occlusion_script(seed);
    const auto tracks = track_sequence(script.frames);
    const Track* target = nullptr;
    for (const auto& tr : tracks)
      if (tr.samples.front().t == 0 && (tr.samples.front().frame.t - Eigen::Vector2d(script.x, script.y)).norm() < 1.0 &&
          (!target || tr.samples.front().frame.score > target->samples.front().frame.score))
        target = &tr;
    REQUIRE(target != nullptr);
    MESSAGE("seed " << seed << " k " << script.k << " break " << target->break_time << " " << std::string(to_string(target->reason)));
    CHECK(target->status == TrackStatus::Broken);
    CHECK(target->break_time == script.k);
    CHECK(target->reason == BreakReason::TopologyChange);
  }
}
