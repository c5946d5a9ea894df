#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "forest_toy.hpp"
#include "invar/error.hpp"
#include "invar/infoforest.hpp"

using namespace invar;

namespace {

std::vector<int> all_of(const ForestData& d) {
  std::vector<int> idx(d.c.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

ForestData noisy_data(int n, int features, std::mt19937& rng, double signal = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  ForestData d;
  d.x.resize(n, features);
  d.c.resize(n);
  for (int i = 0; i < n; ++i) {
    d.c[i] = coin(rng) ? 1 : 0;
    for (int f = 0; f < features; ++f) d.x(i, f) = g(rng) + (f == 0 ? signal * d.c[i] : 0.0);
  }
  return d;
}

// Every distinct value except the smallest, so both sides are non-empty.
std::vector<double> all_thresholds(const ForestData& d, int f) {
  std::vector<double> v(d.x.col(f).data(), d.x.col(f).data() + d.x.rows());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  v.erase(v.begin());
  return v;
}

}  // namespace

TEST_CASE("entropy score") {
  ForestData d;
  d.x.resize(6, 2);
  d.x << 0, 5, 1, 4, 2, 3, 3, 2, 4, 1, 5, 0;
  d.c = {0, 0, 0, 1, 1, 1};
  const auto idx = all_of(d);
  CHECK(label_entropy(d, idx) == 1.0);
  CHECK(entropy_score(d, idx, {0, 3.0}) == 0.0);
  CHECK(entropy_score(d, idx, {1, 3.0}) == 0.0);

  // Label-independent split: each side keeps the parent's label mix.
  ForestData e;
  e.x.resize(8, 1);
  e.x << 0, 0, 0, 0, 1, 1, 1, 1;
  e.c = {0, 1, 0, 1, 1, 0, 1, 0};
  CHECK(entropy_score(e, all_of(e), {0, 1.0}) == label_entropy(e, all_of(e)));

  // Independent recount.
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ForestData r = noisy_data(40, 2, rng, 0.8);
    const auto ids = all_of(r);
    for (double t : candidate_thresholds(r, ids, 0)) {
      double n1 = 0, n0 = 0, a1 = 0, a0 = 0;
      for (int i : ids) {
        if (r.x(i, 0) >= t) {
          ++n1;
          a1 += r.c[i];
        } else {
          ++n0;
          a0 += r.c[i];
        }
      }
      auto h = [](double ones, double n) {
        double s = 0.0;
        for (double k : {ones, n - ones})
          if (k > 0) s -= k / n * std::log2(k / n);
        return s;
      };
      const double want = n1 / (n1 + n0) * h(a1, n1) + n0 / (n1 + n0) * h(a0, n0);
      CHECK(entropy_score(r, ids, {0, t}) == doctest::Approx(want).epsilon(1e-12));
      CHECK(entropy_score(r, ids, {0, t}) <= label_entropy(r, ids) + 1e-9);
    }
  }
  CHECK_THROWS_AS(entropy_score(d, idx, {0, 100.0}), Error);
}

TEST_CASE("kl score") {
  // Identical class-conditionals on both sides.
  ForestData d;
  d.x.resize(8, 2);
  d.x << 0.1, 0, 0.1, 0, 0.9, 0, 0.9, 0, 0.1, 1, 0.1, 1, 0.9, 1, 0.9, 1;
  d.c = {0, 1, 0, 1, 0, 1, 0, 1};
  CHECK(kl_score(d, all_of(d), {1, 1.0}) < 1e-6);

  // Class-separating measurement inside S only: the score grows with |S|.
  const int n = 200;
  ForestData s;
  s.x.resize(n, 2);
  s.c.resize(n);
  for (int i = 0; i < n; ++i) {
    s.c[i] = i % 2;
    s.x(i, 1) = i;  // location
  }
  double prev = -1.0;
  for (int cut : {180, 140, 100, 60, 20}) {
    for (int i = 0; i < n; ++i) {
      const bool inside = i >= cut;
      // Inside S classes sit in disjoint halves of the range; outside both
      // classes share the same values.
      s.x(i, 0) = inside ? (s.c[i] ? 0.75 : 0.25) + 0.001 * (i % 7) : 0.5 + 0.001 * ((i / 2) % 7);
    }
    s.x(0, 0) = 0.0;
    s.x(1, 0) = 1.0;
    const double v = kl_score(s, all_of(s), {1, static_cast<double>(cut)});
    CHECK(v > prev);
    prev = v;
  }

  // Symmetric variant dominates the plain one.
  std::mt19937 rng(5);
  const ForestData r = noisy_data(60, 2, rng, 1.0);
  KlParams sym;
  sym.symmetric = true;
  for (double t : candidate_thresholds(r, all_of(r), 1))
    CHECK(kl_score(r, all_of(r), {1, t}, sym) >= kl_score(r, all_of(r), {1, t}));
}

TEST_CASE("scores do not depend on sample order") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ForestData d = noisy_data(50, 3, rng, 0.7);
    auto idx = all_of(d);
    auto shuffled = idx;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int f = 0; f < 3; ++f)
      for (double t : candidate_thresholds(d, idx, f)) {
        CHECK(kl_score(d, idx, {f, t}) == kl_score(d, shuffled, {f, t}));
        CHECK(entropy_score(d, idx, {f, t}) == entropy_score(d, shuffled, {f, t}));
      }
  }
}

TEST_CASE("square texture toy") {
  const ForestData d = synth::square_texture();
  const auto idx = all_of(d);
  double global = 0.0, window = 0.0;
  for (int f = 0; f < 3; ++f)
    for (double t : all_thresholds(d, f)) {
      const double v = kl_score(d, idx, {f, t});
      (f == 0 ? global : window) = std::max(f == 0 ? global : window, v);
    }
  CHECK(global < 0.05);
  CHECK(window > 0.5);

  GrowParams p;
  p.tau = 1.0;
  const ForestTree t = grow(d, p);
  REQUIRE_FALSE(t.nodes.front().leaf);
  CHECK(t.nodes.front().mode == SplitMode::KL);
  CHECK(t.nodes.front().stump.feature != 0);
  CHECK(accuracy(t, d) >= 0.9);
}

TEST_CASE("growth") {
  // Separable 1-D data.
  ForestData d;
  d.x.resize(10, 1);
  for (int i = 0; i < 10; ++i) d.x(i, 0) = i;
  d.c = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const ForestTree t = grow_entropy_only(d);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].stump.theta == 5.0);
  CHECK(t.nodes[1].posterior == 1.0);
  CHECK(t.nodes[2].posterior == 0.0);
  CHECK(accuracy(t, d) == 1.0);

  // tau = 0 reduces to entropy-only growth.
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ForestData r = noisy_data(120, 3, rng, 0.5 * (trial % 4));
    GrowParams p;
    p.tau = 0.0;
    p.max_depth = 2 + trial % 5;
    CHECK(same_tree(grow(r, p), grow_entropy_only(r, p.max_depth)));
  }

  // The depth cap holds and leaves carry posteriors.
  const ForestData r = noisy_data(300, 2, rng, 0.3);
  GrowParams p;
  p.tau = 5.0;
  p.max_depth = 3;
  for (const ForestNode& n : grow(r, p).nodes) {
    CHECK(n.depth <= 3);
    CHECK(n.posterior >= 0.0);
    CHECK(n.posterior <= 1.0);
  }
  CHECK_THROWS_AS(grow(ForestData{}), Error);
}
