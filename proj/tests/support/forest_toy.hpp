#pragma once

// Square-texture toy: intensities inside a centred square form a horizontal
// ramp, outside they are a shuffled copy of the same levels, so the global
// class-conditional intensity histograms coincide exactly.

#include <algorithm>
#include <random>
#include <vector>

#include "invar/infoforest.hpp"

namespace synth {

// Features per pixel: intensity, x, y.  Class 1 inside the square.
inline invar::ForestData square_texture(unsigned seed = 1, int side = 64, int levels = 32) {
  const int lo = side / 4, hi = side - side / 4, inner = hi - lo;
  const int outside_count = side * side - inner * inner;
  std::vector<double> outside;
  for (int k = 0; k < levels; ++k)
    for (int r = 0; r < outside_count / levels; ++r) outside.push_back((k + 0.5) / levels);
  std::mt19937 rng(seed);
  std::shuffle(outside.begin(), outside.end(), rng);
  invar::ForestData d;
  d.x.resize(side * side, 3);
  d.c.resize(side * side);
  std::size_t o = 0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const int i = y * side + x;
      const bool in = x >= lo && x < hi && y >= lo && y < hi;
      d.x(i, 0) = in ? ((x - lo) * levels / inner + 0.5) / levels : outside[o++];
      d.x(i, 1) = x;
      d.x(i, 2) = y;
      d.c[i] = in ? 1 : 0;
    }
  return d;
}

}  // namespace synth
