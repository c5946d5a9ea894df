#pragma once

#include <vector>

#include "invar/imgcore.hpp"

namespace invar {

using Offsets = std::vector<Eigen::Vector2i>;  // (dx, dy), never (0, 0)

/// Offsets of the centred (2h+1) x (2h+1) square without its centre.
Offsets square_offsets(int halfwidth);

/// Uniform quantization of the region's [min, max] into Q levels; a constant
/// region maps to level 0.
Image<int> quantize(const Raster& region, int levels);

/// Plug-in conditional entropy in bits of the quantized centre pixel given the
/// quantized values at the offsets, over every pixel whose context lies
/// inside the region.
double cond_entropy(const Raster& region, const Offsets& omega, int levels = 8);

struct TextureModel {
  int halfwidth = 0;            // omega is square_offsets(halfwidth)
  double sigma = 1.0;           // stationarity scale, the square's side in pixels
  double entropy_bits = 0.0;
  int levels = 8;
  double beta = 0.0;
  double objective = 0.0;       // entropy_bits + sigma^2 / beta
};

/// Minimizes cond_entropy + |square|/beta over the candidate half-widths;
/// ties go to the smaller square.
TextureModel infer_neighborhood(const Raster& region, double beta, const std::vector<int>& halfwidths,
                                int levels = 8);

/// Marginal entropy in bits of the quantized image inside centred squares of
/// the given half-widths around (x, y).  Quantization is over the whole image
/// so the levels are shared by every window.
std::vector<double> entropy_profile(const Raster& img, int x, int y, const std::vector<int>& halfwidths,
                                    int levels = 8);

enum class RegionKind { Texture, Structure };

const char* to_string(RegionKind k);

/// Structure iff the DoG response at sigma has exactly one transversal
/// extremum in the region carrying at least `rel_thresh` of the peak
/// response; several or none make it texture.
RegionKind texture_or_structure(const Raster& region, double sigma, double rel_thresh = 0.25);

}  // namespace invar
