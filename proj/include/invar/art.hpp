#pragma once

#include <string>
#include <utility>
#include <vector>

#include "invar/imgcore.hpp"

namespace invar {

enum class CriticalKind { Max, Min, Saddle };

const char* to_string(CriticalKind kind);

struct CriticalPoint {
  int x = 0;
  int y = 0;
  CriticalKind kind = CriticalKind::Max;
  double value = 0.0;
  int multiplicity = 1;  // simple saddles represented by this pixel
};

// Pixels are compared by value, ties by linear index (smaller index ranks
// higher).  Superlevel sets are 8-connected and sublevel sets 4-connected,
// which is the piecewise-linear structure of the grid triangulated so that
// every 2x2 cell's diagonal passes through the cell's highest pixel.  The
// outside of the image is one virtual vertex below every pixel.

/// Critical points of `f` itself (no smoothing), from the link of each pixel:
/// max when no neighbour in the link is higher, min when none is lower,
/// saddle when the cyclic sign sequence alternates 4 or more times.
std::vector<CriticalPoint> critical_points(const Raster& f);

/// critical_points of img smoothed at sigma.
std::vector<CriticalPoint> classify_critical(const Raster& img, double sigma);

struct ArtNode {
  int id = 0;
  CriticalKind kind = CriticalKind::Max;
  int ordinal = 0;         // rank of the critical value, 0 = virtual minimum
  bool is_virtual = false;  // the boundary minimum
  int x = -1;
  int y = -1;
  double value = 0.0;      // 0 for the virtual node; excluded from equality
};

struct ART {
  std::vector<ArtNode> nodes;
  std::vector<std::pair<int, int>> edges;  // (upper node id, lower node id)
  int root = 0;                            // the virtual minimum
  std::string encoding;                    // canonical rooted encoding

  int count(CriticalKind kind) const;  // includes the virtual minimum for Min
  std::vector<int> degrees() const;
};

/// Contour tree of `f` (no smoothing) with the virtual boundary minimum,
/// saddles of higher multiplicity split into simple ones.
ART build_art_field(const Raster& f);

/// build_art_field of img smoothed at sigma.
ART build_art(const Raster& img, double sigma);

bool art_equal(const ART& a, const ART& b);

/// Empty when the tree is connected, acyclic, has degree 1 at extrema and 3
/// at saddles, and satisfies n_max - n_saddle + n_min = 2; otherwise a
/// description of the first violation.
std::string art_invariant_violation(const ART& art);

struct ArtDiff {
  bool equal = false;
  int maxima[2] = {0, 0};
  int minima[2] = {0, 0};
  int saddles[2] = {0, 0};
  // Offset of the first differing character of the encodings, or -1.
  long first_mismatch = -1;
};

ArtDiff art_diff(const ART& a, const ART& b);

}  // namespace invar
