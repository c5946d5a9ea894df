#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invar/imgcore.hpp"

namespace invar {

enum class DetectorKind { LoG, DoG, Hessian, Harris, SuperpixelCentroid };

const char* to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(const std::string& name);

struct Frame {
  Eigen::Vector2d t = Eigen::Vector2d::Zero();  // (x, y) in pixels
  double sigma = 1.0;
  double theta = 0.0;  // [0, 2 pi)
  double alpha = 1.0;  // contrast gain
  double beta = 0.0;   // contrast offset
  DetectorKind kind = DetectorKind::DoG;
  double score = 0.0;
  int level = -1;  // scale-space level the frame was detected at, if any
  // Detector response at (x, y) for every level of the scale space the
  // frame came from.  No single scale is ever selected globally.
  std::vector<double> scale_profile;
};

/// Normalised response stack for the blob detectors, one raster per scale
/// level.  DoG level k uses (L(k sigma) - L(sigma)) / (k - 1), k = 1.6.
/// Signs are chosen so bright blobs give positive maxima for every kind.
std::vector<Raster> blob_responses(const ScaleSpace& ss, DetectorKind kind);

std::vector<Frame> detect_blobs(const ScaleSpace& ss, DetectorKind kind, double contrast_thresh);

/// Harris response det(M) - kappa tr(M)^2.
Raster harris_response(const Raster& img, double sigma_d, double sigma_w, double kappa);

/// Local maxima of the Harris response with R >= rel_thresh * max R.
std::vector<Frame> detect_harris(const Raster& img, double sigma_d, double sigma_w,
                                 double kappa = 0.04, double rel_thresh = 0.01);

/// Default transversality threshold: 1e-6 of the response dynamic range.
double default_transversality_threshold(const Raster& response);

/// True iff the discrete Hessian of `response` at interior pixel (x, y) is
/// definite and |det| > tau_j.
bool transversal(const Raster& response, int x, int y, double tau_j);
bool transversal(const Raster& response, int x, int y);

/// Scale-space persistence of the extremum at `frame`, in octaves: the
/// extremum is followed level by level in both directions until it
/// vanishes or merges with another extremum.
double stability_margin(const ScaleSpace& ss, const Frame& frame,
                        DetectorKind kind = DetectorKind::DoG);
/// Same, on a precomputed response stack with its scale per level.
double stability_margin(const std::vector<Raster>& responses, const std::vector<double>& sigmas,
                        const Frame& frame);

/// Dominant gradient orientation in a Gaussian window of radius 3 sigma.
/// Throws UndefinedOrientation when the window has no gradient energy.
double canonize_rotation(const Raster& img, const Frame& frame);

struct Orientation {
  double theta = 0.0;
  // Height of the strongest other histogram peak relative to the dominant
  // one; near 1 the orientation is ambiguous.
  double peak_ratio = 0.0;
};

/// canonize_rotation with the ambiguity of the histogram peak.
Orientation dominant_orientation(const Raster& img, const Frame& frame);

struct ContrastNormalized {
  double alpha;  // std
  double beta;   // mean
  Raster patch;
};

/// Throws FlatPatch when std <= eps.
ContrastNormalized canonize_contrast(const Raster& patch, double eps = 1e-8);

// ----- segmentation tree -----

struct MergeEvent {
  int a;       // smaller id of the merged pair
  int b;       // larger id of the merged pair
  int merged;  // id of the new region, N + level
  int level;   // merge index k = 0, 1, ...
  int step;    // rank of `cost` among the distinct merge costs
  double cost; // mean absolute intensity jump across the shared boundary
};

// Merge steps are counted on distinct merge costs: merges of equal cost
// happen at the same step.  With all costs distinct this is the plain merge
// index.
struct StableRegion {
  int id;     // region id (pixel ids 0..N-1, merged regions N, N+1, ...)
  int birth;  // step of the merge that created it (0 for pixels)
  int death;  // step of the merge that absorbed it, or the step count if it survived
  int gap;    // death - birth
  std::vector<int> pixels;  // linear indices y * width + x
};

struct SegTree {
  int width = 0;
  int height = 0;
  std::vector<MergeEvent> merges;
  // Region id at the final level for every pixel.
  LabelImage final_labels;
  int n_steps = 0;  // number of distinct merge costs
  std::vector<StableRegion> stable;
  // Index into `stable` per pixel (-1 where no region reaches gap_min).
  LabelImage stable_labels;

  int n_levels() const { return static_cast<int>(merges.size()) + 1; }
  /// Region partition after the first `level` merges, relabelled 0..R-1
  /// in raster order of first appearance.
  LabelImage labels_at(int level) const;
};

SegTree segment_tree(const Raster& img, double sigma_stop, int gap_min);

std::vector<Frame> superpixel_frames(const SegTree& tree, int level);
std::vector<Frame> region_frames(const LabelImage& labels);

// ----- point-set canonization -----

using PointSet = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct SimilarityElement {
  Eigen::Vector2d T = Eigen::Vector2d::Zero();
  double theta = 0.0;
  double alpha = 1.0;

  /// g(x) = alpha R(theta) x + T.
  PointSet apply(const PointSet& x) const;
  /// g^{-1}(x) = (1/alpha) R(theta)^T (x - T).
  PointSet apply_inverse(const PointSet& x) const;
};

enum class CanonMode { Vertex, Stable };

struct CanonResult {
  PointSet canonical;
  SimilarityElement g;
};

/// Vertex scheme: p1 -> origin, p2 -> (1, 0).  Stable scheme: centroid ->
/// origin, principal axis -> +x (sign fixed by third moment), RMS radius
/// -> 1.
CanonResult canonize_similarity(const PointSet& ps, CanonMode mode = CanonMode::Vertex);

/// Vertex canonization of each cyclic re-ordering of the points.
std::vector<CanonResult> canonize_all_orderings(const PointSet& ps);

}  // namespace invar
