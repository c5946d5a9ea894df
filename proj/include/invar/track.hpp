#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invar/detect.hpp"

namespace invar {

/// Axis-aligned pixel window [x0, x0 + width) x [y0, y0 + height).
struct Window {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

/// Clips w to an image of the given size; the result may be empty.
Window clip(const Window& w, Eigen::Index height, Eigen::Index width);

/// True iff the ARTs of a and b smoothed at sigma agree.  With a region, both
/// smoothed images are cropped to it first, so the crop boundary acts as its
/// own virtual minimum.
bool properly_sampled(const Raster& a, const Raster& b, double sigma,
                      const std::optional<Window>& region = std::nullopt);

/// Smallest sigma of the increasing schedule at which the pair is properly
/// sampled, or nullopt when none is.
std::optional<double> coarsest_proper_scale(const Raster& a, const Raster& b,
                                            const std::vector<double>& schedule,
                                            const std::optional<Window>& region = std::nullopt);

struct TrackParams {
  double sigma0 = 1.0;
  int steps_per_octave = 3;
  int n_levels = 10;
  DetectorKind kind = DetectorKind::DoG;
  double contrast_thresh = 0.02;
  double min_margin = 0.3;       // octaves; less stable extrema are not selected
  double support_factor = 3.0;   // parent support radius, in parent sigmas
  double redetect_factor = 0.5;  // re-detection radius, in sigmas (at least 1 px)
  int proper_extra_octaves = 3;   // coarser scales appended to the proper-sampling schedule
  double max_descent = 4.0;       // coarsest estimation scale, in frame sigmas
  double min_search = 2.0;
  double max_search = 16.0;
  double max_residual = 0.2;  // accepted SSD residual, relative to the window variance
  int border = 3;            // frames predicted closer than this to the edge leave the frame
  double edge_factor = 3.0;  // ... or closer than this many sigmas
};

struct SelectionNode {
  Frame frame;
  int parent = -1;
  std::vector<int> children;
  double margin = 0.0;  // stability margin in octaves
};

/// Detected frames of one image; nodes are ordered coarse to fine, so every
/// parent precedes its children.
struct SelectionTree {
  std::vector<double> sigmas;  // detection scale schedule
  std::vector<SelectionNode> nodes;
  std::vector<int> roots;
};

SelectionTree build_selection_tree(const Raster& img, const TrackParams& params = {});

/// Proper-sampling schedule: the detection scales followed by whole octaves
/// above the coarsest one.
std::vector<double> proper_schedule(const SelectionTree& tree, const TrackParams& params = {});

/// Search radius in pixels for a node: the spatial extent sigma * 2^margin of
/// the scale interval the extremum persists over, clamped to
/// [min_search, max_search].
double search_radius(const SelectionNode& node, const TrackParams& params = {});

struct SsdMatch {
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  bool interior = false;  // false when the best integer offset is on the search boundary
  double residual = 0.0;  // best mean squared difference over the variance of a's window
};

/// Windowed SSD displacement of the neighbourhood of `at` from a to b: integer
/// search within `radius` around `guess`, then a parabolic subpixel step per axis.
SsdMatch ssd_displacement(const Raster& a, const Raster& b, const Eigen::Vector2d& at,
                          int half_window, const Eigen::Vector2d& guess, int radius);

enum class TrackStatus { Live, Broken };
enum class BreakReason { None, TopologyChange, Occlusion, OutOfFrame };

const char* to_string(TrackStatus s);
const char* to_string(BreakReason r);

struct NodeMotion {
  bool ok = false;
  Eigen::Vector2d displacement = Eigen::Vector2d::Zero();
  double sigma = 0.0;         // native selection scale of the node
  double proper_sigma = 0.0;  // coarsest proper scale of its root region
  int match = -1;             // re-detected node in the next tree
  BreakReason reason = BreakReason::None;
};

/// One step of tracking on the selection tree from img_t to img_t1.  tree_t1
/// is the selection tree of img_t1, used for re-detection.  Entry i refers to
/// tree_t.nodes[i].
std::vector<NodeMotion> tst_step(const SelectionTree& tree_t, const Raster& img_t,
                                 const Raster& img_t1, const SelectionTree& tree_t1,
                                 const TrackParams& params = {});

struct TrackSample {
  int t = 0;
  Frame frame;
  Eigen::Vector2d displacement = Eigen::Vector2d::Zero();  // from the previous sample
};

struct Track {
  int id = 0;
  std::vector<TrackSample> samples;
  TrackStatus status = TrackStatus::Live;
  BreakReason reason = BreakReason::None;
  int break_time = -1;
};

/// Tracks every selected frame through the sequence.  Frames first selected
/// after t = 0 start new tracks.
std::vector<Track> track_sequence(const std::vector<Raster>& frames, const TrackParams& params = {});

}  // namespace invar
