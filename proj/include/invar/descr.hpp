#pragma once

#include <string>
#include <vector>

#include "invar/detect.hpp"

namespace invar {

struct PatchParams {
  int size = 32;            // G
  double half_width = 4.0;  // window half-width in frame sigmas
};

/// Canonized G x G patch.  Sample (i, j) is taken at image point
/// t + R(theta) * s * (j - G/2, i - G/2) with spacing s = 2 half_width sigma / G.
struct Patch {
  Raster values;  // contrast-canonized: mean 0, std 1
  double alpha = 1.0;
  double beta = 0.0;
};

/// Throws Error(FlatPatch) when the window has no contrast.
Patch extract_patch(const Raster& img, const Frame& frame, const PatchParams& params = {});

struct TemplateDescriptor {
  int grid = 8;
  std::vector<double> mean;  // per cell circular mean direction, [0, 2 pi), row-major
  std::vector<double> std;   // per cell circular std, sqrt(-2 ln R)
  int count = 0;
};

/// Per-cell direction of the summed gradient of one patch, in [0, 2 pi).
std::vector<double> cell_directions(const Raster& patch, int grid);

TemplateDescriptor best_template(const std::vector<Patch>& samples, int grid = 8);

struct TimeHOG {
  int grid = 4;
  int bins = 8;
  std::vector<double> hist;  // grid * grid cells of `bins` values, row-major
};

/// Magnitude-weighted orientation histograms over [0, 2 pi) with linear
/// interpolation between adjacent bins, summed over samples and
/// l1-normalized per cell.  Independent of the order of the samples.
TimeHOG time_hog(const std::vector<Patch>& samples, int grid = 4, int bins = 8);

enum class DescrMetric { L2, Chi2 };

DescrMetric descr_metric_from_string(const std::string& name);
const char* to_string(DescrMetric m);

/// L2 over cells of the angular differences wrapped to [0, pi].  Chi2 is not
/// defined for angles and is rejected.
double descr_distance(const TemplateDescriptor& a, const TemplateDescriptor& b,
                      DescrMetric metric = DescrMetric::L2);

/// L2 or chi-square 0.5 sum (a - b)^2 / (a + b) over concatenated cells.
double descr_distance(const TimeHOG& a, const TimeHOG& b, DescrMetric metric = DescrMetric::L2);

}  // namespace invar
