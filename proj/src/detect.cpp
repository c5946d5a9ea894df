#include "invar/detect.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include <Eigen/Dense>

namespace invar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDogRatio = 1.6;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

struct Second {
  Raster xx, yy, xy;
};

// Compact second differences with replicate borders.
Second second_derivatives(const Raster& f) {
  const Eigen::Index h = f.rows(), w = f.cols();
  Second d{Raster(h, w), Raster(h, w), Raster(h, w)};
  auto at = [&](Eigen::Index y, Eigen::Index x) {
    return f(std::clamp<Eigen::Index>(y, 0, h - 1), std::clamp<Eigen::Index>(x, 0, w - 1));
  };
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double c = f(y, x);
      d.xx(y, x) = at(y, x + 1) - 2.0 * c + at(y, x - 1);
      d.yy(y, x) = at(y + 1, x) - 2.0 * c + at(y - 1, x);
      d.xy(y, x) = 0.25 * (at(y + 1, x + 1) - at(y - 1, x + 1) - at(y + 1, x - 1) + at(y - 1, x - 1));
    }
  }
  return d;
}

// Strict 2-D local maxima of `r` (8-neighbourhood, one-pixel border skipped).
std::vector<Eigen::Vector2i> local_maxima(const Raster& r, double floor) {
  std::vector<Eigen::Vector2i> out;
  for (Eigen::Index y = 1; y + 1 < r.rows(); ++y) {
    for (Eigen::Index x = 1; x + 1 < r.cols(); ++x) {
      const double v = r(y, x);
      if (!(v > floor)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if ((dx || dy) && r(y + dy, x + dx) >= v) {
            is_max = false;
            break;
          }
      if (is_max) out.emplace_back(static_cast<int>(x), static_cast<int>(y));
    }
  }
  return out;
}

}  // namespace

const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::LoG: return "LoG";
    case DetectorKind::DoG: return "DoG";
    case DetectorKind::Hessian: return "Hessian";
    case DetectorKind::Harris: return "Harris";
    case DetectorKind::SuperpixelCentroid: return "SuperpixelCentroid";
  }
  return "unknown";
}

DetectorKind detector_kind_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "log") return DetectorKind::LoG;
  if (s == "dog") return DetectorKind::DoG;
  if (s == "hessian") return DetectorKind::Hessian;
  if (s == "harris") return DetectorKind::Harris;
  if (s == "superpixelcentroid" || s == "superpixel") return DetectorKind::SuperpixelCentroid;
  throw Error(ErrorCode::InvalidArgument, "unknown detector kind: " + name);
}

std::vector<Raster> blob_responses(const ScaleSpace& ss, DetectorKind kind) {
  require(ss.mode == ScaleSpaceMode::SameGrid, "blob detection needs a same-grid scale space");
  require(kind == DetectorKind::LoG || kind == DetectorKind::DoG || kind == DetectorKind::Hessian,
          "blob detection supports LoG, DoG and Hessian");
  std::vector<Raster> out;
  out.reserve(ss.size());
  for (std::size_t k = 0; k < ss.size(); ++k) {
    const Raster& l = ss.levels[k].smoothed;
    const double s = ss.sigma(k);
    if (kind == DetectorKind::DoG) {
      const Raster lk = gaussian_blur(l, s * std::sqrt(kDogRatio * kDogRatio - 1.0));
      out.push_back(-(lk - l) / (kDogRatio - 1.0));
      continue;
    }
    const Second d = second_derivatives(l);
    if (kind == DetectorKind::LoG)
      out.push_back(-(s * s) * (d.xx + d.yy));
    else
      out.push_back(std::pow(s, 4) * (d.xx * d.yy - d.xy.square()));
  }
  return out;
}

std::vector<Frame> detect_blobs(const ScaleSpace& ss, DetectorKind kind, double contrast_thresh) {
  require(ss.size() >= 3, "detect_blobs: need at least 3 scale levels");
  require(std::isfinite(contrast_thresh) && contrast_thresh >= 0.0,
          "detect_blobs: contrast threshold must be >= 0");
  const auto r = blob_responses(ss, kind);
  const Eigen::Index h = r[0].rows(), w = r[0].cols();
  const int n = static_cast<int>(r.size());
  std::vector<Frame> frames;
  for (int k = 1; k + 1 < n; ++k) {
    for (Eigen::Index y = 1; y + 1 < h; ++y) {
      for (Eigen::Index x = 1; x + 1 < w; ++x) {
        const double v = r[k](y, x);
        if (v == 0.0 || std::abs(v) < contrast_thresh) continue;
        // Saddles of the Hessian determinant are negative minima.
        if (kind == DetectorKind::Hessian && v < 0.0) continue;
        const double sgn = v > 0.0 ? 1.0 : -1.0;
        bool extremum = true;
        for (int dk = -1; dk <= 1 && extremum; ++dk)
          for (int dy = -1; dy <= 1 && extremum; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!dk && !dy && !dx) continue;
              if (sgn * r[k + dk](y + dy, x + dx) >= sgn * v) {
                extremum = false;
                break;
              }
            }
        if (!extremum) continue;

        auto f = [&](int dk, int dy, int dx) { return r[k + dk](y + dy, x + dx); };
        Eigen::Vector3d g(0.5 * (f(0, 0, 1) - f(0, 0, -1)), 0.5 * (f(0, 1, 0) - f(0, -1, 0)),
                          0.5 * (f(1, 0, 0) - f(-1, 0, 0)));
        Eigen::Matrix3d hs;
        hs(0, 0) = f(0, 0, 1) - 2 * v + f(0, 0, -1);
        hs(1, 1) = f(0, 1, 0) - 2 * v + f(0, -1, 0);
        hs(2, 2) = f(1, 0, 0) - 2 * v + f(-1, 0, 0);
        hs(0, 1) = hs(1, 0) = 0.25 * (f(0, 1, 1) - f(0, -1, 1) - f(0, 1, -1) + f(0, -1, -1));
        hs(0, 2) = hs(2, 0) = 0.25 * (f(1, 0, 1) - f(-1, 0, 1) - f(1, 0, -1) + f(-1, 0, -1));
        hs(1, 2) = hs(2, 1) = 0.25 * (f(1, 1, 0) - f(-1, 1, 0) - f(1, -1, 0) + f(-1, -1, 0));
        Eigen::Vector3d off = Eigen::Vector3d::Zero();
        const auto lu = hs.fullPivLu();
        if (lu.isInvertible()) off = -lu.solve(g);
        if (!off.allFinite()) off.setZero();
        off = off.cwiseMax(-0.5).cwiseMin(0.5);

        Frame fr;
        fr.t = Eigen::Vector2d(static_cast<double>(x) + off(0), static_cast<double>(y) + off(1));
        const double ratio = off(2) >= 0.0 ? ss.sigma(k + 1) / ss.sigma(k) : ss.sigma(k) / ss.sigma(k - 1);
        fr.sigma = ss.sigma(k) * std::pow(ratio, off(2));
        fr.kind = kind;
        fr.score = v + 0.5 * g.dot(off);
        fr.level = k;
        fr.scale_profile.reserve(r.size());
        for (const Raster& level : r) fr.scale_profile.push_back(level(y, x));
        frames.push_back(std::move(fr));
      }
    }
  }
  return frames;
}

Raster harris_response(const Raster& img, double sigma_d, double sigma_w, double kappa) {
  require_finite(img, "harris image");
  require(sigma_d > 0.0 && sigma_w > 0.0, "harris: scales must be > 0");
  const auto [gx, gy] = gradient_xy(gaussian_blur(img, sigma_d));
  const Raster a = gaussian_blur(Raster(gx.square()), sigma_w);
  const Raster b = gaussian_blur(Raster(gx * gy), sigma_w);
  const Raster c = gaussian_blur(Raster(gy.square()), sigma_w);
  return a * c - b.square() - kappa * (a + c).square();
}

std::vector<Frame> detect_harris(const Raster& img, double sigma_d, double sigma_w, double kappa,
                                 double rel_thresh) {
  const Raster r = harris_response(img, sigma_d, sigma_w, kappa);
  const double peak = r.maxCoeff();
  std::vector<Frame> frames;
  if (!(peak > 0.0)) return frames;
  const double floor = rel_thresh * peak;
  for (Eigen::Index y = 1; y + 1 < r.rows(); ++y) {
    for (Eigen::Index x = 1; x + 1 < r.cols(); ++x) {
      const double v = r(y, x);
      if (v <= 0.0 || v < floor) continue;
      // On plateaus the first pixel in raster order wins.
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy) continue;
          const double n = r(y + dy, x + dx);
          const bool before = dy < 0 || (dy == 0 && dx < 0);
          if (n > v || (before && n == v)) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      Frame fr;
      fr.t = Eigen::Vector2d(static_cast<double>(x), static_cast<double>(y));
      fr.sigma = sigma_w;
      fr.kind = DetectorKind::Harris;
      fr.score = v;
      frames.push_back(std::move(fr));
    }
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const Frame& a, const Frame& b) { return a.score > b.score; });
  return frames;
}

double default_transversality_threshold(const Raster& response) {
  return 1e-6 * (response.maxCoeff() - response.minCoeff());
}

bool transversal(const Raster& f, int x, int y, double tau_j) {
  require(x >= 1 && y >= 1 && x + 1 < f.cols() && y + 1 < f.rows(),
          "transversal: point must be interior to the response grid");
  const double fxx = f(y, x + 1) - 2.0 * f(y, x) + f(y, x - 1);
  const double fyy = f(y + 1, x) - 2.0 * f(y, x) + f(y - 1, x);
  const double fxy = 0.25 * (f(y + 1, x + 1) - f(y - 1, x + 1) - f(y + 1, x - 1) + f(y - 1, x - 1));
  const double det = fxx * fyy - fxy * fxy;
  return det > 0.0 && std::abs(det) > tau_j;
}

bool transversal(const Raster& f, int x, int y) {
  return transversal(f, x, y, default_transversality_threshold(f));
}

double stability_margin(const ScaleSpace& ss, const Frame& frame, DetectorKind kind) {
  std::vector<double> sigmas;
  for (std::size_t k = 0; k < ss.size(); ++k) sigmas.push_back(ss.sigma(k));
  return stability_margin(blob_responses(ss, kind), sigmas, frame);
}

double stability_margin(const std::vector<Raster>& r, const std::vector<double>& sigmas, const Frame& frame) {
  const int n = static_cast<int>(r.size());
  require(n > 0 && sigmas.size() == r.size(), "stability_margin: responses and scales differ in length");
  int level = frame.level;
  if (level < 0) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double d = std::abs(std::log(sigmas[k] / frame.sigma));
      if (d < best) {
        best = d;
        level = k;
      }
    }
  }
  require(level >= 0 && level < n, "stability_margin: frame level outside the scale space");

  const int px = static_cast<int>(std::lround(frame.t.x()));
  const int py = static_cast<int>(std::lround(frame.t.y()));
  require(px >= 0 && py >= 0 && px < r[0].cols() && py < r[0].rows(),
          "stability_margin: frame outside the image");
  const double sgn = r[level](py, px) >= 0.0 ? 1.0 : -1.0;

  std::vector<std::vector<Eigen::Vector2i>> ext(n);
  for (int k = 0; k < n; ++k) {
    const Raster s = sgn * r[k];
    ext[k] = local_maxima(s, 1e-3 * std::max(0.0, s.maxCoeff()));
  }

  auto nearest = [](const std::vector<Eigen::Vector2i>& pts, const Eigen::Vector2d& p, double radius) {
    int best = -1;
    double bd = radius;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i].cast<double>() - p).norm();
      if (d <= bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };

  int cur = nearest(ext[level], frame.t, 1.5);
  require(cur >= 0, "stability_margin: no extremum at the frame's own level");

  // Follow the extremum to level `to`; stop when it vanishes or when another
  // extremum at the finer of the two levels continues into the same point.
  auto follow = [&](int from, int step) {
    int k = from, idx = cur;
    while (k + step >= 0 && k + step < n) {
      const int next = k + step;
      const double radius = std::max(2.0, sigmas[std::max(k, next)]);
      const Eigen::Vector2d p = ext[k][idx].cast<double>();
      const int q = nearest(ext[next], p, radius);
      if (q < 0) break;
      const int fine = std::min(k, next), coarse = std::max(k, next);
      const int fine_idx = step > 0 ? idx : q;
      const int coarse_idx = step > 0 ? q : idx;
      bool merged = false;
      for (std::size_t i = 0; i < ext[fine].size() && !merged; ++i) {
        if (static_cast<int>(i) == fine_idx) continue;
        merged = nearest(ext[coarse], ext[fine][i].cast<double>(), radius) == coarse_idx;
      }
      if (merged) break;
      k = next;
      idx = q;
    }
    return k;
  };
  const int hi = follow(level, +1);
  const int lo = follow(level, -1);
  return std::log2(sigmas[hi] / sigmas[lo]);
}

double canonize_rotation(const Raster& img, const Frame& frame) { return dominant_orientation(img, frame).theta; }

Orientation dominant_orientation(const Raster& img, const Frame& frame) {
  require_finite(img, "canonize_rotation image");
  require(frame.sigma > 0.0, "canonize_rotation: sigma must be > 0");
  const Eigen::Index h = img.rows(), w = img.cols();
  const double cx = frame.t.x(), cy = frame.t.y();
  const int rad = static_cast<int>(std::ceil(3.0 * frame.sigma));
  const Eigen::Index x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cx)) - rad - 1);
  const Eigen::Index x1 = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(std::ceil(cx)) + rad + 1);
  const Eigen::Index y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cy)) - rad - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(h - 1, static_cast<Eigen::Index>(std::ceil(cy)) + rad + 1);
  require(x1 - x0 >= 1 && y1 - y0 >= 1, "canonize_rotation: window outside the image");
  const Raster crop = img.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1);
  const auto [gx, gy] = gradient_xy(crop);

  constexpr int kBins = 36;
  const double bw = kTwoPi / kBins;
  std::array<double, kBins> hist{};
  double total = 0.0;
  for (Eigen::Index y = 0; y < crop.rows(); ++y) {
    for (Eigen::Index x = 0; x < crop.cols(); ++x) {
      const double dx = static_cast<double>(x + x0) - cx, dy = static_cast<double>(y + y0) - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > static_cast<double>(rad * rad)) continue;
      const double mag = std::hypot(gx(y, x), gy(y, x));
      if (mag == 0.0) continue;
      const double wgt = mag * std::exp(-d2 / (2.0 * frame.sigma * frame.sigma));
      const int b = static_cast<int>(std::lround(wrap_angle(std::atan2(gy(y, x), gx(y, x))) / bw)) % kBins;
      hist[b] += wgt;
      total += wgt;
    }
  }
  if (!(total > 1e-12)) throw Error(ErrorCode::UndefinedOrientation, "no gradient energy in orientation window");
  const int p = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  const double l = hist[(p + kBins - 1) % kBins], c = hist[p], rr = hist[(p + 1) % kBins];
  const double denom = l - 2.0 * c + rr;
  const double off = denom < 0.0 ? 0.5 * (l - rr) / denom : 0.0;
  double second = 0.0;
  for (int k = 0; k < kBins; ++k) {
    if (k == p) continue;
    const double v = hist[k];
    if (v > hist[(k + kBins - 1) % kBins] && v >= hist[(k + 1) % kBins]) second = std::max(second, v);
  }
  return {wrap_angle((p + off) * bw), second / c};
}

ContrastNormalized canonize_contrast(const Raster& patch, double eps) {
  require_finite(patch, "canonize_contrast patch");
  const double mean = patch.mean();
  const double sd = std::sqrt((patch - mean).square().mean());
  if (!(sd > eps)) throw Error(ErrorCode::FlatPatch, "patch contrast below threshold");
  return {sd, mean, (patch - mean) / sd};
}

// ----- segmentation tree -----

namespace {

struct Boundary {
  double sum = 0.0;
  int len = 0;
  double cost() const { return sum / len; }
};

}  // namespace

SegTree segment_tree(const Raster& img, double sigma_stop, int gap_min) {
  require_finite(img, "segment_tree image");
  require(std::isfinite(sigma_stop) && sigma_stop > 0.0, "segment_tree: sigma_stop must be > 0");
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  const int n = h * w;

  std::vector<int> size(2 * n, 0), parent(2 * n, -1);
  std::vector<std::map<int, Boundary>> nbr(2 * n);
  for (int i = 0; i < n; ++i) size[i] = 1;
  auto link = [&](int p, int q) {
    const double jump = std::abs(img(p / w, p % w) - img(q / w, q % w));
    nbr[p][q] = {jump, 1};
    nbr[q][p] = {jump, 1};
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) link(y * w + x, y * w + x + 1);
      if (y + 1 < h) link(y * w + x, (y + 1) * w + x);
    }

  using Key = std::tuple<double, int, int, int>;  // cost, combined size, lo id, hi id
  auto key = [&](int a, int b, const Boundary& bd) {
    return Key{bd.cost(), size[a] + size[b], std::min(a, b), std::max(a, b)};
  };
  std::set<Key> queue;
  for (int p = 0; p < n; ++p)
    for (const auto& [q, bd] : nbr[p])
      if (p < q) queue.insert(key(p, q, bd));

  SegTree tree;
  tree.width = w;
  tree.height = h;
  while (!queue.empty()) {
    const auto [cost, combined, a, b] = *queue.begin();
    if (cost >= sigma_stop) break;
    const int r = n + static_cast<int>(tree.merges.size());
    for (int old : {a, b})
      for (const auto& [m, bd] : nbr[old]) queue.erase(key(old, m, bd));
    std::map<int, Boundary> joined;
    for (int old : {a, b})
      for (const auto& [m, bd] : nbr[old]) {
        if (m == a || m == b) continue;
        joined[m].sum += bd.sum;
        joined[m].len += bd.len;
        nbr[m].erase(old);
      }
    size[r] = combined;
    parent[a] = parent[b] = r;
    nbr[a].clear();
    nbr[b].clear();
    for (const auto& [m, bd] : joined) {
      nbr[m][r] = bd;
      queue.insert(key(r, m, bd));
    }
    nbr[r] = std::move(joined);
    tree.merges.push_back({a, b, r, static_cast<int>(tree.merges.size()), 0, cost});
  }

  // Steps: merges of equal cost share a step.  Greedy costs never decrease,
  // since a merged boundary averages boundaries no cheaper than the merge.
  int step = -1;
  double last = -1.0;
  for (auto& m : tree.merges) {
    if (step < 0 || m.cost != last) ++step;
    last = m.cost;
    m.step = step;
  }
  tree.n_steps = step + 1;

  const int total = n + static_cast<int>(tree.merges.size());
  std::vector<int> birth(total, 0), death(total, tree.n_steps);
  for (const auto& m : tree.merges) {
    birth[m.merged] = m.step;
    death[m.a] = death[m.b] = m.step;
  }

  // Best region along each pixel's path to the root; ties go to the larger
  // (later) region.  Parents always have larger ids than their children.
  std::vector<int> best(total);
  for (int id = total - 1; id >= 0; --id) {
    best[id] = id;
    if (parent[id] >= 0) {
      const int up = best[parent[id]];
      if (death[up] - birth[up] >= death[id] - birth[id]) best[id] = up;
    }
  }

  tree.final_labels = LabelImage(h, w);
  tree.stable_labels = LabelImage::Constant(h, w, -1);
  std::map<int, int> index;
  for (int p = 0; p < n; ++p) {
    int root = p;
    while (parent[root] >= 0) root = parent[root];
    tree.final_labels(p / w, p % w) = root;
    const int s = best[p];
    if (death[s] - birth[s] < gap_min) continue;
    auto [it, fresh] = index.emplace(s, static_cast<int>(index.size()));
    if (fresh) tree.stable.push_back({s, birth[s], death[s], death[s] - birth[s], {}});
    tree.stable[it->second].pixels.push_back(p);
    tree.stable_labels(p / w, p % w) = it->second;
  }
  return tree;
}

LabelImage SegTree::labels_at(int level) const {
  require(level >= 0 && level < n_levels(), "labels_at: level out of range");
  const int n = width * height;
  std::vector<int> parent(n + level, -1);
  for (int k = 0; k < level; ++k) parent[merges[k].a] = parent[merges[k].b] = merges[k].merged;
  LabelImage out(height, width);
  std::map<int, int> relabel;
  for (int p = 0; p < n; ++p) {
    int root = p;
    while (parent[root] >= 0) root = parent[root];
    const auto it = relabel.emplace(root, static_cast<int>(relabel.size())).first;
    out(p / width, p % width) = it->second;
  }
  return out;
}

std::vector<Frame> region_frames(const LabelImage& labels) {
  std::map<int, std::array<double, 3>> acc;  // count, sum x, sum y
  for (Eigen::Index y = 0; y < labels.rows(); ++y)
    for (Eigen::Index x = 0; x < labels.cols(); ++x) {
      const int l = labels(y, x);
      if (l < 0) continue;
      auto& a = acc[l];
      a[0] += 1.0;
      a[1] += static_cast<double>(x);
      a[2] += static_cast<double>(y);
    }
  std::vector<Frame> frames;
  for (const auto& [label, a] : acc) {
    Frame f;
    f.t = Eigen::Vector2d(a[1] / a[0], a[2] / a[0]);
    f.sigma = std::sqrt(a[0] / std::numbers::pi);
    f.kind = DetectorKind::SuperpixelCentroid;
    f.score = a[0];
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Frame> superpixel_frames(const SegTree& tree, int level) {
  return region_frames(tree.labels_at(level));
}

// ----- point-set canonization -----

namespace {

Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

PointSet SimilarityElement::apply(const PointSet& x) const {
  return (alpha * rotation(theta) * x).colwise() + T;
}

PointSet SimilarityElement::apply_inverse(const PointSet& x) const {
  return rotation(theta).transpose() * (x.colwise() - T) / alpha;
}

CanonResult canonize_similarity(const PointSet& ps, CanonMode mode) {
  require(ps.cols() >= 3, "canonize_similarity: need at least 3 points");
  require(ps.allFinite(), "canonize_similarity: non-finite coordinates");
  const double extent = (ps.colwise() - ps.col(0)).colwise().norm().maxCoeff();
  if (!(extent > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");

  SimilarityElement g;
  if (mode == CanonMode::Vertex) {
    const Eigen::Vector2d d = ps.col(1) - ps.col(0);
    g.alpha = d.norm();
    if (!(g.alpha > 1e-12 * extent))
      throw Error(ErrorCode::DegenerateConfiguration, "first two points coincide");
    g.T = ps.col(0);
    g.theta = wrap_angle(std::atan2(d.y(), d.x()));
  } else {
    g.T = ps.rowwise().mean();
    const PointSet c = ps.colwise() - g.T;
    const Eigen::Matrix2d cov = c * c.transpose() / static_cast<double>(ps.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double l0 = eig.eigenvalues()(0), l1 = eig.eigenvalues()(1);
    if (!(l1 - l0 > 1e-12 * l1))
      throw Error(ErrorCode::DegenerateConfiguration, "principal axis undefined (isotropic set)");
    Eigen::Vector2d axis = eig.eigenvectors().col(1);
    const double m3 = (axis.transpose() * c).array().cube().sum();
    const double scale3 = std::pow(l1, 1.5) * static_cast<double>(ps.cols());
    if (!(std::abs(m3) > 1e-12 * scale3))
      throw Error(ErrorCode::DegenerateConfiguration, "principal axis sign undefined (symmetric set)");
    if (m3 < 0.0) axis = -axis;
    g.theta = wrap_angle(std::atan2(axis.y(), axis.x()));
    g.alpha = std::sqrt(c.colwise().squaredNorm().mean());
  }
  PointSet canon = g.apply_inverse(ps);
  if (mode == CanonMode::Vertex) {
    // The two base points are fixed by construction; pin them exactly.
    canon.col(0).setZero();
    canon.col(1) = Eigen::Vector2d(1.0, 0.0);
  }
  return {std::move(canon), g};
}

std::vector<CanonResult> canonize_all_orderings(const PointSet& ps) {
  std::vector<CanonResult> out;
  const Eigen::Index n = ps.cols();
  for (Eigen::Index s = 0; s < n; ++s) {
    PointSet rolled(2, n);
    for (Eigen::Index i = 0; i < n; ++i) rolled.col(i) = ps.col((s + i) % n);
    out.push_back(canonize_similarity(rolled, CanonMode::Vertex));
  }
  return out;
}

}  // namespace invar
