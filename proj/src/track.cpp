#include "invar/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "invar/art.hpp"
#include "invar/error.hpp"

namespace invar {

Window clip(const Window& w, Eigen::Index height, Eigen::Index width) {
  const int x0 = std::max(0, w.x0), y0 = std::max(0, w.y0);
  const int x1 = std::min<int>(static_cast<int>(width), w.x0 + w.width);
  const int y1 = std::min<int>(static_cast<int>(height), w.y0 + w.height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

namespace {

int half_window(double sigma) { return std::max(3, static_cast<int>(std::ceil(2.0 * sigma))); }

Raster crop(const Raster& img, const Window& w) {
  return img.block(w.y0, w.x0, w.height, w.width);
}

bool proper_on_blurred(const Raster& ab, const Raster& bb, const std::optional<Window>& region) {
  if (!region) return art_equal(build_art_field(ab), build_art_field(bb));
  const Window w = clip(*region, ab.rows(), ab.cols());
  if (w.width == 0 || w.height == 0) return true;
  return art_equal(build_art_field(crop(ab, w)), build_art_field(crop(bb, w)));
}

Window square_at(const Eigen::Vector2d& c, int half) {
  const int cx = static_cast<int>(std::lround(c.x())), cy = static_cast<int>(std::lround(c.y()));
  return {cx - half, cy - half, 2 * half + 1, 2 * half + 1};
}

bool inside(const Eigen::Vector2d& p, Eigen::Index h, Eigen::Index w, double border) {
  return p.x() >= border && p.y() >= border && p.x() <= w - 1 - border && p.y() <= h - 1 - border;
}

// Distance a frame must keep from the image edge to stay in view.
double edge_distance(const Frame& f, const TrackParams& params) {
  return std::max<double>(params.border, params.edge_factor * f.sigma);
}

// Blurred copies of a frame pair, computed once per scale.
class BlurCache {
 public:
  BlurCache(const Raster& a, const Raster& b) : a_(a), b_(b) {}
  const std::pair<Raster, Raster>& at(double sigma) {
    auto it = cache_.find(sigma);
    if (it == cache_.end())
      it = cache_.emplace(sigma, std::make_pair(gaussian_blur(a_, sigma), gaussian_blur(b_, sigma))).first;
    return it->second;
  }

 private:
  const Raster& a_;
  const Raster& b_;
  std::map<double, std::pair<Raster, Raster>> cache_;
};

}  // namespace

bool properly_sampled(const Raster& a, const Raster& b, double sigma, const std::optional<Window>& region) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "properly_sampled: image sizes differ");
  require(std::isfinite(sigma) && sigma >= 0.0, "properly_sampled: sigma must be >= 0");
  return proper_on_blurred(gaussian_blur(a, sigma), gaussian_blur(b, sigma), region);
}

std::optional<double> coarsest_proper_scale(const Raster& a, const Raster& b,
                                            const std::vector<double>& schedule,
                                            const std::optional<Window>& region) {
  require(std::is_sorted(schedule.begin(), schedule.end()), "coarsest_proper_scale: schedule must increase");
  for (double s : schedule)
    if (properly_sampled(a, b, s, region)) return s;
  return std::nullopt;
}

SelectionTree build_selection_tree(const Raster& img, const TrackParams& params) {
  require_finite(img, "build_selection_tree");
  const ScaleSpace ss = build_scale_space(img, params.sigma0, params.steps_per_octave, params.n_levels);
  SelectionTree tree;
  for (std::size_t k = 0; k < ss.size(); ++k) tree.sigmas.push_back(ss.sigma(k));
  const auto responses = blob_responses(ss, params.kind);
  auto frames = detect_blobs(ss, params.kind, params.contrast_thresh);
  // Frames whose support leaves the image cannot be followed and are not selected.
  std::erase_if(frames, [&](const Frame& f) { return !inside(f.t, img.rows(), img.cols(), edge_distance(f, params)); });
  std::stable_sort(frames.begin(), frames.end(), [](const Frame& p, const Frame& q) {
    if (p.sigma != q.sigma) return p.sigma > q.sigma;
    if (p.t.y() != q.t.y()) return p.t.y() < q.t.y();
    return p.t.x() < q.t.x();
  });
  for (const Frame& f : frames) {
    SelectionNode node;
    node.frame = f;
    node.margin = stability_margin(responses, tree.sigmas, f);
    // Extrema that do not persist across a single scale step are not
    // structurally stable and are not selected.
    if (node.margin < params.min_margin) continue;
    tree.nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const Frame& c = tree.nodes[i].frame;
    int best = -1;
    for (std::size_t j = 0; j < i; ++j) {
      const Frame& p = tree.nodes[j].frame;
      if (p.sigma <= c.sigma) continue;
      if ((p.t - c.t).norm() > params.support_factor * p.sigma) continue;
      if (best < 0) {
        best = static_cast<int>(j);
        continue;
      }
      const Frame& q = tree.nodes[best].frame;
      if (p.sigma < q.sigma || (p.sigma == q.sigma && (p.t - c.t).norm() < (q.t - c.t).norm()))
        best = static_cast<int>(j);
    }
    tree.nodes[i].parent = best;
    if (best >= 0)
      tree.nodes[best].children.push_back(static_cast<int>(i));
    else
      tree.roots.push_back(static_cast<int>(i));
  }
  return tree;
}

std::vector<double> proper_schedule(const SelectionTree& tree, const TrackParams& params) {
  std::vector<double> s = tree.sigmas;
  if (s.empty()) return s;
  const double top = s.back();
  for (int j = 1; j <= params.proper_extra_octaves; ++j) s.push_back(top * std::exp2(j));
  return s;
}

double search_radius(const SelectionNode& node, const TrackParams& params) {
  return std::clamp(node.frame.sigma * std::exp2(node.margin), params.min_search, params.max_search);
}

SsdMatch ssd_displacement(const Raster& a, const Raster& b, const Eigen::Vector2d& at,
                                 int half_window, const Eigen::Vector2d& guess, int radius) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "ssd_displacement: image sizes differ");
  require(half_window >= 1 && radius >= 1, "ssd_displacement: window and radius must be >= 1");
  const Window w = clip(square_at(at, half_window), a.rows(), a.cols());
  require(w.width > 0 && w.height > 0, "ssd_displacement: window outside the image");
  const int n = 2 * radius + 1;
  // Integer grid around the rounded guess, so exact integer motion is found exactly.
  const Eigen::Vector2d guess_i(std::round(guess.x()), std::round(guess.y()));
  Eigen::ArrayXXd cost(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double dx = guess_i.x() + (i - radius), dy = guess_i.y() + (j - radius);
      // Mean over the pixels whose match stays inside b.
      double c = 0.0;
      int count = 0;
      for (int y = w.y0; y < w.y0 + w.height; ++y)
        for (int x = w.x0; x < w.x0 + w.width; ++x) {
          const double bx = x + dx, by = y + dy;
          if (bx < 0.0 || by < 0.0 || bx > b.cols() - 1.0 || by > b.rows() - 1.0) continue;
          const double r = a(y, x) - sample_bilinear(b, bx, by);
          c += r * r;
          ++count;
        }
      cost(j, i) = count > 0 ? c / count : std::numeric_limits<double>::infinity();
    }
  Eigen::Index bj = 0, bi = 0;
  const double best = cost.minCoeff(&bj, &bi);
  const Raster patch = crop(a, w);
  const double var = (patch - patch.mean()).square().mean();
  const double residual = best == 0.0 ? 0.0 : var > 0.0 ? best / var : std::numeric_limits<double>::infinity();
  auto vertex = [](double cm, double c0, double cp) {
    const double den = cm - 2.0 * c0 + cp;
    if (den <= 0.0) return 0.0;
    return std::clamp(0.5 * (cm - cp) / den, -0.5, 0.5);
  };
  double ox = 0.0, oy = 0.0;
  // An exact match needs no subpixel step; the parabola would be biased.
  const bool interior = bi > 0 && bj > 0 && bi + 1 < n && bj + 1 < n;
  if (cost(bj, bi) == 0.0) return {{guess_i.x() + (bi - radius), guess_i.y() + (bj - radius)}, interior, residual};
  if (bi > 0 && bi + 1 < n) ox = vertex(cost(bj, bi - 1), cost(bj, bi), cost(bj, bi + 1));
  if (bj > 0 && bj + 1 < n) oy = vertex(cost(bj - 1, bi), cost(bj, bi), cost(bj + 1, bi));
  return {{guess_i.x() + (bi - radius) + ox, guess_i.y() + (bj - radius) + oy}, interior, residual};
}

const char* to_string(TrackStatus s) { return s == TrackStatus::Live ? "live" : "broken"; }

const char* to_string(BreakReason r) {
  switch (r) {
    case BreakReason::None: return "none";
    case BreakReason::TopologyChange: return "topology-change";
    case BreakReason::Occlusion: return "occlusion";
    case BreakReason::OutOfFrame: return "out-of-frame";
  }
  return "none";
}

namespace {

int redetect(const SelectionTree& next, const Frame& f, const Eigen::Vector2d& target, const TrackParams& params) {
  const double rho = std::max(1.0, params.redetect_factor * f.sigma);
  // Candidates on the frame's own level take precedence over adjacent levels;
  // within the chosen set the re-detection must be unique.
  std::vector<int> same, adjacent;
  for (std::size_t j = 0; j < next.nodes.size(); ++j) {
    const Frame& g = next.nodes[j].frame;
    if (std::abs(g.level - f.level) > 1) continue;
    if ((g.score > 0.0) != (f.score > 0.0)) continue;
    if ((g.t - target).norm() > rho) continue;
    (g.level == f.level ? same : adjacent).push_back(static_cast<int>(j));
  }
  const auto& pick = same.empty() ? adjacent : same;
  return pick.size() == 1 ? pick[0] : -1;
}

}  // namespace

std::vector<NodeMotion> tst_step(const SelectionTree& tree_t, const Raster& img_t, const Raster& img_t1,
                                 const SelectionTree& tree_t1, const TrackParams& params) {
  require(img_t.rows() == img_t1.rows() && img_t.cols() == img_t1.cols(), "tst_step: image sizes differ");
  const Eigen::Index h = img_t.rows(), w = img_t.cols();
  const auto schedule = proper_schedule(tree_t, params);
  BlurCache blur(img_t, img_t1);
  std::vector<NodeMotion> out(tree_t.nodes.size());

  for (std::size_t i = 0; i < tree_t.nodes.size(); ++i) {
    const SelectionNode& node = tree_t.nodes[i];
    const Frame& f = node.frame;
    NodeMotion& m = out[i];
    m.sigma = f.sigma;
    Eigen::Vector2d guess = Eigen::Vector2d::Zero();
    int radius = static_cast<int>(std::ceil(params.min_search));

    if (node.parent >= 0 && out[node.parent].ok) {
      // Propagate the coarser estimate; only a small correction is searched.
      guess = out[node.parent].displacement;
      m.proper_sigma = out[node.parent].proper_sigma;
    } else {
      const int half = static_cast<int>(std::ceil(3.0 * f.sigma)) + 2;
      const Window region = clip(square_at(f.t, half), h, w);
      if (region.width < 4 || region.height < 4) {
        m.reason = BreakReason::OutOfFrame;
        continue;
      }
      std::optional<double> proper;
      for (double s : schedule) {
        const auto& [ab, bb] = blur.at(s);
        if (proper_on_blurred(ab, bb, region)) {
          proper = s;
          break;
        }
      }
      if (!proper) {
        m.reason = BreakReason::TopologyChange;
        continue;
      }
      m.proper_sigma = *proper;
      // Estimate at the proper scale (at most max_descent times the frame's
      // own) within the structural-stability radius, then carry the estimate
      // down the schedule to the frame's own scale.
      int r = static_cast<int>(std::ceil(search_radius(node, params)));
      const int cap = static_cast<int>(std::max(h, w)) / 2;
      for (auto it = schedule.rbegin(); it != schedule.rend(); ++it) {
        const double sc = *it;
        if (sc > *proper || sc > params.max_descent * f.sigma || sc <= f.sigma) continue;
        const int hw = std::clamp(static_cast<int>(std::ceil(2.0 * sc)), half_window(f.sigma), cap);
        const auto& [ac, bc] = blur.at(sc);
        guess = ssd_displacement(ac, bc, f.t, hw, guess, r + 1).d;
        r = radius;
      }
      radius = r;
    }

    if (!inside(f.t + guess, h, w, edge_distance(f, params))) {
      m.reason = BreakReason::OutOfFrame;
      continue;
    }
    const auto& [an, bn] = blur.at(f.sigma);
    const SsdMatch match_d = ssd_displacement(an, bn, f.t, half_window(f.sigma), guess, radius + 1);
    const Eigen::Vector2d d = match_d.d;
    // Moving farther than the stability neighbourhood allows, or matching
    // nothing that resembles the frame's neighbourhood, ends the track.
    if (!match_d.interior || match_d.residual > params.max_residual) {
      m.reason = BreakReason::TopologyChange;
      continue;
    }
    const Eigen::Vector2d target = f.t + d;
    if (!inside(target, h, w, edge_distance(f, params))) {
      m.reason = BreakReason::OutOfFrame;
      continue;
    }
    const int match = redetect(tree_t1, f, target, params);
    if (match < 0) {
      m.reason = BreakReason::TopologyChange;
      continue;
    }
    m.ok = true;
    m.displacement = d;
    m.match = match;
  }
  return out;
}

namespace {

Frame oriented(const Raster& img, Frame f) {
  try {
    f.theta = canonize_rotation(img, f);
  } catch (const Error&) {
    f.theta = 0.0;
  }
  return f;
}

}  // namespace

std::vector<Track> track_sequence(const std::vector<Raster>& frames, const TrackParams& params) {
  std::vector<Track> tracks;
  if (frames.empty()) return tracks;
  SelectionTree tree = build_selection_tree(frames[0], params);
  std::vector<int> owner(tree.nodes.size());  // node -> index into tracks
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    Track tr;
    tr.id = static_cast<int>(tracks.size());
    tr.samples.push_back({0, oriented(frames[0], tree.nodes[i].frame), Eigen::Vector2d::Zero()});
    owner[i] = tr.id;
    tracks.push_back(std::move(tr));
  }
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const int t1 = static_cast<int>(t + 1);
    SelectionTree next = build_selection_tree(frames[t + 1], params);
    const auto motion = tst_step(tree, frames[t], frames[t + 1], next, params);
    std::vector<int> next_owner(next.nodes.size(), -1);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      Track& tr = tracks[owner[i]];
      const NodeMotion& m = motion[i];
      if (m.ok && next_owner[m.match] < 0) {
        next_owner[m.match] = tr.id;
        tr.samples.push_back({t1, oriented(frames[t + 1], next.nodes[m.match].frame), m.displacement});
        continue;
      }
      tr.status = TrackStatus::Broken;
      tr.reason = m.ok ? BreakReason::TopologyChange : m.reason;
      tr.break_time = t1;
    }
    for (std::size_t j = 0; j < next.nodes.size(); ++j) {
      if (next_owner[j] >= 0) continue;
      Track tr;
      tr.id = static_cast<int>(tracks.size());
      tr.samples.push_back({t1, oriented(frames[t + 1], next.nodes[j].frame), Eigen::Vector2d::Zero()});
      next_owner[j] = tr.id;
      tracks.push_back(std::move(tr));
    }
    tree = std::move(next);
    owner = std::move(next_owner);
  }
  return tracks;
}

}  // namespace invar
