#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "invar/art.hpp"
#include "invar/depthorder.hpp"
#include "invar/descr.hpp"
#include "invar/detect.hpp"
#include "invar/flatland.hpp"
#include "invar/infoforest.hpp"
#include "invar/texture.hpp"
#include "invar/timewarp.hpp"
#include "invar/track.hpp"

namespace invar::ser {

using nlohmann::json;

/// {x, y, sigma, theta, alpha, beta, kind, score}
json to_json(const Frame& f);
json to_json(const std::vector<Frame>& frames);

/// nodes [{id, kind, ordinal, virtual, x, y, value}], edges [[upper, lower]],
/// root, encoding.
json to_json(const ART& art);
ART art_from_json(const json& j);
json to_json(const ArtDiff& d);

/// One {track_id, t, x, y, sigma, theta, status} line per sample.  Every
/// sample but the last of a broken track is "live"; that one carries the
/// track's status and a "reason".
std::string tracks_to_jsonl(const std::vector<Track>& tracks);
std::vector<Track> tracks_from_jsonl(const std::string& text);

json to_json(const TemplateDescriptor& d);
json to_json(const TimeHOG& h);

/// {omega_halfwidth, sigma, entropy_bits, Q, beta}
json to_json(const TextureModel& m);

/// {"region_id": depth, ...}
json to_json(const DepthLabeling& d);
/// [[occluded, occluder], ...] or [{"occluded": a, "occluder": b}, ...]
std::vector<OcclusionConstraint> constraints_from_json(const json& j);

/// {nodes: [...]}; split nodes {id, mode, feature, theta, ge, lt, score},
/// leaves {id, leaf: true, posterior, count}.
json to_json(const ForestTree& tree);

/// {A, B, C, x0} as nested row arrays.
LtiModel model_from_json(const json& j);
json to_json(const LtiModel& m);

json to_json(const BhattacharyyaEstimate& e);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

}  // namespace invar::ser
