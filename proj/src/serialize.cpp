#include "invar/serialize.hpp"

#include <map>
#include <sstream>

#include "invar/error.hpp"

namespace invar::ser {

namespace {

CriticalKind critical_kind_from_string(const std::string& s) {
  if (s == "max") return CriticalKind::Max;
  if (s == "min") return CriticalKind::Min;
  if (s == "saddle") return CriticalKind::Saddle;
  throw Error(ErrorCode::Io, "unknown critical point kind '" + s + "'");
}

BreakReason reason_from_string(const std::string& s) {
  for (BreakReason r : {BreakReason::None, BreakReason::TopologyChange, BreakReason::Occlusion, BreakReason::OutOfFrame})
    if (s == to_string(r)) return r;
  throw Error(ErrorCode::Io, "unknown break reason '" + s + "'");
}

}  // namespace

json to_json(const Frame& f) {
  return {{"x", f.t.x()},         {"y", f.t.y()},         {"sigma", f.sigma},          {"theta", f.theta},
          {"alpha", f.alpha},     {"beta", f.beta},       {"kind", to_string(f.kind)}, {"score", f.score}};
}

json to_json(const std::vector<Frame>& frames) {
  json a = json::array();
  for (const Frame& f : frames) a.push_back(to_json(f));
  return a;
}

json to_json(const ART& art) {
  json nodes = json::array();
  for (const ArtNode& n : art.nodes)
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"ordinal", n.ordinal},
                     {"virtual", n.is_virtual},
                     {"x", n.x},
                     {"y", n.y},
                     {"value", n.value}});
  json edges = json::array();
  for (auto [a, b] : art.edges) edges.push_back({a, b});
  return {{"nodes", nodes}, {"edges", edges}, {"root", art.root}, {"encoding", art.encoding}};
}

ART art_from_json(const json& j) {
  ART art;
  for (const json& n : j.at("nodes")) {
    ArtNode node;
    node.id = n.at("id").get<int>();
    node.kind = critical_kind_from_string(n.at("kind").get<std::string>());
    node.ordinal = n.at("ordinal").get<int>();
    node.is_virtual = n.value("virtual", false);
    node.x = n.value("x", -1);
    node.y = n.value("y", -1);
    node.value = n.value("value", 0.0);
    art.nodes.push_back(node);
  }
  for (const json& e : j.at("edges")) art.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  art.root = j.value("root", 0);
  art.encoding = j.at("encoding").get<std::string>();
  return art;
}

json to_json(const ArtDiff& d) {
  return {{"equal", d.equal},
          {"maxima", {d.maxima[0], d.maxima[1]}},
          {"minima", {d.minima[0], d.minima[1]}},
          {"saddles", {d.saddles[0], d.saddles[1]}},
          {"first_mismatch", d.first_mismatch}};
}

std::string tracks_to_jsonl(const std::vector<Track>& tracks) {
  std::string out;
  for (const Track& tr : tracks)
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
      const TrackSample& s = tr.samples[k];
      const bool last = k + 1 == tr.samples.size();
      json line = {{"track_id", tr.id},
                   {"t", s.t},
                   {"x", s.frame.t.x()},
                   {"y", s.frame.t.y()},
                   {"sigma", s.frame.sigma},
                   {"theta", s.frame.theta},
                   {"status", last ? to_string(tr.status) : "live"}};
      if (last && tr.status == TrackStatus::Broken) {
        line["reason"] = to_string(tr.reason);
        line["break_time"] = tr.break_time;
      }
      out += line.dump() + "\n";
    }
  return out;
}

std::vector<Track> tracks_from_jsonl(const std::string& text) {
  std::map<int, Track> by_id;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    Track& tr = by_id[j.at("track_id").get<int>()];
    tr.id = j.at("track_id").get<int>();
    TrackSample s;
    s.t = j.at("t").get<int>();
    s.frame.t = {j.at("x").get<double>(), j.at("y").get<double>()};
    s.frame.sigma = j.at("sigma").get<double>();
    s.frame.theta = j.at("theta").get<double>();
    if (!tr.samples.empty()) s.displacement = s.frame.t - tr.samples.back().frame.t;
    tr.samples.push_back(s);
    if (j.at("status").get<std::string>() == "broken") {
      tr.status = TrackStatus::Broken;
      tr.reason = reason_from_string(j.value("reason", std::string("none")));
      tr.break_time = j.value("break_time", -1);
    }
  }
  std::vector<Track> out;
  for (auto& [id, tr] : by_id) out.push_back(std::move(tr));
  return out;
}

json to_json(const TemplateDescriptor& d) {
  return {{"grid", d.grid}, {"mean", d.mean}, {"std", d.std}, {"count", d.count}};
}

json to_json(const TimeHOG& h) { return {{"grid", h.grid}, {"bins", h.bins}, {"hist", h.hist}}; }

json to_json(const TextureModel& m) {
  return {{"omega_halfwidth", m.halfwidth}, {"sigma", m.sigma}, {"entropy_bits", m.entropy_bits},
          {"Q", m.levels},                  {"beta", m.beta}};
}

json to_json(const DepthLabeling& d) {
  json j = json::object();
  for (std::size_t r = 0; r < d.depth.size(); ++r) j[std::to_string(r)] = d.depth[r];
  return j;
}

std::vector<OcclusionConstraint> constraints_from_json(const json& j) {
  require(j.is_array(), "constraints: expected a JSON list");
  std::vector<OcclusionConstraint> out;
  for (const json& c : j) {
    if (c.is_array()) {
      require(c.size() == 2, "constraints: pairs are [occluded, occluder]");
      out.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    } else {
      out.push_back({c.at("occluded").get<int>(), c.at("occluder").get<int>()});
    }
  }
  return out;
}

json to_json(const ForestTree& tree) {
  json nodes = json::array();
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    const ForestNode& n = tree.nodes[k];
    if (n.leaf)
      nodes.push_back({{"id", k}, {"leaf", true}, {"posterior", n.posterior}, {"count", n.count}, {"depth", n.depth}});
    else
      nodes.push_back({{"id", k},
                       {"mode", to_string(n.mode)},
                       {"feature", n.stump.feature},
                       {"theta", n.stump.theta},
                       {"ge", n.ge},
                       {"lt", n.lt},
                       {"score", n.score},
                       {"count", n.count},
                       {"depth", n.depth}});
  }
  return {{"nodes", nodes}};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  require(j.is_array(), "matrix: expected a list of rows");
  if (j.empty()) return {};
  const std::size_t cols = j.at(0).size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    require(j[r].is_array() && j[r].size() == cols, "matrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

LtiModel model_from_json(const json& j) {
  LtiModel m;
  m.A = matrix_from_json(j.at("A"));
  m.B = matrix_from_json(j.at("B"));
  m.C = matrix_from_json(j.at("C"));
  if (j.contains("x0")) {
    const auto x0 = j["x0"].get<std::vector<double>>();
    m.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  }
  return m;
}

json to_json(const LtiModel& m) {
  json j = {{"A", matrix_to_json(m.A)}, {"B", matrix_to_json(m.B)}, {"C", matrix_to_json(m.C)}};
  if (m.x0.size() > 0) j["x0"] = std::vector<double>(m.x0.data(), m.x0.data() + m.x0.size());
  return j;
}

json to_json(const BhattacharyyaEstimate& e) {
  return {{"R", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"dims", e.dims}};
}

}  // namespace invar::ser
