#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace invar {

/// Row i is sample i: features x.row(i) and class c[i] in {0, 1}.
struct ForestData {
  Eigen::MatrixXd x;
  std::vector<int> c;
};

/// S = { i : x(i, feature) >= theta }, its complement the rest.
struct Stump {
  int feature = 0;
  double theta = 0.0;
};

struct KlParams {
  int measure = 0;         // feature column whose class-conditional histograms are compared
  int bins = 16;           // over the column's range in the whole data set
  bool symmetric = false;  // KL(p1 || p0) + KL(p0 || p1) instead of KL(p1 || p0)
};

/// |S|/|D| KL(p1 || p0 on S) + |S^c|/|D| KL(p1 || p0 on S^c) in nats, with
/// add-one smoothed histograms.  `idx` selects the node's samples D.
double kl_score(const ForestData& data, const std::vector<int>& idx, const Stump& stump, const KlParams& params = {});

/// |S|/|D| H(c | S) + |S^c|/|D| H(c | S^c) in bits.
double entropy_score(const ForestData& data, const std::vector<int>& idx, const Stump& stump);

/// Plug-in label entropy in bits.
double label_entropy(const ForestData& data, const std::vector<int>& idx);

/// Distinct decile order statistics of the feature over idx that leave both
/// sides of the stump non-empty.
std::vector<double> candidate_thresholds(const ForestData& data, const std::vector<int>& idx, int feature);

enum class SplitMode { KL, Entropy };
const char* to_string(SplitMode m);

struct ForestNode {
  bool leaf = true;
  SplitMode mode = SplitMode::Entropy;
  Stump stump;
  double score = 0.0;      // KL or entropy of the chosen stump
  double best_kl = 0.0;    // best KL at this node, compared against tau (grow only)
  int ge = -1;             // child holding f >= theta
  int lt = -1;             // child holding f < theta
  double posterior = 0.0;  // P(c = 1) among the node's samples
  int count = 0;
  int depth = 0;
};

/// Nodes in depth-first order, root first.
struct ForestTree {
  std::vector<ForestNode> nodes;
};

/// Node-by-node equality of everything but the diagnostic best_kl.
bool same_tree(const ForestTree& a, const ForestTree& b);

struct GrowParams {
  double tau = 0.0;
  int max_depth = 8;
  int min_samples = 2;
  KlParams kl;
};

/// Information-forest tree.  A node in KL mode takes its best KL stump; when
/// that KL reaches tau the node and its whole subtree switch to entropy
/// splits.  Entropy nodes become leaves when no stump lowers the label
/// entropy.  Depth is capped at max_depth.
ForestTree grow(const ForestData& data, const GrowParams& params = {});

/// Plain minimum-entropy tree with the same stumps and stopping rules.
ForestTree grow_entropy_only(const ForestData& data, int max_depth = 8, int min_samples = 2);

double posterior(const ForestTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& sample);

/// Fraction of samples whose thresholded posterior (>= 0.5) matches the label.
double accuracy(const ForestTree& tree, const ForestData& data);

}  // namespace invar
