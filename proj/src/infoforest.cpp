#include "invar/infoforest.hpp"

#include <algorithm>
#include <cmath>

#include "invar/error.hpp"

namespace invar {

namespace {

void check_data(const ForestData& d) {
  require(d.x.rows() > 0 && static_cast<std::size_t>(d.x.rows()) == d.c.size(), "forest: features and labels differ");
  require(d.x.allFinite(), "forest: non-finite feature");
  for (int c : d.c) require(c == 0 || c == 1, "forest: labels must be 0 or 1");
}

double bits(double k, double n) { return k > 0.0 ? -k / n * std::log2(k / n) : 0.0; }

double h2(long ones, long n) {
  return n == 0 ? 0.0 : bits(static_cast<double>(ones), n) + bits(static_cast<double>(n - ones), n);
}

// KL(p || q) in nats between add-one smoothed histograms.
double kl_hist(const std::vector<long>& p, const std::vector<long>& q) {
  const std::size_t b = p.size();
  long np = 0, nq = 0;
  for (std::size_t k = 0; k < b; ++k) {
    np += p[k];
    nq += q[k];
  }
  double s = 0.0;
  for (std::size_t k = 0; k < b; ++k) {
    const double pp = (p[k] + 1.0) / (np + static_cast<double>(b));
    const double qq = (q[k] + 1.0) / (nq + static_cast<double>(b));
    s += pp * std::log(pp / qq);
  }
  return std::max(s, 0.0);
}

struct Split {
  std::vector<int> ge, lt;
};

Split split(const ForestData& d, const std::vector<int>& idx, const Stump& s) {
  Split out;
  for (int i : idx) (d.x(i, s.feature) >= s.theta ? out.ge : out.lt).push_back(i);
  return out;
}

void check_stump(const ForestData& d, const std::vector<int>& idx, const Stump& s) {
  require(s.feature >= 0 && s.feature < d.x.cols(), "forest: stump feature out of range");
  require(!idx.empty(), "forest: empty node");
}

int leaf_count_ones(const ForestData& d, const std::vector<int>& idx) {
  int ones = 0;
  for (int i : idx) ones += d.c[i];
  return ones;
}

struct Best {
  bool found = false;
  Stump stump;
  double score = 0.0;
};

// Scans features in order and thresholds in increasing order; strict
// improvement keeps the first best.
Best best_entropy(const ForestData& d, const std::vector<int>& idx) {
  Best b;
  for (int f = 0; f < d.x.cols(); ++f)
    for (double t : candidate_thresholds(d, idx, f)) {
      const double s = entropy_score(d, idx, {f, t});
      if (!b.found || s < b.score) b = {true, {f, t}, s};
    }
  return b;
}

Best best_kl(const ForestData& d, const std::vector<int>& idx, const KlParams& p) {
  Best b;
  for (int f = 0; f < d.x.cols(); ++f)
    for (double t : candidate_thresholds(d, idx, f)) {
      const double s = kl_score(d, idx, {f, t}, p);
      if (!b.found || s > b.score) b = {true, {f, t}, s};
    }
  return b;
}

class Grower {
 public:
  Grower(const ForestData& d, int max_depth, int min_samples, const KlParams& kl, double tau, bool kl_enabled)
      : d_(d), max_depth_(max_depth), min_samples_(min_samples), kl_(kl), tau_(tau), kl_enabled_(kl_enabled) {}

  ForestTree run() {
    std::vector<int> all(d_.c.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    node(all, 0, kl_enabled_ ? SplitMode::KL : SplitMode::Entropy);
    return std::move(tree_);
  }

 private:
  int node(const std::vector<int>& idx, int depth, SplitMode mode) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    ForestNode n;
    n.count = static_cast<int>(idx.size());
    n.depth = depth;
    const int ones = leaf_count_ones(d_, idx);
    n.posterior = static_cast<double>(ones) / n.count;
    n.mode = mode;
    const bool pure = ones == 0 || ones == n.count;
    if (depth >= max_depth_ || n.count < min_samples_ || pure) {
      tree_.nodes[id] = n;
      return id;
    }
    Best chosen;
    if (mode == SplitMode::KL) {
      const Best k = best_kl(d_, idx, kl_);
      n.best_kl = k.score;
      if (k.found && k.score < tau_) {
        chosen = k;
      } else {
        mode = SplitMode::Entropy;
        n.mode = mode;
      }
    }
    if (mode == SplitMode::Entropy) {
      const Best e = best_entropy(d_, idx);
      if (e.found && e.score < label_entropy(d_, idx)) chosen = e;
    }
    if (!chosen.found) {
      tree_.nodes[id] = n;
      return id;
    }
    n.leaf = false;
    n.stump = chosen.stump;
    n.score = chosen.score;
    const Split s = split(d_, idx, chosen.stump);
    n.ge = node(s.ge, depth + 1, mode);
    n.lt = node(s.lt, depth + 1, mode);
    tree_.nodes[id] = n;
    return id;
  }

  const ForestData& d_;
  int max_depth_, min_samples_;
  KlParams kl_;
  double tau_;
  bool kl_enabled_;
  ForestTree tree_;
};

}  // namespace

double label_entropy(const ForestData& data, const std::vector<int>& idx) {
  return h2(leaf_count_ones(data, idx), static_cast<long>(idx.size()));
}

std::vector<double> candidate_thresholds(const ForestData& data, const std::vector<int>& idx, int feature) {
  require(feature >= 0 && feature < data.x.cols(), "forest: feature out of range");
  std::vector<double> v;
  v.reserve(idx.size());
  for (int i : idx) v.push_back(data.x(i, feature));
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  const std::size_t n = v.size();
  for (std::size_t k = 1; k <= 9; ++k) {
    const double t = v[k * n / 10];
    // f >= t must leave something below.
    if (t > v.front() && (out.empty() || t != out.back())) out.push_back(t);
  }
  return out;
}

double kl_score(const ForestData& data, const std::vector<int>& idx, const Stump& stump, const KlParams& p) {
  check_stump(data, idx, stump);
  require(p.measure >= 0 && p.measure < data.x.cols() && p.bins >= 1, "kl_score: bad measurement or bin count");
  const double lo = data.x.col(p.measure).minCoeff(), hi = data.x.col(p.measure).maxCoeff();
  auto bin = [&](double v) {
    if (hi <= lo) return 0;
    return std::min(p.bins - 1, static_cast<int>(std::floor((v - lo) / (hi - lo) * p.bins)));
  };
  // [side][class][bin]
  std::vector<long> h[2][2];
  for (auto& s : h)
    for (auto& c : s) c.assign(p.bins, 0);
  long size[2] = {0, 0};
  for (int i : idx) {
    const int side = data.x(i, stump.feature) >= stump.theta ? 0 : 1;
    ++h[side][data.c[i]][bin(data.x(i, p.measure))];
    ++size[side];
  }
  require(size[0] > 0 && size[1] > 0, "kl_score: stump leaves one side empty");
  const double n = static_cast<double>(idx.size());
  double s = 0.0;
  for (int side = 0; side < 2; ++side) {
    double kl = kl_hist(h[side][1], h[side][0]);
    if (p.symmetric) kl += kl_hist(h[side][0], h[side][1]);
    s += size[side] / n * kl;
  }
  return s;
}

double entropy_score(const ForestData& data, const std::vector<int>& idx, const Stump& stump) {
  check_stump(data, idx, stump);
  long n[2] = {0, 0}, ones[2] = {0, 0};
  for (int i : idx) {
    const int side = data.x(i, stump.feature) >= stump.theta ? 0 : 1;
    ++n[side];
    ones[side] += data.c[i];
  }
  require(n[0] > 0 && n[1] > 0, "entropy_score: stump leaves one side empty");
  const double total = static_cast<double>(n[0] + n[1]);
  return n[0] / total * h2(ones[0], n[0]) + n[1] / total * h2(ones[1], n[1]);
}

bool same_tree(const ForestTree& a, const ForestTree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    const ForestNode &p = a.nodes[k], &q = b.nodes[k];
    if (p.leaf != q.leaf || p.mode != q.mode || p.stump.feature != q.stump.feature || p.stump.theta != q.stump.theta ||
        p.score != q.score || p.ge != q.ge || p.lt != q.lt || p.posterior != q.posterior || p.count != q.count ||
        p.depth != q.depth)
      return false;
  }
  return true;
}

const char* to_string(SplitMode m) { return m == SplitMode::KL ? "kl" : "entropy"; }

ForestTree grow(const ForestData& data, const GrowParams& params) {
  check_data(data);
  require(params.max_depth >= 0 && params.min_samples >= 1, "grow: bad depth or sample limit");
  return Grower(data, params.max_depth, params.min_samples, params.kl, params.tau, true).run();
}

ForestTree grow_entropy_only(const ForestData& data, int max_depth, int min_samples) {
  check_data(data);
  require(max_depth >= 0 && min_samples >= 1, "grow: bad depth or sample limit");
  return Grower(data, max_depth, min_samples, {}, 0.0, false).run();
}

double posterior(const ForestTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  require(!tree.nodes.empty(), "posterior: empty tree");
  int k = 0;
  while (!tree.nodes[k].leaf) {
    const ForestNode& n = tree.nodes[k];
    require(n.stump.feature < sample.size(), "posterior: sample has too few features");
    k = sample(n.stump.feature) >= n.stump.theta ? n.ge : n.lt;
  }
  return tree.nodes[k].posterior;
}

double accuracy(const ForestTree& tree, const ForestData& data) {
  check_data(data);
  long right = 0;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i)
    right += (posterior(tree, data.x.row(i)) >= 0.5 ? 1 : 0) == data.c[i];
  return static_cast<double>(right) / data.x.rows();
}

}  // namespace invar
