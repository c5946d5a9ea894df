#include "invar/art.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace invar {

namespace {

constexpr int kRing[8][2] = {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};

// rank[p] = position of pixel p in the descending sweep (0 = highest).
std::vector<int> sweep_order(const Raster& f, std::vector<int>& rank) {
  const int n = static_cast<int>(f.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double* v = f.data();
  std::sort(order.begin(), order.end(), [v](int a, int b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
  rank.assign(n, 0);
  for (int r = 0; r < n; ++r) rank[order[r]] = r;
  return order;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

char kind_char(const ArtNode& n) {
  if (n.is_virtual) return 'v';
  switch (n.kind) {
    case CriticalKind::Max: return 'M';
    case CriticalKind::Min: return 'm';
    case CriticalKind::Saddle: return 's';
  }
  return '?';
}

std::string encode(const ART& art) {
  const int n = static_cast<int>(art.nodes.size());
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : art.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  auto less = [&](int a, int b) {
    const auto& na = art.nodes[a];
    const auto& nb = art.nodes[b];
    return std::pair(kind_char(na), na.ordinal) < std::pair(kind_char(nb), nb.ordinal);
  };
  std::string out;
  std::vector<char> seen(n, 0);
  // Explicit stack: (node, next child position); children sorted on entry.
  std::vector<std::pair<int, std::size_t>> stack;
  std::vector<std::vector<int>> kids(n);
  auto enter = [&](int v) {
    seen[v] = 1;
    out += kind_char(art.nodes[v]);
    out += std::to_string(art.nodes[v].ordinal);
    for (int u : adj[v])
      if (!seen[u]) kids[v].push_back(u);
    std::sort(kids[v].begin(), kids[v].end(), less);
    if (!kids[v].empty()) out += '(';
    stack.emplace_back(v, 0);
  };
  enter(art.root);
  while (!stack.empty()) {
    auto& [v, i] = stack.back();
    if (i < kids[v].size()) {
      if (i > 0) out += ',';
      const int c = kids[v][i++];
      enter(c);
    } else {
      if (!kids[v].empty()) out += ')';
      stack.pop_back();
    }
  }
  return out;
}

}  // namespace

const char* to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::Max: return "max";
    case CriticalKind::Min: return "min";
    case CriticalKind::Saddle: return "saddle";
  }
  return "unknown";
}

std::vector<CriticalPoint> critical_points(const Raster& f) {
  require_finite(f, "critical_points field");
  const int h = static_cast<int>(f.rows()), w = static_cast<int>(f.cols());
  std::vector<int> rank;
  sweep_order(f, rank);
  auto rk = [&](int x, int y) { return rank[y * w + x]; };

  std::vector<CriticalPoint> out;
  std::vector<int> signs;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int rp = rk(x, y);
      signs.clear();
      for (const auto& d : kRing) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
          signs.push_back(-1);
          continue;
        }
        if (d[0] != 0 && d[1] != 0) {
          // A diagonal belongs to the link only if the cell's highest pixel
          // lies on it.
          const int top = std::min({rp, rk(nx, ny), rk(nx, y), rk(x, ny)});
          if (top != rp && top != rk(nx, ny)) continue;
        }
        signs.push_back(rk(nx, ny) < rp ? 1 : -1);
      }
      const auto plus = std::count(signs.begin(), signs.end(), 1);
      int alternations = 0;
      for (std::size_t i = 0; i < signs.size(); ++i) alternations += signs[i] != signs[(i + 1) % signs.size()];
      CriticalPoint cp{x, y, CriticalKind::Max, f(y, x), 1};
      if (plus == 0) {
        cp.kind = CriticalKind::Max;
      } else if (plus == static_cast<long>(signs.size())) {
        cp.kind = CriticalKind::Min;
      } else if (alternations >= 4) {
        cp.kind = CriticalKind::Saddle;
        cp.multiplicity = alternations / 2 - 1;
      } else {
        continue;
      }
      out.push_back(cp);
    }
  }
  return out;
}

std::vector<CriticalPoint> classify_critical(const Raster& img, double sigma) {
  return critical_points(gaussian_blur(img, sigma));
}

int ART::count(CriticalKind kind) const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [kind](const ArtNode& n) { return n.kind == kind; }));
}

std::vector<int> ART::degrees() const {
  std::vector<int> deg(nodes.size(), 0);
  for (auto [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

ART build_art_field(const Raster& f) {
  require_finite(f, "build_art field");
  const int h = static_cast<int>(f.rows()), w = static_cast<int>(f.cols());
  const int n = h * w;
  const int virt = n;  // the boundary vertex, below every pixel
  std::vector<int> rank;
  const std::vector<int> order = sweep_order(f, rank);
  rank.push_back(n);
  auto on_border = [&](int p) {
    const int x = p % w, y = p / w;
    return x == 0 || y == 0 || x == w - 1 || y == h - 1;
  };

  // Join tree: superlevel components, 8-connected, swept downwards.
  std::vector<int> jt_down(n + 1, -1);
  std::vector<std::vector<int>> jt_up(n + 1);
  {
    UnionFind uf(n);
    std::vector<int> lowest(n);
    std::vector<int> roots;
    for (int r = 0; r < n; ++r) {
      const int p = order[r], x = p % w, y = p / w;
      roots.clear();
      for (const auto& d : kRing) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (rank[q] > r) continue;
        const int c = uf.find(q);
        if (std::find(roots.begin(), roots.end(), c) == roots.end()) roots.push_back(c);
      }
      for (int c : roots) {
        jt_down[lowest[c]] = p;
        jt_up[p].push_back(lowest[c]);
        uf.parent[c] = p;
      }
      uf.parent[p] = p;
      lowest[p] = p;
    }
    const int last = order[n - 1];
    jt_down[last] = virt;
    jt_up[virt].push_back(last);
  }

  // Split tree: sublevel components, 4-connected, swept upwards from the
  // boundary vertex.
  std::vector<int> st_up(n + 1, -1);
  std::vector<std::vector<int>> st_down(n + 1);
  {
    UnionFind uf(n + 1);
    std::vector<int> highest(n + 1);
    highest[virt] = virt;
    std::vector<int> roots;
    constexpr int k4[4][2] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
    for (int r = n - 1; r >= 0; --r) {
      const int p = order[r], x = p % w, y = p / w;
      roots.clear();
      auto consider = [&](int q) {
        const int c = uf.find(q);
        if (std::find(roots.begin(), roots.end(), c) == roots.end()) roots.push_back(c);
      };
      if (on_border(p)) consider(virt);
      for (const auto& d : k4) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (rank[q] < r) continue;
        consider(q);
      }
      for (int c : roots) {
        st_up[highest[c]] = p;
        st_down[p].push_back(highest[c]);
        uf.parent[c] = p;
      }
      uf.parent[p] = p;
      highest[p] = p;
    }
  }

  // Merge the two trees by repeatedly peeling leaves.
  std::vector<std::vector<int>> ct_up(n + 1), ct_down(n + 1);
  {
    std::vector<char> alive(n + 1, 1);
    int remaining = n + 1;
    auto is_leaf = [&](int x) { return alive[x] && jt_up[x].size() + st_down[x].size() == 1; };
    std::deque<int> queue;
    for (int x = 0; x <= n; ++x)
      if (is_leaf(x)) queue.push_back(x);
    auto erase_one = [](std::vector<int>& v, int x) { v.erase(std::find(v.begin(), v.end(), x)); };
    while (remaining > 1 && !queue.empty()) {
      const int x = queue.front();
      queue.pop_front();
      if (!is_leaf(x)) continue;
      if (jt_up[x].empty()) {
        const int y = jt_down[x];
        ct_up[y].push_back(x);
        ct_down[x].push_back(y);
      } else {
        const int y = st_up[x];
        ct_up[x].push_back(y);
        ct_down[y].push_back(x);
      }
      // Splice x out of both trees.
      const int pd = jt_down[x];
      for (int c : jt_up[x]) jt_down[c] = pd;
      if (pd >= 0) {
        erase_one(jt_up[pd], x);
        jt_up[pd].insert(jt_up[pd].end(), jt_up[x].begin(), jt_up[x].end());
      }
      const int pu = st_up[x];
      for (int c : st_down[x]) st_up[c] = pu;
      if (pu >= 0) {
        erase_one(st_down[pu], x);
        st_down[pu].insert(st_down[pu].end(), st_down[x].begin(), st_down[x].end());
      }
      alive[x] = 0;
      --remaining;
      for (int y : {pd, pu})
        if (y >= 0 && is_leaf(y)) queue.push_back(y);
    }
    if (remaining != 1) throw std::logic_error("contour tree merge did not converge");
  }

  // Reduce to critical vertices.
  auto critical = [&](int x) { return !(ct_up[x].size() == 1 && ct_down[x].size() == 1); };
  std::vector<std::pair<int, int>> arcs;  // (upper vertex, lower vertex)
  for (int x = 0; x <= n; ++x) {
    if (!critical(x)) continue;
    for (int y : ct_down[x]) {
      while (!critical(y)) y = ct_down[y][0];
      arcs.emplace_back(x, y);
    }
  }
  std::vector<std::vector<int>> up(n + 1), down(n + 1);
  for (auto [a, b] : arcs) {
    down[a].push_back(b);
    up[b].push_back(a);
  }
  auto by_height = [&](int a, int b) { return rank[a] < rank[b]; };

  // Nodes per critical vertex; saddles of higher multiplicity become a chain
  // of simple saddles, joins above splits.
  struct Proto {
    int vertex;
    int sub;
    CriticalKind kind;
  };
  std::vector<Proto> protos;
  std::vector<std::pair<int, int>> proto_edges;  // (upper proto, lower proto)
  std::vector<std::vector<std::pair<int, int>>> attach_up(n + 1), attach_down(n + 1);  // (neighbour vertex, proto)
  for (int x = 0; x <= n; ++x) {
    if (!critical(x)) continue;
    std::vector<int> a = up[x], d = down[x];
    std::sort(a.begin(), a.end(), by_height);
    std::sort(d.begin(), d.end(), by_height);
    const int u = static_cast<int>(a.size()), dn = static_cast<int>(d.size());
    int sub = 0;
    auto make = [&](CriticalKind k) {
      protos.push_back({x, sub++, k});
      return static_cast<int>(protos.size()) - 1;
    };
    if (u == 0 || dn == 0 || u + dn < 3) {
      const int id = make(u == 0 ? CriticalKind::Max : dn == 0 ? CriticalKind::Min : CriticalKind::Saddle);
      for (int y : a) attach_up[x].emplace_back(y, id);
      for (int y : d) attach_down[x].emplace_back(y, id);
      continue;
    }
    int cur = -1;
    for (int j = 0; j + 1 < u; ++j) {
      const int s = make(CriticalKind::Saddle);
      if (j == 0) {
        attach_up[x].emplace_back(a[0], s);
      } else {
        proto_edges.emplace_back(cur, s);
      }
      attach_up[x].emplace_back(a[j + 1], s);
      cur = s;
    }
    for (int k = 0; k + 1 < dn; ++k) {
      const int s = make(CriticalKind::Saddle);
      if (cur < 0)
        attach_up[x].emplace_back(a[0], s);
      else
        proto_edges.emplace_back(cur, s);
      attach_down[x].emplace_back(d[k], s);
      cur = s;
    }
    attach_down[x].emplace_back(d[dn - 1], cur);
  }
  auto lookup = [](const std::vector<std::pair<int, int>>& v, int y) {
    for (auto [nb, id] : v)
      if (nb == y) return id;
    throw std::logic_error("contour tree attachment missing");
  };
  for (auto [a, b] : arcs) proto_edges.emplace_back(lookup(attach_down[a], b), lookup(attach_up[b], a));

  // Ordinals: rank of (sweep position, chain position), 0 = lowest.
  std::vector<int> top_down(protos.size());
  std::iota(top_down.begin(), top_down.end(), 0);
  std::sort(top_down.begin(), top_down.end(), [&](int i, int j) {
    return std::pair(rank[protos[i].vertex], protos[i].sub) < std::pair(rank[protos[j].vertex], protos[j].sub);
  });
  const int m = static_cast<int>(protos.size());
  std::vector<int> id_of(m);
  for (int pos = 0; pos < m; ++pos) id_of[top_down[pos]] = m - 1 - pos;

  ART art;
  art.nodes.resize(m);
  for (int i = 0; i < m; ++i) {
    ArtNode& node = art.nodes[id_of[i]];
    node.id = node.ordinal = id_of[i];
    node.kind = protos[i].kind;
    const int v = protos[i].vertex;
    if (v == virt) {
      node.is_virtual = true;
    } else {
      node.x = v % w;
      node.y = v / w;
      node.value = f(node.y, node.x);
    }
  }
  for (auto [a, b] : proto_edges) art.edges.emplace_back(id_of[a], id_of[b]);
  std::sort(art.edges.begin(), art.edges.end());
  art.root = 0;
  art.encoding = encode(art);
  if (const std::string why = art_invariant_violation(art); !why.empty())
    throw std::logic_error("attributed Reeb tree invariant violated: " + why);
  return art;
}

ART build_art(const Raster& img, double sigma) { return build_art_field(gaussian_blur(img, sigma)); }

bool art_equal(const ART& a, const ART& b) { return a.encoding == b.encoding; }

std::string art_invariant_violation(const ART& art) {
  const int n = static_cast<int>(art.nodes.size());
  if (n == 0) return "empty tree";
  if (static_cast<int>(art.edges.size()) != n - 1) return "edge count is not node count - 1";
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : art.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) return "edge endpoint out of range";
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{art.root};
  seen[art.root] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
  }
  if (reached != n) return "tree is disconnected";
  for (int i = 0; i < n; ++i) {
    const int deg = static_cast<int>(adj[i].size());
    const bool extremum = art.nodes[i].kind != CriticalKind::Saddle;
    if (extremum && deg != 1) return "extremum " + std::to_string(i) + " has degree " + std::to_string(deg);
    if (!extremum && deg != 3) return "saddle " + std::to_string(i) + " has degree " + std::to_string(deg);
  }
  if (art.count(CriticalKind::Max) - art.count(CriticalKind::Saddle) + art.count(CriticalKind::Min) != 2)
    return "Euler relation fails";
  return {};
}

ArtDiff art_diff(const ART& a, const ART& b) {
  ArtDiff d;
  d.equal = art_equal(a, b);
  const ART* t[2] = {&a, &b};
  for (int i = 0; i < 2; ++i) {
    d.maxima[i] = t[i]->count(CriticalKind::Max);
    d.minima[i] = t[i]->count(CriticalKind::Min);
    d.saddles[i] = t[i]->count(CriticalKind::Saddle);
  }
  if (!d.equal) {
    const auto& ea = a.encoding;
    const auto& eb = b.encoding;
    const auto mm = std::mismatch(ea.begin(), ea.end(), eb.begin(), eb.end());
    d.first_mismatch = static_cast<long>(mm.first - ea.begin());
  }
  return d;
}

}  // namespace invar
