// graph.hpp — coupling graphs, BFS spanning trees, and nonresonance checks.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <qsteer/core.hpp>

namespace qsteer {

// Undirected graph on levels 1..vertex_count with an edge wherever the
// coupling modulus exceeds the zero tolerance.  Diagonal entries never form
// edges.
struct CouplingGraph {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;       // i < j, 1-based
  std::vector<double> weights;                  // |B_ij| per edge
  std::vector<std::vector<int>> adjacency;      // adjacency[v], sorted; index 0 unused
};

struct disconnected_error : std::runtime_error {
  std::vector<int> unreachable;

  disconnected_error(const std::string& msg, std::vector<int> levels)
      : std::runtime_error(msg), unreachable(std::move(levels)) {}
};

inline CouplingGraph build_graph(const CouplingMatrix& coupling,
                                 double zero_tolerance = kZeroCouplingTolerance) {
  CouplingGraph g;
  g.vertex_count = coupling.truncation_size;
  g.adjacency.assign(static_cast<size_t>(g.vertex_count) + 1, {});
  for (int i = 1; i <= g.vertex_count; ++i)
    for (int j = i + 1; j <= g.vertex_count; ++j) {
      const double w = std::abs(coupling.at(i, j));
      if (w > zero_tolerance) {
        g.edges.emplace_back(i, j);
        g.weights.push_back(w);
        g.adjacency[static_cast<size_t>(i)].push_back(j);
        g.adjacency[static_cast<size_t>(j)].push_back(i);
      }
    }
  return g;
}

// Breadth-first reachability from vertex 1.
inline bool is_connected(const CouplingGraph& g) {
  if (g.vertex_count <= 1) return true;
  std::vector<char> seen(static_cast<size_t>(g.vertex_count) + 1, 0);
  std::deque<int> queue{1};
  seen[1] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : g.adjacency[static_cast<size_t>(v)])
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++reached;
        queue.push_back(w);
      }
  }
  return reached == g.vertex_count;
}

// BFS tree: parent[root] = 0, depth[root] = 0.  Neighbors are visited in
// ascending index order, so ties resolve toward smaller indices.
struct SpanningTree {
  int root = 1;
  std::vector<int> parent;  // index 0 unused
  std::vector<int> depth;   // index 0 unused
};

inline SpanningTree spanning_tree(const CouplingGraph& g, int root = 1) {
  if (root < 1 || root > g.vertex_count)
    throw std::invalid_argument("spanning tree root out of range");
  SpanningTree tree;
  tree.root = root;
  tree.parent.assign(static_cast<size_t>(g.vertex_count) + 1, -1);
  tree.depth.assign(static_cast<size_t>(g.vertex_count) + 1, -1);
  tree.parent[static_cast<size_t>(root)] = 0;
  tree.depth[static_cast<size_t>(root)] = 0;
  std::deque<int> queue{root};
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : g.adjacency[static_cast<size_t>(v)])
      if (tree.parent[static_cast<size_t>(w)] == -1) {
        tree.parent[static_cast<size_t>(w)] = v;
        tree.depth[static_cast<size_t>(w)] = tree.depth[static_cast<size_t>(v)] + 1;
        queue.push_back(w);
      }
  }
  std::vector<int> unreachable;
  for (int v = 1; v <= g.vertex_count; ++v)
    if (tree.parent[static_cast<size_t>(v)] == -1) unreachable.push_back(v);
  if (!unreachable.empty()) {
    std::ostringstream msg;
    msg << "coupling graph is disconnected: levels {";
    for (size_t i = 0; i < unreachable.size(); ++i)
      msg << (i ? ", " : "") << unreachable[i];
    msg << "} are unreachable from level " << root;
    throw disconnected_error(msg.str(), unreachable);
  }
  return tree;
}

inline std::vector<std::pair<int, int>> tree_edges(const SpanningTree& tree) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < static_cast<int>(tree.parent.size()); ++v) {
    const int p = tree.parent[static_cast<size_t>(v)];
    if (p > 0) edges.emplace_back(std::min(v, p), std::max(v, p));
  }
  return edges;
}

// One first-kind violation: a chain pair whose gap collides with the gap of
// some other coupled pair.
struct GapCollision {
  std::array<int, 2> chain_pair{};
  std::array<int, 2> coupled_pair{};
  double gap_chain = 0.0;
  double gap_coupled = 0.0;
};

// One second-kind violation: a coupled pair of (near-)degenerate levels.
struct DegeneratePair {
  int i = 0;
  int j = 0;
  double gap = 0.0;
};

struct NonresonanceReport {
  std::vector<GapCollision> violations_a1;
  std::vector<DegeneratePair> violations_a2;

  bool ok() const { return violations_a1.empty() && violations_a2.empty(); }
};

// Checks the chain against both kinds of resonance, brute force over all
// coupled pairs (diagonal pairs included; their gap is 0).  Two gaps collide
// when |g1 - g2| <= gap_tolerance * max(1, g1, g2); the tolerance is read in
// units of the gaps compared.  Mirror-image collisions are reported once.
inline NonresonanceReport check_nonresonance(const Spectrum& spectrum,
                                             const CouplingMatrix& coupling,
                                             const std::vector<std::pair<int, int>>& chain,
                                             double gap_tolerance = kGapTolerance,
                                             double zero_tolerance = kZeroCouplingTolerance) {
  if (spectrum.size() != coupling.truncation_size)
    throw std::invalid_argument("spectrum and coupling truncation sizes differ");
  const int n = spectrum.size();
  const auto gap_of = [&](int i, int j) { return std::abs(spectrum.level(i) - spectrum.level(j)); };
  const auto canon = [](int i, int j) {
    return std::array<int, 2>{std::min(i, j), std::max(i, j)};
  };

  NonresonanceReport report;
  std::set<std::pair<std::array<int, 2>, std::array<int, 2>>> seen;
  for (const auto& [ci, cj] : chain) {
    if (ci < 1 || cj < 1 || ci > n || cj > n || ci == cj)
      throw std::invalid_argument("chain pair out of range");
    const auto s = canon(ci, cj);
    const double gs = gap_of(s[0], s[1]);
    for (int ti = 1; ti <= n; ++ti)
      for (int tj = ti; tj <= n; ++tj) {
        if (std::abs(coupling.at(ti, tj)) <= zero_tolerance) continue;
        const auto t = canon(ti, tj);
        if (t == s) continue;
        const double gt = gap_of(t[0], t[1]);
        if (std::abs(gs - gt) <= gap_tolerance * std::max({1.0, gs, gt})) {
          const auto key = (s < t) ? std::make_pair(s, t) : std::make_pair(t, s);
          if (seen.insert(key).second)
            report.violations_a1.push_back({s, t, gs, gt});
        }
      }
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      if (std::abs(coupling.at(i, j)) <= zero_tolerance) continue;
      const double g = gap_of(i, j);
      if (g <= gap_tolerance * std::max(1.0, g))
        report.violations_a2.push_back({i, j, g});
    }
  return report;
}

}  // namespace qsteer
