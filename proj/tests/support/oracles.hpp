#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <queue>
#include <vector>

#include "tpld/cdg.hpp"
#include "tpld/detector.hpp"
#include "tpld/hash.hpp"
#include "tpld/random.hpp"
#include "tpld/matcher.hpp"

// Brute-force reference implementations shared by unit and acceptance tests.
namespace tpld::test {

// All-pairs BFS over the undirected view.
inline std::uint32_t diameter_oracle(const ClassDependencyGraph& g) {
  const auto n = g.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (const auto& e : g.edges()) adj[e.src][e.dst] = adj[e.dst][e.src] = true;
  std::uint32_t best = 0;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    dist[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    for (const int d : dist) best = std::max(best, static_cast<std::uint32_t>(std::max(d, 0)));
  }
  return best;
}

// Best total weight over every assignment of rows to distinct columns.
inline double brute_force_assignment(const WeightMatrix& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (perm[i] < cols) total += w[i][perm[i]];
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Enumerates every simple lib path over matched nodes ending at a terminal.
// Paths need at least one edge unless no lib edge joins two matched nodes.
inline bool structure_oracle(const PairMatchSet& matches,
                             const ClassDependencyGraph& lib,
                             const ClassDependencyGraph& app) {
  const std::size_t n = lib.size();
  auto matched = [&](NodeId v) { return matches.pairs.contains(v); };
  auto image = [&](NodeId v) { return matches.pairs.at(v).app_class; };
  auto terminal = [&](NodeId v) { return lib.out_edges(v).empty(); };

  bool any_matched_edge = false;
  for (const auto& e : lib.edges()) {
    any_matched_edge = any_matched_edge || (matched(e.src) && matched(e.dst));
  }
  if (!any_matched_edge) {
    for (NodeId v = 0; v < n; ++v) {
      if (matched(v) && terminal(v)) return true;
    }
    return false;
  }

  std::vector<bool> on_path(n, false);
  std::function<bool(NodeId)> dfs = [&](NodeId v) -> bool {
    on_path[v] = true;
    bool found = false;
    for (const auto& e : lib.out_edges(v)) {
      if (found) break;
      if (on_path[e.dst] || !matched(e.dst)) continue;
      if (!app.has_edge(image(v), image(e.dst), e.kind)) continue;
      found = terminal(e.dst) || dfs(e.dst);
    }
    on_path[v] = false;
    return found;
  };
  for (NodeId v = 0; v < n; ++v) {
    if (matched(v) && dfs(v)) return true;
  }
  return false;
}

struct StructureInstance {
  ClassDependencyGraph lib;
  ClassDependencyGraph app;
  PairMatchSet matches;
};

// A lib graph of up to `max_nodes` nodes, an app graph built from its noisy
// image plus extra nodes, and a partial match between them.
inline StructureInstance random_structure_instance(Rng& rng,
                                                   std::uint32_t max_nodes) {
  const auto n = rng.range(1, max_nodes);
  const double p = 0.05 + rng.unit() * 0.35;
  std::vector<std::string> names;
  std::vector<Feature> features;
  std::vector<Edge> lib_edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    names.push_back("l" + std::to_string(i));
    features.push_back(Feature::kDefault);
  }
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId d = 0; d < n; ++d) {
      if (s != d && rng.chance(p)) {
        lib_edges.push_back({s, d, rng.chance(0.5) ? EdgeKind::kExtends
                                                   : EdgeKind::kImplements});
      }
    }
  }

  const auto m = n + rng.range(0, 3);
  std::vector<NodeId> slots(m);
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots);
  std::vector<std::string> app_names;
  std::vector<Feature> app_features(m, Feature::kDefault);
  for (std::uint32_t i = 0; i < m; ++i) app_names.push_back("a" + std::to_string(i));
  std::vector<Edge> app_edges;
  for (const auto& e : lib_edges) {
    if (rng.chance(0.15)) continue;
    auto kind = e.kind;
    if (rng.chance(0.1)) {
      kind = kind == EdgeKind::kExtends ? EdgeKind::kImplements : EdgeKind::kExtends;
    }
    app_edges.push_back({slots[e.src], slots[e.dst], kind});
  }
  for (std::uint32_t k = rng.range(0, 3); k > 0; --k) {
    const auto s = static_cast<NodeId>(rng.index(m));
    const auto d = static_cast<NodeId>(rng.index(m));
    if (s != d) app_edges.push_back({s, d, EdgeKind::kExtends});
  }

  StructureInstance out{
      ClassDependencyGraph(names, features, lib_edges),
      ClassDependencyGraph(app_names, app_features, app_edges), {}};
  for (NodeId v = 0; v < n; ++v) {
    if (!rng.chance(0.75)) continue;
    // Occasionally map to a wrong app node.
    const NodeId a = rng.chance(0.1) ? static_cast<NodeId>(rng.index(m)) : slots[v];
    out.matches.pairs.emplace(v, PairMatch{a, {1.0, MatchTier::kHighConfidence, 1.0}});
  }
  return out;
}

}  // namespace tpld::test
