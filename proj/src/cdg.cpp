#include "tpld/cdg.hpp"

#include <algorithm>
#include <deque>
#include <tuple>
#include <sstream>

namespace tpld {

std::string_view to_string(EdgeKind kind) {
  return kind == EdgeKind::kExtends ? "extends" : "implements";
}

ClassDependencyGraph::ClassDependencyGraph(std::vector<std::string> names,
                                           std::vector<Feature> features,
                                           std::vector<Edge> edges)
    : names_(std::move(names)),
      features_(std::move(features)),
      edges_(std::move(edges)) {
  if (features_.size() != names_.size()) {
    throw Error("cdg: feature count does not match node count");
  }
  for (const auto& e : edges_) {
    if (e.src >= names_.size() || e.dst >= names_.size()) {
      throw Error("cdg: edge endpoint out of range");
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  in_sorted_ = edges_;
  std::sort(in_sorted_.begin(), in_sorted_.end(),
            [](const Edge& a, const Edge& b) {
              return std::tie(a.dst, a.src, a.kind) <
                     std::tie(b.dst, b.src, b.kind);
            });

  const std::size_t n = names_.size();
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++out_offsets_[e.src + 1];
    ++in_offsets_[e.dst + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  by_name_.reserve(n);
  for (NodeId i = 0; i < n; ++i) {
    by_name_.emplace(names_[i], i);
  }
}

std::optional<NodeId> ClassDependencyGraph::find(
    std::string_view class_name) const {
  const auto it = by_name_.find(std::string(class_name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::span<const Edge> ClassDependencyGraph::out_edges(NodeId node) const {
  return std::span<const Edge>(edges_).subspan(
      out_offsets_[node], out_offsets_[node + 1] - out_offsets_[node]);
}

std::span<const Edge> ClassDependencyGraph::in_edges(NodeId node) const {
  return std::span<const Edge>(in_sorted_)
      .subspan(in_offsets_[node], in_offsets_[node + 1] - in_offsets_[node]);
}

bool ClassDependencyGraph::has_edge(NodeId src, NodeId dst,
                                    EdgeKind kind) const {
  const auto out = out_edges(src);
  return std::binary_search(out.begin(), out.end(), Edge{src, dst, kind});
}

ClassDependencyGraph build_cdg(const CodeModel& model) {
  const ClassIndex index(model);
  std::vector<std::string> names;
  std::vector<Feature> features;
  std::vector<Edge> edges;
  names.reserve(model.classes.size());
  features.reserve(model.classes.size());
  for (NodeId i = 0; i < model.classes.size(); ++i) {
    const auto& cls = model.classes[i];
    names.push_back(cls.name);
    features.push_back(cls.feature);
    if (cls.superclass) {
      if (const auto dst = index.find(*cls.superclass)) {
        edges.push_back({i, static_cast<NodeId>(*dst), EdgeKind::kExtends});
      }
    }
    for (const auto& iface : cls.interfaces) {
      if (const auto dst = index.find(iface)) {
        edges.push_back({i, static_cast<NodeId>(*dst), EdgeKind::kImplements});
      }
    }
  }
  return ClassDependencyGraph(std::move(names), std::move(features),
                              std::move(edges));
}

Feature feature_from_modifiers(bool is_interface, bool is_static,
                               bool is_abstract) {
  if (is_interface) return Feature::kInterface;
  if (is_static) return Feature::kStatic;
  if (is_abstract) return Feature::kAbstract;
  return Feature::kDefault;
}

std::uint32_t diameter(const ClassDependencyGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<std::vector<NodeId>> adjacency(n);
  for (const auto& e : graph.edges()) {
    if (e.src == e.dst) continue;
    adjacency[e.src].push_back(e.dst);
    adjacency[e.dst].push_back(e.src);
  }
  std::uint32_t best = 0;
  std::vector<std::int64_t> dist(n);
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (adjacency[s].empty()) continue;
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (const NodeId v : adjacency[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          best = std::max(best, static_cast<std::uint32_t>(dist[v]));
          queue.push_back(v);
        }
      }
    }
  }
  return best;
}

std::vector<NodeId> terminal_nodes(const ClassDependencyGraph& graph) {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < graph.size(); ++i) {
    if (graph.out_edges(i).empty()) {
      out.push_back(i);
    }
  }
  return out;
}

std::string to_dot(const ClassDependencyGraph& graph) {
  std::ostringstream out;
  out << "digraph cdg {\n";
  for (NodeId i = 0; i < graph.size(); ++i) {
    out << "  n" << i << " [label=\"" << graph.name(i) << "\\n"
        << to_string(graph.feature(i)) << "\"];\n";
  }
  for (const auto& e : graph.edges()) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\""
        << to_string(e.kind) << "\""
        << (e.kind == EdgeKind::kImplements ? ", style=dashed" : "") << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace tpld
