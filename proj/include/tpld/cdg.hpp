#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tpld/code_model.hpp"

namespace tpld {

enum class EdgeKind : std::uint8_t { kExtends, kImplements };

std::string_view to_string(EdgeKind kind);

using NodeId = std::uint32_t;

// Directed from the dependent class to its dependency.
struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeKind kind = EdgeKind::kExtends;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Class dependency graph. Node ids follow the class order of the source
// model, so NodeId doubles as a class index.
class ClassDependencyGraph {
 public:
  ClassDependencyGraph() = default;
  // Duplicate (src, dst, kind) triples are collapsed; endpoints must be valid
  // node ids.
  ClassDependencyGraph(std::vector<std::string> names,
                       std::vector<Feature> features, std::vector<Edge> edges);

  std::size_t size() const { return names_.size(); }
  const std::string& name(NodeId node) const { return names_[node]; }
  Feature feature(NodeId node) const { return features_[node]; }
  std::optional<NodeId> find(std::string_view class_name) const;

  std::span<const Edge> edges() const { return edges_; }
  // Edges leaving / entering a node, sorted by (dst|src, kind).
  std::span<const Edge> out_edges(NodeId node) const;
  std::span<const Edge> in_edges(NodeId node) const;
  bool has_edge(NodeId src, NodeId dst, EdgeKind kind) const;

 private:
  std::vector<std::string> names_;
  std::vector<Feature> features_;
  std::vector<Edge> edges_;  // sorted by (src, dst, kind)
  std::vector<Edge> in_sorted_;
  std::vector<std::uint32_t> out_offsets_;
  std::vector<std::uint32_t> in_offsets_;
  std::unordered_map<std::string, NodeId> by_name_;
};

// Edges to classes outside the model are dropped.
ClassDependencyGraph build_cdg(const CodeModel& model);

// Total priority order for classes carrying several modifiers:
// interface > static > abstract > default.
Feature feature_from_modifiers(bool is_interface, bool is_static,
                               bool is_abstract);

// Longest finite shortest path over the undirected view; 0 when edgeless.
std::uint32_t diameter(const ClassDependencyGraph& graph);

// Nodes with out-degree 0.
std::vector<NodeId> terminal_nodes(const ClassDependencyGraph& graph);

std::string to_dot(const ClassDependencyGraph& graph);

}  // namespace tpld
