#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tpld/cdg.hpp"
#include "tpld/hash.hpp"

namespace tpld {

using NodeSignature = Hash128;

// 128-bit SimHash over a token multiset: per bit, +1/-1 summed over token
// hashes, positive sum sets the bit. Order-insensitive. Throws
// std::invalid_argument on an empty multiset.
NodeSignature signature_hash(std::span<const std::string> tokens);

// 1 - hamming/128.
double signature_similarity(const NodeSignature& a, const NodeSignature& b);

// Iteration-synchronous refinement. Each round a node rehashes its own label
// together with the labels of its dependencies (out-edge targets), so
// information flows against edge direction.
std::vector<NodeSignature> gen_node_features(const ClassDependencyGraph& graph,
                                             std::uint32_t iterations);

// max(1, diameter(lib)).
std::uint32_t refinement_iterations(const ClassDependencyGraph& lib);

// Memoizes gen_node_features by iteration count. Thread-safe.
class SignatureCache {
 public:
  explicit SignatureCache(const ClassDependencyGraph& graph) : graph_(&graph) {}

  const std::vector<NodeSignature>& at(std::uint32_t iterations) const;
  // Seeds the cache with precomputed signatures (e.g. from a library DB).
  void put(std::uint32_t iterations, std::vector<NodeSignature> signatures);

 private:
  const ClassDependencyGraph* graph_;
  mutable std::mutex mutex_;
  mutable std::map<std::uint32_t, std::vector<NodeSignature>> by_iterations_;
};

struct Candidate {
  NodeId app_class = 0;
  double similarity = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateEntry {
  NodeId lib_class = 0;
  std::vector<Candidate> candidates;  // descending similarity, ties by name

  friend bool operator==(const CandidateEntry&, const CandidateEntry&) =
      default;
};

// Only lib classes with at least one candidate have an entry; entries are
// ordered by lib node id.
struct CandidateMap {
  std::vector<CandidateEntry> entries;

  std::size_t size() const { return entries.size(); }
  const CandidateEntry* find(NodeId lib_class) const;

  friend bool operator==(const CandidateMap&, const CandidateMap&) = default;
};

// Pairs (lib, app) whose signature similarity is strictly greater than
// `threshold`.
CandidateMap build_candidate_map(const ClassDependencyGraph& app,
                                 std::span<const NodeSignature> app_signatures,
                                 const ClassDependencyGraph& lib,
                                 std::span<const NodeSignature> lib_signatures,
                                 double threshold);

CandidateMap build_candidate_map(const ClassDependencyGraph& app,
                                 const ClassDependencyGraph& lib,
                                 double threshold);

}  // namespace tpld
