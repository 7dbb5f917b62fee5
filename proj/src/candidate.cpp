#include "tpld/candidate.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace tpld {

NodeSignature signature_hash(std::span<const std::string> tokens) {
  if (tokens.empty()) {
    throw std::invalid_argument("signature_hash: empty token multiset");
  }
  std::array<int, 128> votes{};
  for (const auto& token : tokens) {
    const Hash128 h = hash128(token);
    for (unsigned i = 0; i < 128; ++i) {
      votes[i] += h.bit(i) ? 1 : -1;
    }
  }
  NodeSignature out;
  for (unsigned i = 0; i < 64; ++i) {
    if (votes[i] > 0) out.lo |= std::uint64_t{1} << i;
    if (votes[i + 64] > 0) out.hi |= std::uint64_t{1} << i;
  }
  return out;
}

double signature_similarity(const NodeSignature& a, const NodeSignature& b) {
  return bit_agreement(a, b);
}

std::vector<NodeSignature> gen_node_features(const ClassDependencyGraph& graph,
                                             std::uint32_t iterations) {
  const std::size_t n = graph.size();
  std::vector<NodeSignature> labels(n);
  for (NodeId v = 0; v < n; ++v) {
    const std::string token = "node:" + std::string(to_string(graph.feature(v)));
    labels[v] = signature_hash(std::span(&token, 1));
  }

  std::vector<NodeSignature> next(n);
  std::vector<std::string> tokens;
  for (std::uint32_t iter = 0; iter < iterations; ++iter) {
    for (NodeId u = 0; u < n; ++u) {
      tokens.clear();
      tokens.push_back("self:" + labels[u].hex());
      for (const auto& e : graph.out_edges(u)) {
        tokens.push_back("dep:" + std::string(to_string(e.kind)) + ":" +
                         labels[e.dst].hex());
      }
      next[u] = signature_hash(tokens);
    }
    labels.swap(next);
  }
  return labels;
}

std::uint32_t refinement_iterations(const ClassDependencyGraph& lib) {
  return std::max<std::uint32_t>(1, diameter(lib));
}

const std::vector<NodeSignature>& SignatureCache::at(
    std::uint32_t iterations) const {
  std::lock_guard lock(mutex_);
  auto it = by_iterations_.find(iterations);
  if (it == by_iterations_.end()) {
    it = by_iterations_
             .emplace(iterations, gen_node_features(*graph_, iterations))
             .first;
  }
  return it->second;
}

void SignatureCache::put(std::uint32_t iterations,
                         std::vector<NodeSignature> signatures) {
  if (signatures.size() != graph_->size()) {
    throw Error("signature cache: size does not match graph");
  }
  std::lock_guard lock(mutex_);
  by_iterations_.insert_or_assign(iterations, std::move(signatures));
}

const CandidateEntry* CandidateMap::find(NodeId lib_class) const {
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), lib_class,
      [](const CandidateEntry& e, NodeId id) { return e.lib_class < id; });
  if (it == entries.end() || it->lib_class != lib_class) return nullptr;
  return &*it;
}

CandidateMap build_candidate_map(const ClassDependencyGraph& app,
                                 std::span<const NodeSignature> app_signatures,
                                 const ClassDependencyGraph& lib,
                                 std::span<const NodeSignature> lib_signatures,
                                 double threshold) {
  CandidateMap out;
  for (NodeId l = 0; l < lib.size(); ++l) {
    CandidateEntry entry{l, {}};
    for (NodeId a = 0; a < app.size(); ++a) {
      const double sim =
          signature_similarity(lib_signatures[l], app_signatures[a]);
      if (sim > threshold) {
        entry.candidates.push_back({a, sim});
      }
    }
    if (entry.candidates.empty()) continue;
    std::sort(entry.candidates.begin(), entry.candidates.end(),
              [&app](const Candidate& x, const Candidate& y) {
                if (x.similarity != y.similarity) {
                  return x.similarity > y.similarity;
                }
                return app.name(x.app_class) < app.name(y.app_class);
              });
    out.entries.push_back(std::move(entry));
  }
  return out;
}

CandidateMap build_candidate_map(const ClassDependencyGraph& app,
                                 const ClassDependencyGraph& lib,
                                 double threshold) {
  const auto iterations = refinement_iterations(lib);
  const auto app_signatures = gen_node_features(app, iterations);
  const auto lib_signatures = gen_node_features(lib, iterations);
  return build_candidate_map(app, app_signatures, lib, lib_signatures,
                             threshold);
}

}  // namespace tpld
