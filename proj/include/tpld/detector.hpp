#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tpld/candidate.hpp"
#include "tpld/cdg.hpp"
#include "tpld/code_model.hpp"
#include "tpld/matcher.hpp"

namespace tpld {

struct DetectorConfig {
  std::string profile = "obfuscation";
  MatchConfig match;
  double candidate_threshold = 0.85;  // T_c
  double library_threshold = 0.85;    // T_G
  double alpha = 1.5;
  std::uint32_t jobs = 1;
};

// Threshold sets tuned for obfuscated and for optimized apps.
DetectorConfig obfuscation_profile();
DetectorConfig optimization_profile();
// Throws Error on an unknown name.
DetectorConfig profile_by_name(const std::string& name);

// A model together with everything detection derives from it. Immutable after
// construction apart from the internally synchronized signature cache.
class AnalyzedModel {
 public:
  AnalyzedModel(CodeModel model, const FuzzyConfig& fuzzy);
  AnalyzedModel(const AnalyzedModel&) = delete;
  AnalyzedModel& operator=(const AnalyzedModel&) = delete;

  const CodeModel& model() const { return model_; }
  const ClassDependencyGraph& cdg() const { return cdg_; }
  const std::vector<ClassFacts>& facts() const { return facts_; }
  const SignatureCache& signatures() const { return signatures_; }
  SignatureCache& signatures() { return signatures_; }

 private:
  CodeModel model_;
  ClassDependencyGraph cdg_;
  std::vector<ClassFacts> facts_;
  SignatureCache signatures_;
};

struct PairMatch {
  NodeId app_class = 0;
  ClassMatchResult result;
};

struct PairMatchSet {
  std::map<NodeId, PairMatch> pairs;  // keyed by lib class

  std::size_t matched_count() const;          // |M|
  std::size_t high_confidence_count() const;  // |HM|
};

PairMatchSet assign_classes(const CandidateMap& candidates,
                            const AnalyzedModel& app, const AnalyzedModel& lib,
                            const MatchConfig& config);

struct PathStep {
  NodeId lib_class = 0;
  NodeId app_class = 0;
};

// A lib path through matched classes ending at a lib terminal node, whose
// image is an app path with the same edge kinds in the same order.
struct StructureWitness {
  std::vector<PathStep> path;
};

std::optional<StructureWitness> find_structure_witness(
    const PairMatchSet& matches, const ClassDependencyGraph& lib,
    const ClassDependencyGraph& app);

bool verify_structure(const PairMatchSet& matches,
                      const ClassDependencyGraph& lib,
                      const ClassDependencyGraph& app);

// (|M| + alpha |HM|) / candidate_count; 0 when candidate_count is 0.
double detection_score(std::size_t matched, std::size_t high_confidence,
                       std::size_t candidate_count, double alpha);
double detection_score(const PairMatchSet& matches,
                       std::size_t candidate_count, double alpha);

std::set<std::string> literal_features(const CodeModel& model,
                                       const std::vector<NodeId>& classes);

struct VersionScore {
  std::string library;
  std::string version;
  double score = 0.0;
  std::size_t hm_count = 0;
  std::size_t m_count = 0;
  std::size_t candidate_count = 0;
  bool structure_ok = false;
  std::optional<std::size_t> literal_overlap;
  std::map<std::string, std::string> class_map;  // lib class -> app class
  std::vector<std::pair<std::string, std::string>> path;  // lib -> app witness
  std::vector<PathStep> matched;  // every committed (lib, app) pair
  std::string rejection;  // empty for survivors
};

struct LibraryDecision {
  std::string library;
  std::optional<std::size_t> chosen;  // index into versions
  std::vector<VersionScore> versions;
};

VersionScore score_version(const AnalyzedModel& app, const AnalyzedModel& lib,
                           const DetectorConfig& config);

// Picks the winner among already scored versions (highest score, then most
// high-confidence classes, then largest literal overlap, then smallest
// version string).
// Fills literal_overlap for versions that reach the literal tie-break.
std::optional<std::size_t> choose_version(
    std::vector<VersionScore>& versions, const AnalyzedModel& app,
    const std::vector<const AnalyzedModel*>& libs);

LibraryDecision detect_library(const AnalyzedModel& app,
                               const std::vector<const AnalyzedModel*>& versions,
                               const DetectorConfig& config);

struct DetectedLibrary {
  std::string library;
  VersionScore chosen;
};

struct RejectedVersion {
  std::string library;
  std::string version;
  double score = 0.0;
  std::string reason;
};

struct DetectionReport {
  std::string app;
  DetectorConfig config;
  std::vector<DetectedLibrary> detected;
  std::vector<RejectedVersion> rejected;
  std::vector<std::string> diagnostics;

  std::string to_json() const;
};

// `libraries` maps a library name to all its versions.
DetectionReport detect(
    const AnalyzedModel& app,
    const std::map<std::string, std::vector<const AnalyzedModel*>>& libraries,
    const DetectorConfig& config);

}  // namespace tpld
