#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tpld/code_model.hpp"
#include "tpld/hash.hpp"

namespace tpld {

struct MatchConfig {
  double class_threshold = 0.7;           // T
  double high_confidence_threshold = 0.9;  // T_h
  double op_agreement = 0.875;            // minimum bit agreement per FS element
  std::uint32_t sequences = 5;            // K
  std::uint32_t draws = 10;               // S
  std::uint64_t seed = 0;
  FuzzyConfig fuzzy = default_fuzzy_config();
};

// Per-method matching inputs, computed once per class.
struct MethodFacts {
  OpcodeSet ops;
  std::size_t op_count = 0;
  std::string signature;
};

struct ClassFacts {
  const ClassDef* cls = nullptr;
  std::vector<MethodFacts> methods;
  std::size_t total_ops = 0;
  bool stateful = false;

  ClassFacts() = default;
  ClassFacts(const ClassDef& def, const FuzzyConfig& fuzzy);
};

std::vector<ClassFacts> analyze_classes(const CodeModel& model,
                                        const FuzzyConfig& fuzzy);

// Slicing and member matching -------------------------------------------------

enum class Statefulness { kStateless, kStateful };

// Stateful iff the class declares at least one non-static field.
Statefulness statefulness(const ClassDef& cls);

// Opcodes on data-flow paths from parameters, plus every return. Methods
// without parameters contribute all their opcodes.
OpcodeSet slice_opcodes(const MethodDef& method);

// |a ∩ l| / |l|; 0 for an empty lib set.
double method_overlap(const OpcodeSet& app_ops, const OpcodeSet& lib_ops);
double method_overlap(const MethodDef& app, const MethodDef& lib);

struct MethodPair {
  std::uint32_t lib_method = 0;  // index into the lib class' methods
  std::uint32_t app_method = 0;
  double overlap = 0.0;

  friend bool operator==(const MethodPair&, const MethodPair&) = default;
};

// One-to-one; pairs sorted by lib method index.
struct MemberMatch {
  std::vector<MethodPair> pairs;

  bool empty() const { return pairs.empty(); }
  std::optional<std::uint32_t> app_for(std::uint32_t lib_method) const;

  friend bool operator==(const MemberMatch&, const MemberMatch&) = default;
};

MemberMatch match_members(const ClassFacts& app, const ClassFacts& lib,
                          double threshold);

// (R_m + R_o) / 2 over the lib class; 0 for a class without methods.
double stateless_cms(const ClassFacts& lib, const MemberMatch& members);

// Assignment ---------------------------------------------------------------

// Maximum-total-weight one-to-one assignment over a rows x cols matrix of
// non-negative weights. Returns (row, col) pairs with positive weight, sorted
// by row.
using WeightMatrix = std::vector<std::vector<double>>;
std::vector<std::pair<std::size_t, std::size_t>> hungarian_max_match(
    const WeightMatrix& weights);

// Field matching -----------------------------------------------------------

struct FieldPair {
  std::uint32_t lib_field = 0;
  std::uint32_t app_field = 0;

  friend bool operator==(const FieldPair&, const FieldPair&) = default;
};

struct FieldCorrespondence {
  std::vector<FieldPair> pairs;  // sorted by lib field index

  std::optional<std::uint32_t> app_for(std::uint32_t lib_field) const;
};

struct FieldProfile {
  std::string fuzzy_type;
  std::uint32_t reads = 0;
  std::uint32_t writes = 0;

  friend bool operator==(const FieldProfile&, const FieldProfile&) = default;
};

// Read/write counts of each own field over the given methods.
std::vector<FieldProfile> field_profiles(
    const ClassDef& cls, const std::vector<std::uint32_t>& methods,
    const FuzzyConfig& fuzzy);

struct FieldMatchResult {
  FieldCorrespondence fields;
  MemberMatch members;  // pruned
};

// Fields pair only on identical profiles. Method pairs whose lib method
// touches an unmatched lib field are dropped (single pass).
FieldMatchResult match_fields(const ClassDef& app, const ClassDef& lib,
                              const MemberMatch& members,
                              const FuzzyConfig& fuzzy);

// Functionality summaries -----------------------------------------------------

// Lib-side method indices; the app-side sequence is the image under the
// member match.
using CallSequence = std::vector<std::uint32_t>;

std::vector<CallSequence> gen_call_sequences(const ClassDef& lib,
                                             const MemberMatch& members,
                                             std::uint32_t count,
                                             std::uint32_t draws,
                                             std::uint64_t seed);

CallSequence app_image(const CallSequence& lib_sequence,
                       const MemberMatch& members);

enum class FieldOpKind { kInitialization, kAssignment, kInvocation };

struct FieldOp {
  FieldOpKind kind = FieldOpKind::kInitialization;
  std::uint32_t field_number = 1;
  std::string field_type;
  std::vector<std::pair<std::uint32_t, std::string>> params;

  std::string serialize() const;
  friend bool operator==(const FieldOp&, const FieldOp&) = default;
};

// `matched_fields` are indices into cls.fields.
std::vector<FieldOp> field_op_sequence(
    const ClassDef& cls, const CallSequence& sequence,
    const std::vector<std::uint32_t>& matched_fields,
    const FuzzyConfig& fuzzy);

struct FunctionalitySummary {
  std::vector<Hash128> elements;
};

FunctionalitySummary summarize(const std::vector<FieldOp>& ops);

// Share of lib summary elements that find a partner with bit agreement
// >= min_agreement under a maximum assignment.
double summary_similarity(const FunctionalitySummary& app,
                          const FunctionalitySummary& lib,
                          double min_agreement);

double stateful_cms(const ClassDef& app, const ClassDef& lib,
                    const MemberMatch& members,
                    const FieldCorrespondence& fields, const MatchConfig& config,
                    std::uint64_t seed);

// Class match ---------------------------------------------------------------

enum class MatchTier { kNone, kMatched, kHighConfidence };

std::string_view to_string(MatchTier tier);

struct ClassMatchResult {
  double cms = 0.0;
  MatchTier tier = MatchTier::kNone;
  double gate_score = 0.0;  // stateless score, kept for diagnostics

  friend bool operator==(const ClassMatchResult&, const ClassMatchResult&) =
      default;
};

MatchTier tier_for(double cms, const MatchConfig& config);

// Call sequences are seeded from config.seed and the lib class name only, so
// results do not depend on app-side identifiers.
ClassMatchResult match_class(const ClassFacts& app, const ClassFacts& lib,
                             const MatchConfig& config);

}  // namespace tpld
