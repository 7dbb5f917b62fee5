#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tpld/code_model.hpp"

namespace tpld::corpus {

struct LibrarySpec {
  std::string name = "lib";
  std::string version = "1.0";
  std::uint32_t class_count = 10;
  std::uint32_t min_methods = 2;
  std::uint32_t max_methods = 6;
  std::uint32_t min_fields = 0;
  std::uint32_t max_fields = 3;
  // Probability that a class gets an in-library superclass / interface.
  double edge_density = 0.4;
  std::vector<std::string> literal_pool;
  std::uint64_t seed = 1;
};

// Throws Error on an infeasible spec.
CodeModel gen_library(const LibrarySpec& spec);

struct VersionEdits {
  std::uint32_t methods_added = 0;
  std::uint32_t methods_removed = 0;
  std::uint32_t literals_changed = 0;
  std::uint32_t bodies_mutated = 0;  // instructions whose opcode changes
};

struct EditLog {
  std::vector<std::string> entries;
};

// The version literal carried by the library is rewritten to `new_version`.
std::pair<CodeModel, EditLog> derive_version(const CodeModel& lib,
                                             const VersionEdits& edits,
                                             const std::string& new_version,
                                             std::uint64_t seed);

struct EmbeddedLibrary {
  std::string library;
  std::string version;
};

struct GroundTruth {
  std::string app;
  std::vector<EmbeddedLibrary> embedded;
  // (library, lib class) -> app class
  std::map<std::pair<std::string, std::string>, std::string> class_map;
  std::vector<std::string> transforms;
};

std::pair<CodeModel, GroundTruth> assemble_app(
    const std::string& app_name, const std::vector<const CodeModel*>& libs,
    std::uint32_t host_classes, std::uint64_t seed);

enum class Transform {
  kRename,
  kPackageFlatten,
  kCfShuffle,
  kDeadCodeInsert,
  kDeadCodeRemove,
  kStringEncrypt,
};

std::string_view to_string(Transform transform);
Transform transform_from_string(std::string_view text);

struct ObfuscationConfig {
  std::map<Transform, double> intensity;  // enabled transforms
  std::uint64_t seed = 1;
};

struct NameMap {
  std::map<std::string, std::string> classes;  // old -> new
};

// Platform classes are never renamed.
std::pair<CodeModel, NameMap> obfuscate(const CodeModel& model,
                                        const ObfuscationConfig& config);

// Applies an obfuscation name map to a ground truth's app-side names.
void apply_name_map(GroundTruth& truth, const NameMap& names);

std::string ground_truth_to_json(const std::vector<GroundTruth>& truths);
std::vector<GroundTruth> ground_truth_from_json(const std::string& text);

// A whole corpus: libraries with derived versions and apps embedding them.
struct CorpusSpec {
  std::uint32_t libraries = 20;
  std::uint32_t versions = 3;
  std::uint32_t apps = 30;
  std::uint32_t libs_per_app = 3;
  std::uint32_t host_classes = 10;
  LibrarySpec library;  // name, version and seed are overridden per library
  std::uint32_t min_method_diffs = 1;
  std::uint32_t max_method_diffs = 5;
  ObfuscationConfig obfuscation;
  std::uint64_t seed = 1;
};

CorpusSpec corpus_spec_from_json(const std::string& text);

struct Corpus {
  std::vector<CodeModel> libraries;  // every version of every library
  std::vector<CodeModel> apps;
  std::vector<GroundTruth> truths;  // parallel to apps
};

Corpus gen_corpus(const CorpusSpec& spec);

}  // namespace tpld::corpus
