#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tpld/code_model.hpp"
#include "tpld/detector.hpp"

namespace tpld {

struct DbEntry {
  std::string library;
  std::string version;
  std::string model_file;       // relative to the DB directory
  std::string signatures_file;  // CDG edges plus node signatures
  std::string hash;             // over both files

  friend bool operator==(const DbEntry&, const DbEntry&) = default;
};

struct Manifest {
  std::vector<DbEntry> entries;  // sorted by (library, version)

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);

// Binary: magic, iteration count, nodes (name + signature), edges.
std::string encode_signatures(const ClassDependencyGraph& graph,
                              std::uint32_t iterations,
                              const std::vector<NodeSignature>& signatures);

struct DecodedSignatures {
  std::uint32_t iterations = 0;
  std::vector<std::string> names;
  std::vector<NodeSignature> signatures;
  std::vector<Edge> edges;
};

// Throws Error on malformed input.
DecodedSignatures decode_signatures(std::string_view bytes);

// Writes one entry per model. Throws Error on a duplicate (library, version)
// or a non-library model.
Manifest build_db(const std::vector<CodeModel>& libraries,
                  const std::filesystem::path& out);

struct LibraryDb {
  std::vector<std::unique_ptr<AnalyzedModel>> models;
  std::map<std::string, std::vector<const AnalyzedModel*>> by_library;
  std::vector<std::string> diagnostics;  // unreadable entries, skipped
};

// Throws Error when the manifest itself is unreadable.
LibraryDb load_db(const std::filesystem::path& dir, const FuzzyConfig& fuzzy);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tpld
