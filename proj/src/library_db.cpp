#include "tpld/library_db.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tpld/hash.hpp"

namespace tpld {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'T', 'P', 'L', 'S', 'I', 'G', '1', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error("signature file truncated");
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t uint(int width) {
    const auto raw = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(raw[static_cast<std::size_t>(i)]);
    }
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Keeps entry paths to one portable segment.
std::string path_segment(const std::string& text) {
  std::string out;
  for (const char c : text) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                    c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

std::string encode_signatures(const ClassDependencyGraph& graph,
                              std::uint32_t iterations,
                              const std::vector<NodeSignature>& signatures) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, iterations);
  put_u32(out, static_cast<std::uint32_t>(graph.size()));
  for (NodeId n = 0; n < graph.size(); ++n) {
    const auto& name = graph.name(n);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u64(out, signatures[n].lo);
    put_u64(out, signatures[n].hi);
  }
  put_u32(out, static_cast<std::uint32_t>(graph.edges().size()));
  for (const auto& e : graph.edges()) {
    put_u32(out, e.src);
    put_u32(out, e.dst);
    out.push_back(static_cast<char>(e.kind == EdgeKind::kExtends ? 0 : 1));
  }
  return out;
}

DecodedSignatures decode_signatures(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw Error("signature file: bad magic");
  }
  DecodedSignatures out;
  out.iterations = static_cast<std::uint32_t>(in.uint(4));
  const auto count = in.uint(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto length = in.uint(4);
    out.names.emplace_back(in.take(length));
    NodeSignature sig;
    sig.lo = in.uint(8);
    sig.hi = in.uint(8);
    out.signatures.push_back(sig);
  }
  const auto edges = in.uint(4);
  for (std::uint64_t i = 0; i < edges; ++i) {
    Edge e;
    e.src = static_cast<NodeId>(in.uint(4));
    e.dst = static_cast<NodeId>(in.uint(4));
    const auto kind = in.uint(1);
    if (kind > 1 || e.src >= count || e.dst >= count) {
      throw Error("signature file: bad edge");
    }
    e.kind = kind == 0 ? EdgeKind::kExtends : EdgeKind::kImplements;
    out.edges.push_back(e);
  }
  if (!in.done()) throw Error("signature file: trailing bytes");
  return out;
}

std::string manifest_to_json(const Manifest& manifest) {
  nlohmann::ordered_json root;
  root["format"] = 1;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["library"] = e.library;
    j["version"] = e.version;
    j["model"] = e.model_file;
    j["signatures"] = e.signatures_file;
    j["hash"] = e.hash;
    entries.push_back(std::move(j));
  }
  root["entries"] = std::move(entries);
  return root.dump(1) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  Manifest manifest;
  try {
    const auto root = nlohmann::json::parse(text);
    if (root.at("format").get<int>() != 1) throw Error("manifest: unsupported format");
    for (const auto& j : root.at("entries")) {
      manifest.entries.push_back({j.at("library").get<std::string>(),
                                  j.at("version").get<std::string>(),
                                  j.at("model").get<std::string>(),
                                  j.at("signatures").get<std::string>(),
                                  j.at("hash").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest: ") + e.what());
  }
  return manifest;
}

namespace {

std::string entry_hash(std::string_view model, std::string_view signatures) {
  std::string bytes(model);
  bytes.push_back('\0');
  bytes.append(signatures);
  return hash128(bytes).hex();
}

}  // namespace

Manifest build_db(const std::vector<CodeModel>& libraries, const fs::path& out) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& lib : libraries) {
    if (lib.kind != ModelKind::kLibrary || !lib.version) {
      throw Error("build-db: " + lib.name + " is not a library model");
    }
    if (!seen.emplace(lib.name, *lib.version).second) {
      throw Error("build-db: duplicate entry " + lib.name + " " + *lib.version);
    }
  }
  Manifest manifest;
  for (const auto& lib : libraries) {
    const auto graph = build_cdg(lib);
    const auto iterations = refinement_iterations(graph);
    const auto model_bytes = serialize_code_model(lib);
    const auto sig_bytes =
        encode_signatures(graph, iterations, gen_node_features(graph, iterations));
    const std::string dir =
        path_segment(lib.name) + "/" + path_segment(*lib.version);
    DbEntry entry{lib.name, *lib.version, dir + "/model.json",
                  dir + "/signatures.bin", entry_hash(model_bytes, sig_bytes)};
    write_file(out / entry.model_file, model_bytes);
    write_file(out / entry.signatures_file, sig_bytes);
    manifest.entries.push_back(std::move(entry));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const DbEntry& a, const DbEntry& b) {
              return std::tie(a.library, a.version) < std::tie(b.library, b.version);
            });
  write_file(out / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

LibraryDb load_db(const fs::path& dir, const FuzzyConfig& fuzzy) {
  const auto manifest = manifest_from_json(read_file(dir / "manifest.json"));
  LibraryDb db;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& entry : manifest.entries) {
    const std::string label = entry.library + " " + entry.version;
    try {
      if (!seen.emplace(entry.library, entry.version).second) {
        throw Error("duplicate manifest entry");
      }
      const auto model_bytes = read_file(dir / entry.model_file);
      const auto sig_bytes = read_file(dir / entry.signatures_file);
      if (entry_hash(model_bytes, sig_bytes) != entry.hash) {
        throw Error("content hash mismatch");
      }
      auto model = parse_code_model(model_bytes);
      if (model.name != entry.library || model.version != entry.version) {
        throw Error("model identity does not match manifest");
      }
      auto decoded = decode_signatures(sig_bytes);
      auto analyzed = std::make_unique<AnalyzedModel>(std::move(model), fuzzy);
      const auto& graph = analyzed->cdg();
      std::vector<std::string> names;
      for (NodeId n = 0; n < graph.size(); ++n) names.push_back(graph.name(n));
      if (decoded.names != names || !std::ranges::equal(decoded.edges, graph.edges())) {
        throw Error("stored graph does not match model");
      }
      analyzed->signatures().put(decoded.iterations, std::move(decoded.signatures));
      db.by_library[entry.library].push_back(analyzed.get());
      db.models.push_back(std::move(analyzed));
    } catch (const Error& e) {
      db.diagnostics.push_back("db entry " + label + ": " + e.what());
    }
  }
  return db;
}

}  // namespace tpld
