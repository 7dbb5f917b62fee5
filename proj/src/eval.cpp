#include "tpld/eval.hpp"

#include <map>

#include <json.hpp>

#include "tpld/code_model.hpp"

namespace tpld {

namespace {

using VersionsByLibrary = std::map<std::string, std::set<std::string>>;

VersionsByLibrary group(const LibVersionSet& pairs) {
  VersionsByLibrary out;
  for (const auto& [library, version] : pairs) out[library].insert(version);
  return out;
}

}  // namespace

Counts count_library_level(const LibVersionSet& reported,
                           const LibVersionSet& truth) {
  const auto r = group(reported);
  const auto t = group(truth);
  Counts c;
  for (const auto& [library, versions] : t) {
    if (r.contains(library)) {
      ++c.tp;
    } else {
      ++c.fn;
    }
  }
  for (const auto& [library, versions] : r) {
    if (!t.contains(library)) ++c.fp;
  }
  return c;
}

Counts count_version_level(const LibVersionSet& reported,
                           const LibVersionSet& truth) {
  const auto r = group(reported);
  const auto t = group(truth);
  Counts c;
  for (const auto& [library, versions] : t) {
    const auto it = r.find(library);
    for (const auto& version : versions) {
      if (it == r.end()) {
        ++c.fn;
      } else if (it->second.contains(version)) {
        ++c.tp;
      } else {
        ++c.fp;
        ++c.fn;
      }
    }
  }
  for (const auto& [library, versions] : r) {
    if (!t.contains(library)) ++c.fp;
  }
  return c;
}

Counts count_version_dagger(const LibVersionSet& reported,
                            const LibVersionSet& truth) {
  const auto r = group(reported);
  const auto t = group(truth);
  Counts c;
  for (const auto& [library, versions] : t) {
    const auto it = r.find(library);
    for (const auto& version : versions) {
      if (it != r.end() && it->second.contains(version)) {
        ++c.tp;
      } else {
        ++c.fn;
      }
    }
    if (it == r.end()) continue;
    for (const auto& version : it->second) {
      if (!versions.contains(version)) ++c.fp;
    }
  }
  for (const auto& [library, versions] : r) {
    if (!t.contains(library)) c.fp += versions.size();
  }
  return c;
}

RegimeMetrics metrics_from_counts(const Counts& counts) {
  RegimeMetrics m;
  m.counts = counts;
  const auto tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) m.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) m.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (m.precision && m.recall) {
    const double sum = *m.precision + *m.recall;
    m.f1 = sum > 0.0 ? 2.0 * *m.precision * *m.recall / sum : 0.0;
  }
  return m;
}

EvalResult evaluate(const std::vector<AppOutcome>& outcomes) {
  Counts library;
  Counts version;
  Counts dagger;
  for (const auto& o : outcomes) {
    library += count_library_level(o.reported, o.truth);
    version += count_version_level(o.reported, o.truth);
    dagger += count_version_dagger(o.reported, o.truth);
  }
  EvalResult result;
  result.library = metrics_from_counts(library);
  result.version = metrics_from_counts(version);
  result.version_dagger = metrics_from_counts(dagger);
  result.apps = outcomes.size();
  return result;
}

namespace {

nlohmann::ordered_json regime_json(const RegimeMetrics& m) {
  nlohmann::ordered_json out;
  out["tp"] = m.counts.tp;
  out["fp"] = m.counts.fp;
  out["fn"] = m.counts.fn;
  auto value = [](const std::optional<double>& x) -> nlohmann::ordered_json {
    if (!x) return nullptr;
    return *x;
  };
  out["precision"] = value(m.precision);
  out["recall"] = value(m.recall);
  out["f1"] = value(m.f1);
  return out;
}

}  // namespace

std::string EvalResult::to_json() const {
  nlohmann::ordered_json out;
  out["apps"] = apps;
  out["library"] = regime_json(library);
  out["version"] = regime_json(version);
  out["version_dagger"] = regime_json(version_dagger);
  out["diagnostics"] = diagnostics;
  return out.dump(2) + "\n";
}

std::pair<std::string, LibVersionSet> reported_from_report_json(
    const std::string& text) {
  try {
    const auto root = nlohmann::json::parse(text);
    LibVersionSet reported;
    for (const auto& lib : root.at("libraries")) {
      reported.emplace(lib.at("name").get<std::string>(),
                       lib.at("version").get<std::string>());
    }
    return {root.at("app").get<std::string>(), std::move(reported)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("detection report: ") + e.what());
  }
}

}  // namespace tpld
