#include "tpld/detector.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <json.hpp>

namespace tpld {

DetectorConfig obfuscation_profile() {
  DetectorConfig config;
  config.profile = "obfuscation";
  config.match.class_threshold = 0.7;
  config.library_threshold = 0.85;
  return config;
}

DetectorConfig optimization_profile() {
  DetectorConfig config;
  config.profile = "optimization";
  config.match.class_threshold = 0.8;
  config.library_threshold = 0.5;
  return config;
}

DetectorConfig profile_by_name(const std::string& name) {
  if (name == "obfuscation") return obfuscation_profile();
  if (name == "optimization") return optimization_profile();
  throw Error("unknown profile '" + name + "'");
}

AnalyzedModel::AnalyzedModel(CodeModel model, const FuzzyConfig& fuzzy)
    : model_(std::move(model)),
      cdg_(build_cdg(model_)),
      facts_(analyze_classes(model_, fuzzy)),
      signatures_(cdg_) {}

std::size_t PairMatchSet::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& kv) {
        return kv.second.result.tier == MatchTier::kMatched;
      }));
}

std::size_t PairMatchSet::high_confidence_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& kv) {
        return kv.second.result.tier == MatchTier::kHighConfidence;
      }));
}

PairMatchSet assign_classes(const CandidateMap& candidates,
                            const AnalyzedModel& app, const AnalyzedModel& lib,
                            const MatchConfig& config) {
  std::vector<const CandidateEntry*> order;
  order.reserve(candidates.entries.size());
  for (const auto& entry : candidates.entries) order.push_back(&entry);
  const auto& lib_cdg = lib.cdg();
  std::stable_sort(order.begin(), order.end(),
                   [&lib_cdg](const CandidateEntry* x, const CandidateEntry* y) {
                     const double bx = x->candidates.front().similarity;
                     const double by = y->candidates.front().similarity;
                     if (bx != by) return bx > by;
                     return lib_cdg.name(x->lib_class) < lib_cdg.name(y->lib_class);
                   });

  PairMatchSet out;
  std::vector<bool> taken(app.cdg().size(), false);
  for (const auto* entry : order) {
    const auto& lib_facts = lib.facts()[entry->lib_class];
    for (const auto& candidate : entry->candidates) {
      if (taken[candidate.app_class]) continue;
      const auto result =
          match_class(app.facts()[candidate.app_class], lib_facts, config);
      if (result.tier == MatchTier::kNone) continue;
      out.pairs.emplace(entry->lib_class, PairMatch{candidate.app_class, result});
      if (result.tier == MatchTier::kHighConfidence) {
        taken[candidate.app_class] = true;
      }
      break;
    }
  }
  return out;
}

std::optional<StructureWitness> find_structure_witness(
    const PairMatchSet& matches, const ClassDependencyGraph& lib,
    const ClassDependencyGraph& app) {
  auto image = [&matches](NodeId v) -> std::optional<NodeId> {
    const auto it = matches.pairs.find(v);
    if (it == matches.pairs.end()) return std::nullopt;
    return it->second.app_class;
  };
  auto edge_maps = [&](const Edge& e) {
    const auto a = image(e.src);
    const auto b = image(e.dst);
    return a && b && app.has_edge(*a, *b, e.kind);
  };

  bool matched_edges = false;
  for (const auto& e : lib.edges()) {
    if (image(e.src) && image(e.dst)) {
      matched_edges = true;
      break;
    }
  }

  if (!matched_edges) {
    for (const auto& [v, pair] : matches.pairs) {
      if (lib.out_edges(v).empty()) {
        return StructureWitness{{{v, pair.app_class}}};
      }
    }
    return std::nullopt;
  }

  // Any valid path ends in a valid edge into a terminal node; find one and
  // extend it backwards for a longer witness.
  for (const NodeId t : terminal_nodes(lib)) {
    if (!image(t)) continue;
    for (const auto& last : lib.in_edges(t)) {
      if (!edge_maps(last)) continue;
      std::vector<NodeId> path{last.src, t};
      std::vector<bool> on_path(lib.size(), false);
      on_path[last.src] = on_path[t] = true;
      bool extended = true;
      while (extended) {
        extended = false;
        for (const auto& e : lib.in_edges(path.front())) {
          if (on_path[e.src] || !edge_maps(e)) continue;
          path.insert(path.begin(), e.src);
          on_path[e.src] = true;
          extended = true;
          break;
        }
      }
      StructureWitness witness;
      for (const NodeId v : path) witness.path.push_back({v, *image(v)});
      return witness;
    }
  }
  return std::nullopt;
}

bool verify_structure(const PairMatchSet& matches,
                      const ClassDependencyGraph& lib,
                      const ClassDependencyGraph& app) {
  return find_structure_witness(matches, lib, app).has_value();
}

double detection_score(std::size_t matched, std::size_t high_confidence,
                       std::size_t candidate_count, double alpha) {
  if (candidate_count == 0) return 0.0;
  return (static_cast<double>(matched) +
          alpha * static_cast<double>(high_confidence)) /
         static_cast<double>(candidate_count);
}

double detection_score(const PairMatchSet& matches,
                       std::size_t candidate_count, double alpha) {
  return detection_score(matches.matched_count(),
                         matches.high_confidence_count(), candidate_count,
                         alpha);
}

std::set<std::string> literal_features(const CodeModel& model,
                                       const std::vector<NodeId>& classes) {
  std::set<std::string> out;
  for (const NodeId c : classes) {
    for (const auto& method : model.classes[c].methods) {
      for (const auto& insn : method.code) {
        if (insn.literal) out.insert(*insn.literal);
      }
    }
  }
  return out;
}

VersionScore score_version(const AnalyzedModel& app, const AnalyzedModel& lib,
                           const DetectorConfig& config) {
  VersionScore out;
  out.library = lib.model().name;
  out.version = lib.model().version.value_or("");

  const auto iterations = refinement_iterations(lib.cdg());
  const auto candidates = build_candidate_map(
      app.cdg(), app.signatures().at(iterations), lib.cdg(),
      lib.signatures().at(iterations), config.candidate_threshold);
  out.candidate_count = candidates.size();
  if (candidates.size() == 0) {
    out.rejection = "no candidate classes";
    return out;
  }

  const auto matches = assign_classes(candidates, app, lib, config.match);
  out.m_count = matches.matched_count();
  out.hm_count = matches.high_confidence_count();
  out.score = detection_score(out.m_count, out.hm_count, out.candidate_count,
                              config.alpha);
  for (const auto& [lib_class, pair] : matches.pairs) {
    out.matched.push_back({lib_class, pair.app_class});
    out.class_map.emplace(lib.cdg().name(lib_class),
                          app.cdg().name(pair.app_class));
  }

  if (const auto witness =
          find_structure_witness(matches, lib.cdg(), app.cdg())) {
    out.structure_ok = true;
    for (const auto& step : witness->path) {
      out.path.emplace_back(lib.cdg().name(step.lib_class),
                            app.cdg().name(step.app_class));
    }
  }

  if (!out.structure_ok) {
    out.rejection = "no structural path to a terminal class";
  } else if (!(out.score > config.library_threshold)) {
    out.rejection = "score below library threshold";
  }
  return out;
}

namespace {

std::size_t literal_overlap(const VersionScore& version,
                            const AnalyzedModel& app,
                            const AnalyzedModel& lib) {
  std::vector<NodeId> lib_classes;
  std::vector<NodeId> app_classes;
  for (const auto& step : version.matched) {
    lib_classes.push_back(step.lib_class);
    app_classes.push_back(step.app_class);
  }
  const auto lib_literals = literal_features(lib.model(), lib_classes);
  const auto app_literals = literal_features(app.model(), app_classes);
  std::size_t count = 0;
  for (const auto& literal : lib_literals) {
    if (app_literals.contains(literal)) ++count;
  }
  return count;
}

}  // namespace

std::optional<std::size_t> choose_version(
    std::vector<VersionScore>& versions, const AnalyzedModel& app,
    const std::vector<const AnalyzedModel*>& libs) {
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < versions.size(); ++i) {
    if (versions[i].rejection.empty()) tied.push_back(i);
  }
  if (tied.empty()) return std::nullopt;

  auto keep_max = [&tied](auto key) {
    auto best = key(tied.front());
    for (const auto i : tied) best = std::max(best, key(i));
    std::erase_if(tied, [&](std::size_t i) { return key(i) != best; });
  };

  keep_max([&](std::size_t i) { return versions[i].score; });
  keep_max([&](std::size_t i) { return versions[i].hm_count; });
  if (tied.size() > 1) {
    for (const auto i : tied) {
      versions[i].literal_overlap = literal_overlap(versions[i], app, *libs[i]);
    }
    keep_max([&](std::size_t i) { return *versions[i].literal_overlap; });
  }
  const auto winner = *std::min_element(
      tied.begin(), tied.end(), [&](std::size_t a, std::size_t b) {
        return versions[a].version < versions[b].version;
      });
  for (const auto i : tied) {
    if (i != winner) versions[i].rejection = "lost version tie-break";
  }
  for (std::size_t i = 0; i < versions.size(); ++i) {
    if (i != winner && versions[i].rejection.empty()) {
      versions[i].rejection = "lower-ranked version";
    }
  }
  return winner;
}

LibraryDecision detect_library(const AnalyzedModel& app,
                               const std::vector<const AnalyzedModel*>& versions,
                               const DetectorConfig& config) {
  LibraryDecision out;
  if (!versions.empty()) out.library = versions.front()->model().name;
  for (const auto* lib : versions) {
    if (lib->model().name != out.library) {
      throw Error("detect_library: versions of different libraries");
    }
    out.versions.push_back(score_version(app, *lib, config));
  }
  out.chosen = choose_version(out.versions, app, versions);
  return out;
}

DetectionReport detect(
    const AnalyzedModel& app,
    const std::map<std::string, std::vector<const AnalyzedModel*>>& libraries,
    const DetectorConfig& config) {
  struct Task {
    const AnalyzedModel* lib;
    VersionScore* slot;
  };
  std::vector<LibraryDecision> decisions;
  decisions.reserve(libraries.size());
  std::vector<Task> tasks;
  for (const auto& [name, versions] : libraries) {
    auto& decision = decisions.emplace_back();
    decision.library = name;
    decision.versions.resize(versions.size());
  }
  {
    std::size_t d = 0;
    for (const auto& [name, versions] : libraries) {
      for (std::size_t v = 0; v < versions.size(); ++v) {
        tasks.push_back({versions[v], &decisions[d].versions[v]});
      }
      ++d;
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      *tasks[i].slot = score_version(app, *tasks[i].lib, config);
    }
  };
  const std::uint32_t jobs =
      std::max<std::uint32_t>(1, std::min<std::uint32_t>(
                                     config.jobs, static_cast<std::uint32_t>(
                                                      tasks.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::uint32_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  DetectionReport report;
  report.app = app.model().name;
  report.config = config;
  std::size_t d = 0;
  for (const auto& [name, versions] : libraries) {
    auto& decision = decisions[d++];
    decision.chosen = choose_version(decision.versions, app, versions);
    if (decision.chosen) {
      report.detected.push_back({name, decision.versions[*decision.chosen]});
    }
    for (std::size_t v = 0; v < decision.versions.size(); ++v) {
      const auto& score = decision.versions[v];
      if (decision.chosen && *decision.chosen == v) continue;
      if (score.candidate_count == 0) continue;
      report.rejected.push_back(
          {name, score.version, score.score, score.rejection});
    }
  }
  return report;
}

std::string DetectionReport::to_json() const {
  using ordered_json = nlohmann::ordered_json;
  ordered_json root;
  root["app"] = app;
  ordered_json profile;
  profile["name"] = config.profile;
  profile["T"] = config.match.class_threshold;
  profile["T_G"] = config.library_threshold;
  profile["T_c"] = config.candidate_threshold;
  profile["T_h"] = config.match.high_confidence_threshold;
  profile["alpha"] = config.alpha;
  profile["seed"] = config.match.seed;
  root["profile"] = std::move(profile);

  ordered_json libraries = ordered_json::array();
  for (const auto& lib : detected) {
    const auto& v = lib.chosen;
    ordered_json entry;
    entry["name"] = lib.library;
    entry["version"] = v.version;
    entry["score"] = v.score;
    entry["hm_count"] = v.hm_count;
    entry["m_count"] = v.m_count;
    entry["candidate_count"] = v.candidate_count;
    ordered_json class_map = ordered_json::object();
    for (const auto& [lib_class, app_class] : v.class_map) {
      class_map[lib_class] = app_class;
    }
    entry["class_map"] = std::move(class_map);
    ordered_json evidence;
    ordered_json path = ordered_json::array();
    for (const auto& [lib_class, app_class] : v.path) {
      path.push_back({lib_class, app_class});
    }
    evidence["path"] = std::move(path);
    evidence["literal_overlap"] =
        v.literal_overlap ? ordered_json(*v.literal_overlap) : nullptr;
    entry["evidence"] = std::move(evidence);
    libraries.push_back(std::move(entry));
  }
  root["libraries"] = std::move(libraries);

  ordered_json rejected_json = ordered_json::array();
  for (const auto& r : rejected) {
    ordered_json entry;
    entry["name"] = r.library;
    entry["version"] = r.version;
    entry["score"] = r.score;
    entry["reason"] = r.reason;
    rejected_json.push_back(std::move(entry));
  }
  root["rejected"] = std::move(rejected_json);
  root["diagnostics"] = diagnostics;
  return root.dump(2) + "\n";
}

}  // namespace tpld
