#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "test_support.hpp"
#include "tpld/corpus.hpp"
#include "tpld/detector.hpp"

namespace tpld {
namespace {

using test::method;
using test::op;

TEST(DetectionScore, Examples) {
  EXPECT_DOUBLE_EQ(detection_score(2, 4, 8, 1.5), 1.0);
  EXPECT_DOUBLE_EQ(detection_score(5, 0, 5, 1.5), 1.0);
  EXPECT_DOUBLE_EQ(detection_score(0, 5, 5, 1.5), 1.5);
  EXPECT_DOUBLE_EQ(detection_score(3, 3, 0, 1.5), 0.0);
}

TEST(DetectionScore, PromotionStrictlyIncreases) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto c = rng.range(1, 50);
    const auto m = rng.range(1, c);
    const auto h = rng.range(0, c - m);
    EXPECT_GT(detection_score(m - 1, h + 1, c, 1.5), detection_score(m, h, c, 1.5));
  }
}

PairMatchSet matched(std::initializer_list<std::pair<NodeId, NodeId>> pairs) {
  PairMatchSet out;
  for (const auto& [l, a] : pairs) {
    out.pairs.emplace(l, PairMatch{a, {1.0, MatchTier::kHighConfidence, 1.0}});
  }
  return out;
}

ClassDependencyGraph chain(EdgeKind last) {
  return ClassDependencyGraph({"A", "B", "C"}, std::vector<Feature>(3, Feature::kDefault),
                              {{0, 1, EdgeKind::kExtends}, {1, 2, last}});
}

TEST(VerifyStructure, ChainExamples) {
  const auto lib = chain(EdgeKind::kExtends);
  const auto pm = matched({{0, 0}, {1, 1}, {2, 2}});
  EXPECT_TRUE(verify_structure(pm, lib, chain(EdgeKind::kExtends)));
  EXPECT_FALSE(verify_structure(pm, lib, chain(EdgeKind::kImplements)));

  const auto witness = find_structure_witness(pm, lib, chain(EdgeKind::kExtends));
  ASSERT_TRUE(witness);
  ASSERT_EQ(witness->path.size(), 3u);
  EXPECT_EQ(witness->path.back().lib_class, 2u);
}

TEST(VerifyStructure, UnmatchedTerminalBlocksPath) {
  const auto lib = chain(EdgeKind::kExtends);
  const auto app = chain(EdgeKind::kExtends);
  EXPECT_FALSE(verify_structure(matched({{0, 0}, {1, 1}}), lib, app));
}

TEST(VerifyStructure, DegenerateEdgelessCase) {
  const ClassDependencyGraph lib({"A", "B"}, std::vector<Feature>(2, Feature::kDefault), {});
  const ClassDependencyGraph app({"x", "y"}, std::vector<Feature>(2, Feature::kDefault), {});
  EXPECT_TRUE(verify_structure(matched({{1, 0}}), lib, app));
  EXPECT_FALSE(verify_structure(PairMatchSet{}, lib, app));
  // A matched non-terminal whose edge leaves the matched set still counts as
  // an edgeless matched subgraph, but it is not terminal itself.
  const auto lib2 = chain(EdgeKind::kExtends);
  EXPECT_FALSE(verify_structure(matched({{0, 0}}), lib2, app));
  EXPECT_TRUE(verify_structure(matched({{0, 0}, {2, 1}}), lib2, app));
}

TEST(VerifyStructure, AppSideNeedNotBeTerminal) {
  const auto lib = chain(EdgeKind::kExtends);
  const ClassDependencyGraph app({"a", "b", "c", "d"}, std::vector<Feature>(4, Feature::kDefault),
                                 {{0, 1, EdgeKind::kExtends},
                                  {1, 2, EdgeKind::kExtends},
                                  {2, 3, EdgeKind::kImplements}});
  EXPECT_TRUE(verify_structure(matched({{0, 0}, {1, 1}, {2, 2}}), lib, app));
}

TEST(VerifyStructure, AgreesWithPathEnumerationOracle) {
  Rng rng(2024);
  int positives = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = test::random_structure_instance(rng, 8);
    const bool expected = test::structure_oracle(inst.matches, inst.lib, inst.app);
    const auto witness = find_structure_witness(inst.matches, inst.lib, inst.app);
    ASSERT_EQ(witness.has_value(), expected) << "trial " << trial;
    positives += expected;
    if (!witness) continue;
    // The witness itself must be a valid path.
    const auto& path = witness->path;
    EXPECT_TRUE(inst.lib.out_edges(path.back().lib_class).empty());
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      bool ok = false;
      for (const auto& e : inst.lib.out_edges(path[i].lib_class)) {
        ok = ok || (e.dst == path[i + 1].lib_class &&
                    inst.app.has_edge(path[i].app_class, path[i + 1].app_class, e.kind));
      }
      EXPECT_TRUE(ok);
    }
  }
  // Both outcomes must be well represented.
  EXPECT_GT(positives, 100);
  EXPECT_LT(positives, 400);
}

ClassDef adder(const std::string& name) {
  auto c = test::klass(name);
  c.methods.push_back(method("f", {"I"}, "I", 2,
                             {op(Opcode::kAdd, {1}, {0, 0}), op(Opcode::kReturn, {}, {1})}));
  return c;
}

TEST(AssignClasses, HighConfidenceAppClassIsExcluded) {
  const AnalyzedModel lib(test::library("L", "1", {adder("L1"), adder("L2")}),
                          default_fuzzy_config());
  const AnalyzedModel app(test::app("A", {adder("A1")}), default_fuzzy_config());
  CandidateMap cm;
  cm.entries = {{0, {{0, 1.0}}}, {1, {{0, 1.0}}}};
  const auto pm = assign_classes(cm, app, lib, MatchConfig{});
  ASSERT_EQ(pm.pairs.size(), 1u);
  EXPECT_TRUE(pm.pairs.contains(0));
  EXPECT_EQ(pm.high_confidence_count(), 1u);
}

TEST(AssignClasses, FallsThroughToNextCandidate) {
  auto other = test::klass("A0");
  other.methods.push_back(method("g", {"J"}, "V", 2,
                                 {op(Opcode::kShl, {1}, {0, 0}), op(Opcode::kReturnVoid)}));
  const AnalyzedModel lib(test::library("L", "1", {adder("L1")}), default_fuzzy_config());
  const AnalyzedModel app(test::app("A", {other, adder("A1")}), default_fuzzy_config());
  CandidateMap cm;
  cm.entries = {{0, {{0, 1.0}, {1, 0.9}}}};
  const auto pm = assign_classes(cm, app, lib, MatchConfig{});
  ASSERT_EQ(pm.pairs.size(), 1u);
  EXPECT_EQ(pm.pairs.at(0).app_class, 1u);
}

struct Embed {
  CodeModel lib;
  CodeModel app;
  corpus::GroundTruth truth;
};

Embed embed(std::uint64_t seed, std::map<corpus::Transform, double> transforms = {}) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  spec.version = "2.6";
  spec.class_count = 12;
  spec.seed = seed;
  auto lib = corpus::gen_library(spec);
  auto [app, truth] = corpus::assemble_app("app", {&lib}, 6, seed + 1);
  if (!transforms.empty()) {
    auto [obf, names] = corpus::obfuscate(app, {transforms, seed + 2});
    corpus::apply_name_map(truth, names);
    app = std::move(obf);
  }
  return {std::move(lib), std::move(app), std::move(truth)};
}

TEST(ScoreVersion, UnobfuscatedEmbedIsFullyHighConfidence) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto e = embed(seed);
    const AnalyzedModel lib(e.lib, default_fuzzy_config());
    const AnalyzedModel app(e.app, default_fuzzy_config());
    const auto v = score_version(app, lib, obfuscation_profile());
    EXPECT_EQ(v.hm_count, e.lib.classes.size());
    EXPECT_TRUE(v.structure_ok);
    EXPECT_TRUE(v.rejection.empty());
    for (const auto& [lib_class, app_class] : v.class_map) {
      EXPECT_EQ(app_class, e.truth.class_map.at({"gson", lib_class}));
    }
  }
}

TEST(ScoreVersion, RenamedDeadCodeEmbedMapsMostClassesCorrectly) {
  std::size_t right = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto e = embed(seed, {{corpus::Transform::kRename, 1.0},
                                {corpus::Transform::kDeadCodeInsert, 0.3}});
    const AnalyzedModel lib(e.lib, default_fuzzy_config());
    const AnalyzedModel app(e.app, default_fuzzy_config());
    const auto v = score_version(app, lib, obfuscation_profile());
    for (const auto& c : e.lib.classes) {
      ++total;
      const auto it = v.class_map.find(c.name);
      right += it != v.class_map.end() && it->second == e.truth.class_map.at({"gson", c.name});
    }
  }
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(total), 0.95);
}

TEST(LiteralFeatures, Examples) {
  auto a = adder("A");
  auto b = test::klass("B");
  b.methods.push_back(method("v", {}, "Ljava/lang/String;", 1,
                             {test::const_string(0, "2.6.0"), op(Opcode::kReturnObject, {}, {0})}));
  auto c = test::klass("C");
  c.methods.push_back(method("w", {}, "Ljava/lang/String;", 1,
                             {test::const_string(0, "x"), test::const_string(0, "2.6.0"),
                              op(Opcode::kReturnObject, {}, {0})}));
  const auto model = test::app("M", {a, b, c});
  EXPECT_TRUE(literal_features(model, {0}).empty());
  EXPECT_EQ(literal_features(model, {1}), (std::set<std::string>{"2.6.0"}));
  EXPECT_EQ(literal_features(model, {0, 1, 2}), (std::set<std::string>{"2.6.0", "x"}));
}

TEST(LiteralFeatures, MatchesRescanOracle) {
  corpus::LibrarySpec spec;
  spec.literal_pool = {"alpha", "beta", "gamma", "delta"};
  spec.seed = 9;
  const auto lib = corpus::gen_library(spec);
  std::vector<NodeId> subset;
  for (NodeId c = 0; c < lib.classes.size(); c += 2) subset.push_back(c);
  std::set<std::string> expected;
  for (const NodeId c : subset) {
    for (const auto& m : lib.classes[c].methods) {
      for (const auto& insn : m.code) {
        if (insn.opcode == Opcode::kConstString) expected.insert(*insn.literal);
      }
    }
  }
  EXPECT_EQ(literal_features(lib, subset), expected);
}

struct Family {
  std::vector<CodeModel> models;
  std::vector<std::unique_ptr<AnalyzedModel>> analyzed;
  std::vector<const AnalyzedModel*> ptrs;

  void add(CodeModel m) {
    analyzed.push_back(std::make_unique<AnalyzedModel>(std::move(m), default_fuzzy_config()));
    ptrs.push_back(analyzed.back().get());
  }
};

TEST(DetectLibrary, PicksEmbeddedVersionAmongEditedSiblings) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  spec.version = "2.4";
  spec.class_count = 12;
  spec.seed = 21;
  const auto v1 = corpus::gen_library(spec);
  const auto v2 = corpus::derive_version(v1, {1, 1, 0, 2}, "2.5", 22).first;
  const auto v3 = corpus::derive_version(v2, {1, 0, 0, 2}, "2.6", 23).first;
  Family fam;
  fam.add(v1);
  fam.add(v2);
  fam.add(v3);
  for (const auto* target : {&v1, &v2, &v3}) {
    const auto app_model = corpus::assemble_app("app", {target}, 5, 30).first;
    const AnalyzedModel app(app_model, default_fuzzy_config());
    const auto decision = detect_library(app, fam.ptrs, obfuscation_profile());
    ASSERT_TRUE(decision.chosen);
    EXPECT_EQ(decision.versions[*decision.chosen].version, *target->version);
  }
}

TEST(DetectLibrary, VersionLiteralBreaksTie) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  spec.version = "2.5";
  spec.seed = 5;
  const auto v25 = corpus::gen_library(spec);
  const auto v26 = corpus::derive_version(v25, {}, "2.6", 6).first;
  Family fam;
  fam.add(v25);
  fam.add(v26);
  const auto app_model = corpus::assemble_app("app", {&v26}, 3, 7).first;
  const AnalyzedModel app(app_model, default_fuzzy_config());
  auto decision = detect_library(app, fam.ptrs, obfuscation_profile());
  ASSERT_TRUE(decision.chosen);
  const auto& winner = decision.versions[*decision.chosen];
  EXPECT_EQ(winner.version, "2.6");
  EXPECT_DOUBLE_EQ(decision.versions[0].score, decision.versions[1].score);
  ASSERT_TRUE(winner.literal_overlap);
  EXPECT_GT(*winner.literal_overlap, *decision.versions[0].literal_overlap);
}

TEST(DetectLibrary, LastResortIsSmallestVersionString) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  spec.version = "b";
  spec.seed = 5;
  const auto vb = corpus::gen_library(spec);
  auto va = vb;
  va.version = "a";
  Family fam;
  fam.add(vb);
  fam.add(va);
  const AnalyzedModel app(corpus::assemble_app("app", {&vb}, 3, 7).first, default_fuzzy_config());
  const auto decision = detect_library(app, fam.ptrs, obfuscation_profile());
  ASSERT_TRUE(decision.chosen);
  EXPECT_EQ(decision.versions[*decision.chosen].version, "a");
  EXPECT_EQ(decision.versions[0].rejection, "lost version tie-break");
}

TEST(DetectLibrary, ThresholdGateReportsAbsent) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  spec.seed = 8;
  Family fam;
  fam.add(corpus::gen_library(spec));
  const AnalyzedModel app(corpus::assemble_app("app", {&fam.analyzed[0]->model()}, 3, 9).first,
                          default_fuzzy_config());
  auto config = obfuscation_profile();
  EXPECT_TRUE(detect_library(app, fam.ptrs, config).chosen);
  // The best possible score is alpha.
  config.library_threshold = 1.5;
  const auto decision = detect_library(app, fam.ptrs, config);
  EXPECT_FALSE(decision.chosen);
  EXPECT_EQ(decision.versions[0].rejection, "score below library threshold");
}

TEST(DetectLibrary, MixedLibrariesThrow) {
  corpus::LibrarySpec spec;
  Family fam;
  spec.name = "a";
  fam.add(corpus::gen_library(spec));
  spec.name = "b";
  fam.add(corpus::gen_library(spec));
  const AnalyzedModel app(test::app("x", {adder("X")}), default_fuzzy_config());
  EXPECT_THROW(detect_library(app, fam.ptrs, obfuscation_profile()), Error);
}

TEST(Detect, UnrelatedAppDetectsNothing) {
  corpus::LibrarySpec spec;
  spec.name = "gson";
  Family fam;
  fam.add(corpus::gen_library(spec));
  const AnalyzedModel app(test::app("x", {}), default_fuzzy_config());
  const auto report = detect(app, {{"gson", fam.ptrs}}, obfuscation_profile());
  EXPECT_TRUE(report.detected.empty());
  EXPECT_TRUE(report.rejected.empty());
}

TEST(Detect, ThreeLibrariesAndStableJsonAcrossJobs) {
  std::vector<Family> fams(3);
  std::vector<const CodeModel*> embedded;
  std::map<std::string, std::vector<const AnalyzedModel*>> db;
  for (int i = 0; i < 3; ++i) {
    corpus::LibrarySpec spec;
    spec.name = "lib" + std::to_string(i);
    spec.version = "1.0";
    spec.seed = 100 + i;
    const auto base = corpus::gen_library(spec);
    fams[i].add(base);
    fams[i].add(corpus::derive_version(base, {2, 0, 0, 3}, "1.1", 200 + i).first);
    embedded.push_back(&fams[i].analyzed[i % 2]->model());
    db[spec.name] = fams[i].ptrs;
  }
  auto [app_model, truth] = corpus::assemble_app("app", embedded, 8, 5);
  auto [obf, names] = corpus::obfuscate(app_model, {{{corpus::Transform::kRename, 1.0}}, 3});
  const AnalyzedModel app(obf, default_fuzzy_config());
  auto config = obfuscation_profile();
  const auto report = detect(app, db, config);
  ASSERT_EQ(report.detected.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(report.detected[i].chosen.version, i % 2 ? "1.1" : "1.0");
  }
  const auto json = report.to_json();
  EXPECT_EQ(json, detect(app, db, config).to_json());
  config.jobs = 4;
  EXPECT_EQ(json, detect(app, db, config).to_json());
}

}  // namespace
}  // namespace tpld
