// tpld: library DB construction, detection, corpus generation, evaluation.
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "tpld/corpus.hpp"
#include "tpld/detector.hpp"
#include "tpld/eval.hpp"
#include "tpld/library_db.hpp"

namespace fs = std::filesystem;
using namespace tpld;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_build_db(const std::vector<std::string>& files, const std::string& out) {
  std::vector<CodeModel> models;
  for (const auto& file : files) models.push_back(load_code_model(file));
  const auto manifest = build_db(models, out);
  std::cerr << "wrote " << manifest.entries.size() << " entries to " << out << "\n";
  return kOk;
}

struct DetectOptions {
  std::string app;
  std::string db;
  std::string out;
  std::string profile = "obfuscation";
  std::uint64_t seed = 0;
  std::optional<double> t, tg, tc, th;
  std::uint32_t jobs = 1;
  bool time = false;
  std::string dump_cdg;
};

int cmd_detect(const DetectOptions& o) {
  if (!fs::exists(o.app)) throw UsageError("app file not found: " + o.app);
  const auto started = std::chrono::steady_clock::now();
  DetectorConfig config = profile_by_name(o.profile);
  config.match.seed = o.seed;
  if (o.t) config.match.class_threshold = *o.t;
  if (o.tg) config.library_threshold = *o.tg;
  if (o.tc) config.candidate_threshold = *o.tc;
  if (o.th) config.match.high_confidence_threshold = *o.th;
  config.jobs = std::max<std::uint32_t>(1, o.jobs);

  const auto db = load_db(o.db, config.match.fuzzy);
  const AnalyzedModel app(load_code_model(o.app), config.match.fuzzy);
  if (!o.dump_cdg.empty()) write_file(o.dump_cdg, to_dot(app.cdg()));
  auto report = detect(app, db.by_library, config);
  report.diagnostics.insert(report.diagnostics.begin(), db.diagnostics.begin(),
                            db.diagnostics.end());
  const auto json = report.to_json();
  if (o.out.empty()) {
    std::cout << json;
  } else {
    write_file(o.out, json);
  }
  if (o.time) {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - started;
    std::cerr << "elapsed " << elapsed.count() << " s\n";
  }
  return kOk;
}

int cmd_gen_corpus(const std::string& spec_file, std::optional<std::uint64_t> seed,
                   const std::string& out) {
  corpus::CorpusSpec spec;
  if (!spec_file.empty()) spec = corpus::corpus_spec_from_json(read_file(spec_file));
  if (seed) spec.seed = *seed;
  const auto c = corpus::gen_corpus(spec);
  const fs::path root(out);
  for (const auto& lib : c.libraries) {
    write_file(root / "libs" / (lib.name + "-" + *lib.version + ".json"),
               serialize_code_model(lib));
  }
  for (const auto& app : c.apps) {
    write_file(root / "apps" / (app.name + ".json"), serialize_code_model(app));
  }
  write_file(root / "ground_truth.json", corpus::ground_truth_to_json(c.truths));
  std::cerr << "wrote " << c.libraries.size() << " library versions and "
            << c.apps.size() << " apps to " << out << "\n";
  return kOk;
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_eval(const std::string& reports, const std::string& truth,
             const std::string& out) {
  if (!fs::is_directory(reports)) throw UsageError("not a directory: " + reports);
  const fs::path truth_file =
      fs::is_directory(truth) ? fs::path(truth) / "ground_truth.json" : fs::path(truth);
  std::map<std::string, LibVersionSet> truths;
  for (const auto& t : corpus::ground_truth_from_json(read_file(truth_file))) {
    LibVersionSet set;
    for (const auto& e : t.embedded) set.emplace(e.library, e.version);
    truths[t.app] = std::move(set);
  }
  std::vector<AppOutcome> outcomes;
  std::vector<std::string> diagnostics;
  for (const auto& file : json_files(reports)) {
    auto [app, reported] = reported_from_report_json(read_file(file));
    const auto it = truths.find(app);
    if (it == truths.end()) {
      diagnostics.push_back("no ground truth for report app " + app);
      continue;
    }
    outcomes.push_back({app, std::move(reported), it->second});
    truths.erase(it);
  }
  for (const auto& [app, set] : truths) {
    diagnostics.push_back("no report for ground-truth app " + app);
  }
  auto result = evaluate(outcomes);
  result.diagnostics = std::move(diagnostics);
  if (out.empty()) {
    std::cout << result.to_json();
  } else {
    write_file(out, result.to_json());
  }
  return result.diagnostics.empty() ? kOk : kInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Version-level third-party library detection"};
  cli.require_subcommand(1);

  std::vector<std::string> lib_files;
  std::string db_out;
  auto* build = cli.add_subcommand("build-db", "Build a library DB from library models");
  build->add_option("models", lib_files, "Library code-model files")->required()->check(CLI::ExistingFile);
  build->add_option("--out", db_out, "Output directory")->required();

  DetectOptions d;
  auto* det = cli.add_subcommand("detect", "Detect libraries in an app model");
  det->add_option("app", d.app, "App code-model file")->required();
  det->add_option("--db", d.db, "Library DB directory")->required()->check(CLI::ExistingDirectory);
  det->add_option("--out", d.out, "Report file (default stdout)");
  det->add_option("--profile", d.profile, "Threshold profile")
      ->check(CLI::IsMember({"obfuscation", "optimization"}));
  det->add_option("--seed", d.seed, "Seed for call-sequence sampling");
  det->add_option("--T", d.t, "Class match threshold");
  det->add_option("--Tg", d.tg, "Library score threshold");
  det->add_option("--Tc", d.tc, "Candidate similarity threshold");
  det->add_option("--Th", d.th, "High-confidence threshold");
  det->add_option("--jobs", d.jobs, "Worker threads");
  det->add_flag("--time", d.time, "Print wall-clock time to stderr");
  det->add_option("--dump-cdg", d.dump_cdg, "Write the app CDG as DOT");

  std::string spec_file;
  std::optional<std::uint64_t> corpus_seed;
  std::string corpus_out = "corpus";
  auto* gen = cli.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  gen->add_option("--spec", spec_file, "Corpus spec JSON")->check(CLI::ExistingFile);
  gen->add_option("--seed", corpus_seed, "Corpus seed (overrides the spec)");
  gen->add_option("--out", corpus_out, "Output directory");

  std::string reports_dir, truth_dir, eval_out;
  auto* ev = cli.add_subcommand("eval", "Score detection reports against ground truth");
  ev->add_option("--reports", reports_dir, "Directory of detection reports")->required();
  ev->add_option("--truth", truth_dir, "Corpus directory or ground_truth.json")->required();
  ev->add_option("--out", eval_out, "Result file (default stdout)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build_db(lib_files, db_out);
    if (*det) return cmd_detect(d);
    if (*gen) return cmd_gen_corpus(spec_file, corpus_seed, corpus_out);
    if (*ev) return cmd_eval(reports_dir, truth_dir, eval_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
