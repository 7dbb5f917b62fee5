#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tpld {

// (library, version) pairs.
using LibVersionSet = std::set<std::pair<std::string, std::string>>;

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

// Library names only.
Counts count_library_level(const LibVersionSet& reported,
                           const LibVersionSet& truth);

// A true version among several reported ones counts as one TP and the extra
// versions are ignored. A wrong version counts as both FP and FN.
Counts count_version_level(const LibVersionSet& reported,
                           const LibVersionSet& truth);

// Every reported version other than the true one is an FP.
Counts count_version_dagger(const LibVersionSet& reported,
                            const LibVersionSet& truth);

struct RegimeMetrics {
  Counts counts;
  std::optional<double> precision;  // empty when undefined
  std::optional<double> recall;
  std::optional<double> f1;
};

RegimeMetrics metrics_from_counts(const Counts& counts);

struct EvalResult {
  RegimeMetrics library;
  RegimeMetrics version;
  RegimeMetrics version_dagger;
  std::size_t apps = 0;
  std::vector<std::string> diagnostics;

  std::string to_json() const;
};

struct AppOutcome {
  std::string app;
  LibVersionSet reported;
  LibVersionSet truth;
};

EvalResult evaluate(const std::vector<AppOutcome>& outcomes);

// Extracts (app id, detected libraries) from a detection report document.
std::pair<std::string, LibVersionSet> reported_from_report_json(
    const std::string& text);

}  // namespace tpld
