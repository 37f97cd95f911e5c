#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlmedge/common/error.hpp"
#include "vlmedge/dataset/dataset.hpp"
#include "vlmedge/evaluation/normalize.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::evaluation {

enum class EvaluationErrc { EmptyRun, MismatchedRuns, IoError };

std::string_view to_string(EvaluationErrc code);

using EvaluationError = CodedError<EvaluationErrc>;

struct ScoreOptions {
  /// Reject option letters ("b") for multiple-choice items.
  bool strict_mc = false;
  NormalizeOptions normalize;
};

/// Exact match after normalization. Multiple-choice items also accept the
/// option letter assigned by position ("a" for the first choice) unless
/// strict_mc is set.
bool score_item(std::string_view pred, const dataset::DatasetItem& item, const ScoreOptions& options = {});

/// The label "a".."h" for a choice position.
std::string choice_label(std::size_t index);

struct ItemOutcome {
  std::string item_id;
  std::optional<std::string> category;
  bool correct = false;
  /// Error answers count as incorrect and are left out of latency statistics.
  bool error = false;
  gateway::SimulatedDurations simulated;
};

struct LatencyStats {
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
  std::size_t count = 0;
};

/// Nearest-rank percentile of an unsorted sample; `p` in (0, 100].
double nearest_rank(std::vector<double> values, double p);
LatencyStats latency_stats(const std::vector<double>& values_ms);

struct CategoryStats {
  std::size_t n_items = 0;
  std::size_t n_correct = 0;
  double accuracy = 0;
  double mean_e2e_ms = 0;
};

struct ScoreReport {
  std::string deployment;
  std::string profile;
  std::string family;
  std::string dataset;
  std::size_t n_items = 0;
  std::size_t n_correct = 0;
  std::size_t n_errors = 0;
  double accuracy = 0;
  std::map<std::string, CategoryStats> per_category;
  LatencyStats latency;
  /// Fraction of summed inference time per stage; sums to 1.
  std::map<std::string, double> stage_shares;
  double accuracy_per_ms = 0;
};

struct RunLabels {
  std::string deployment;
  std::string profile;
  std::string family;
  std::string dataset;
};

/// Items without a category are grouped under "uncategorized".
/// Throws EmptyRun if `outcomes` is empty or every item errored.
ScoreReport aggregate(const std::vector<ItemOutcome>& outcomes, const RunLabels& labels);

struct ComparisonReport {
  std::string edge_profile;
  std::string cloud_profile;
  std::string dataset;
  double edge_mean_ms = 0;
  double cloud_mean_ms = 0;
  double latency_reduction_pct = 0;
  double accuracy_delta = 0;
  /// metric -> "edge" | "cloud" | "tie"
  std::map<std::string, std::string> winner_per_metric;
};

/// Throws MismatchedRuns unless both runs used the same dataset, item count
/// and profile family.
ComparisonReport compare_deployments(const ScoreReport& edge, const ScoreReport& cloud);

}  // namespace vlmedge::evaluation
