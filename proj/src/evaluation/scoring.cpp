#include "vlmedge/evaluation/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vlmedge::evaluation {

std::string_view to_string(EvaluationErrc code) {
  switch (code) {
    case EvaluationErrc::EmptyRun: return "EmptyRun";
    case EvaluationErrc::MismatchedRuns: return "MismatchedRuns";
    case EvaluationErrc::IoError: return "IoError";
  }
  return "Unknown";
}

std::string choice_label(std::size_t index) { return std::string(1, static_cast<char>('a' + index)); }

bool score_item(std::string_view pred, const dataset::DatasetItem& item, const ScoreOptions& options) {
  const std::string p = normalize_answer(pred, options.normalize);
  const std::string gold = normalize_answer(item.gold, options.normalize);
  if (p == gold) return true;
  if (item.qtype != gateway::QType::MultipleChoice || options.strict_mc) return false;
  for (std::size_t i = 0; i < item.choices.size(); ++i) {
    if (p == choice_label(i)) return normalize_answer(item.choices[i], options.normalize) == gold;
  }
  return false;
}

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

LatencyStats latency_stats(const std::vector<double>& values) {
  LatencyStats s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean_ms = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.p50_ms = nearest_rank(values, 50);
  s.p95_ms = nearest_rank(values, 95);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min_ms = *lo;
  s.max_ms = *hi;
  return s;
}

namespace {

double fraction(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ScoreReport aggregate(const std::vector<ItemOutcome>& outcomes, const RunLabels& labels) {
  if (outcomes.empty()) throw EvaluationError(EvaluationErrc::EmptyRun, "no items to aggregate");

  ScoreReport r;
  r.deployment = labels.deployment;
  r.profile = labels.profile;
  r.family = labels.family;
  r.dataset = labels.dataset;
  r.n_items = outcomes.size();

  std::vector<double> e2e;
  std::map<std::string, std::vector<double>> category_e2e;
  gateway::StageDurations totals;
  for (const auto& o : outcomes) {
    const std::string category = o.category.value_or("uncategorized");
    auto& cat = r.per_category[category];
    ++cat.n_items;
    if (o.correct) {
      ++r.n_correct;
      ++cat.n_correct;
    }
    if (o.error) {
      ++r.n_errors;
      continue;
    }
    e2e.push_back(o.simulated.e2e_ms());
    category_e2e[category].push_back(o.simulated.e2e_ms());
    totals.preprocess_us += o.simulated.stages.preprocess_us;
    totals.fusion_us += o.simulated.stages.fusion_us;
    totals.generation_us += o.simulated.stages.generation_us;
    totals.text_decode_us += o.simulated.stages.text_decode_us;
  }
  if (e2e.empty()) throw EvaluationError(EvaluationErrc::EmptyRun, "every query in the run failed");

  r.accuracy = fraction(r.n_correct, r.n_items);
  for (auto& [name, cat] : r.per_category) {
    cat.accuracy = fraction(cat.n_correct, cat.n_items);
    cat.mean_e2e_ms = latency_stats(category_e2e[name]).mean_ms;
  }
  r.latency = latency_stats(e2e);

  const auto total = static_cast<double>(totals.total_us());
  for (auto stage : {gateway::Stage::Preprocess, gateway::Stage::Fusion, gateway::Stage::Generation,
                     gateway::Stage::TextDecode}) {
    r.stage_shares[std::string(gateway::to_string(stage))] =
        total > 0 ? static_cast<double>(totals[stage]) / total : 0.0;
  }
  r.accuracy_per_ms = r.latency.mean_ms > 0 ? r.accuracy / r.latency.mean_ms : 0.0;
  return r;
}

ComparisonReport compare_deployments(const ScoreReport& edge, const ScoreReport& cloud) {
  if (edge.dataset != cloud.dataset || edge.n_items != cloud.n_items) {
    throw EvaluationError(EvaluationErrc::MismatchedRuns, "runs used different datasets");
  }
  if (edge.family != cloud.family) {
    throw EvaluationError(EvaluationErrc::MismatchedRuns,
                          "profile families differ: " + edge.family + " vs " + cloud.family);
  }
  ComparisonReport c;
  c.edge_profile = edge.profile;
  c.cloud_profile = cloud.profile;
  c.dataset = edge.dataset;
  c.edge_mean_ms = edge.latency.mean_ms;
  c.cloud_mean_ms = cloud.latency.mean_ms;
  c.latency_reduction_pct =
      cloud.latency.mean_ms > 0 ? 100.0 * (cloud.latency.mean_ms - edge.latency.mean_ms) / cloud.latency.mean_ms
                                : 0.0;
  c.accuracy_delta = edge.accuracy - cloud.accuracy;

  auto winner = [](double edge_value, double cloud_value, bool lower_is_better) -> std::string {
    if (edge_value == cloud_value) return "tie";
    return (edge_value < cloud_value) == lower_is_better ? "edge" : "cloud";
  };
  c.winner_per_metric["mean_e2e_ms"] = winner(edge.latency.mean_ms, cloud.latency.mean_ms, true);
  c.winner_per_metric["p95_e2e_ms"] = winner(edge.latency.p95_ms, cloud.latency.p95_ms, true);
  c.winner_per_metric["accuracy"] = winner(edge.accuracy, cloud.accuracy, false);
  c.winner_per_metric["accuracy_per_ms"] = winner(edge.accuracy_per_ms, cloud.accuracy_per_ms, false);
  return c;
}

}  // namespace vlmedge::evaluation
