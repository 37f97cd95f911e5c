#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vlmedge/bench/config.hpp"
#include "vlmedge/dataset/dataset.hpp"
#include "vlmedge/evaluation/predictions.hpp"
#include "vlmedge/evaluation/scoring.hpp"

namespace vlmedge::bench {

struct RunOutcome {
  ProfileEntry entry;
  std::filesystem::path dir;
  std::optional<evaluation::ScoreReport> report;
  std::vector<evaluation::Prediction> predictions;
  bool partial = false;
  /// Why the run failed; empty on success.
  std::string error;

  bool ok() const { return report.has_value() && error.empty() && !partial; }
};

struct BenchResult {
  dataset::DatasetManifest dataset;
  std::filesystem::path dataset_path;
  std::vector<RunOutcome> runs;
  std::vector<evaluation::ComparisonReport> comparisons;

  bool ok() const;
};

using ProgressSink = std::function<void(const std::string&)>;

/// Runs every profile entry in order against a fresh signaling server and
/// gateway, scores it and writes the artifacts under the output directory.
/// A failing entry is recorded and the others still run. Throws
/// BenchError{ConfigError} for an invalid config or unusable dataset.
BenchResult run_benchmark(const BenchConfig& config, const ProgressSink& progress = {});

/// The dataset the config names, generating it under the output directory
/// for synthetic sources. Returns the manifest and the JSONL path.
std::pair<dataset::DatasetManifest, std::filesystem::path> prepare_dataset(const BenchConfig& config);

}  // namespace vlmedge::bench
