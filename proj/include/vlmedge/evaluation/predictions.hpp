#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/dataset/dataset.hpp"
#include "vlmedge/evaluation/scoring.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::evaluation {

/// One line of a predictions JSONL file.
struct Prediction {
  std::string item_id;
  std::string pred;
  std::string query_id;
  std::string backend_id;
  std::optional<gateway::LatencyTrace> trace;
  std::optional<gateway::SimulatedDurations> simulated;
  std::optional<gateway::AnswerError> error;

  bool operator==(const Prediction&) const = default;
};

nlohmann::json to_json(const Prediction& p);
/// Requires "id" and "pred"; everything else is optional.
Prediction prediction_from_json(const nlohmann::json& body);

Prediction prediction_from_answer(const std::string& item_id, const gateway::AnswerEnvelope& answer);

std::string emit_predictions(const std::vector<Prediction>& predictions);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);
/// Throws EvaluationError{IoError} for unreadable files or malformed lines.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Durations used for reporting: the simulated ones when present, otherwise
/// the wall-clock trace.
gateway::SimulatedDurations reported_durations(const Prediction& p);

/// Scores predictions against the dataset gold answers. Dataset items with no
/// prediction count as errors; predictions for unknown ids are ignored.
std::vector<ItemOutcome> score_predictions(const std::vector<Prediction>& predictions,
                                           const dataset::DatasetManifest& manifest,
                                           const ScoreOptions& options = {});

}  // namespace vlmedge::evaluation
