#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/error.hpp"

namespace vlmedge::gateway {

enum class GatewayErrc {
  NoFrameAvailable,
  BackendUnavailable,
  BackendTimeout,
  MalformedQuery,
  UnknownProfile,
  ImageDecodeError,
  BackendError,
};

std::string_view to_string(GatewayErrc code);

using GatewayError = CodedError<GatewayErrc>;

enum class QType { YesNo, MultipleChoice, FreeForm };

std::string_view to_string(QType type);
std::optional<QType> parse_qtype(std::string_view text);

struct QueryEnvelope {
  std::string query_id;
  std::string session_id;
  std::string text;
  QType qtype = QType::FreeForm;
  std::vector<std::string> choices;
  /// nullopt means "latest".
  std::optional<std::uint32_t> frame_ref;
  std::optional<std::string> category;
  std::int64_t issued_ts_us = 0;
  /// Benchmark metadata: which dataset item this query replays.
  std::optional<std::string> item_id;
  std::optional<std::string> schema;
};

/// Throws GatewayError{MalformedQuery} on empty text or bad choices.
void validate(const QueryEnvelope& query);

/// Parses a query DataMessage body ("type":"query"). Throws MalformedQuery.
QueryEnvelope query_from_json(const nlohmann::json& body);
nlohmann::json to_json(const QueryEnvelope& query);

enum class Stage { Preprocess, Fusion, Generation, TextDecode };

inline constexpr std::size_t kStageCount = 4;
std::string_view to_string(Stage stage);

/// Durations of the four inference stages, in microseconds.
struct StageDurations {
  std::int64_t preprocess_us = 0;
  std::int64_t fusion_us = 0;
  std::int64_t generation_us = 0;
  std::int64_t text_decode_us = 0;

  std::int64_t& operator[](Stage stage);
  std::int64_t operator[](Stage stage) const;
  std::int64_t total_us() const { return preprocess_us + fusion_us + generation_us + text_decode_us; }
  bool operator==(const StageDurations&) const = default;
};

/// Wall-clock stage timestamps on the benchmark clock, in microseconds.
struct LatencyTrace {
  std::int64_t capture_ts = 0;
  std::int64_t tx_start_ts = 0;
  std::int64_t rx_gateway_ts = 0;
  std::int64_t preprocess_done_ts = 0;
  std::int64_t fusion_done_ts = 0;
  std::int64_t generation_done_ts = 0;
  std::int64_t decode_done_ts = 0;
  std::int64_t response_received_ts = 0;

  std::int64_t d_network_up_us() const { return rx_gateway_ts - capture_ts; }
  std::int64_t d_preprocess_us() const { return preprocess_done_ts - rx_gateway_ts; }
  std::int64_t d_fusion_us() const { return fusion_done_ts - preprocess_done_ts; }
  std::int64_t d_generation_us() const { return generation_done_ts - fusion_done_ts; }
  std::int64_t d_text_decode_us() const { return decode_done_ts - generation_done_ts; }
  std::int64_t d_network_down_us() const { return response_received_ts - decode_done_ts; }
  double e2e_ms() const { return static_cast<double>(response_received_ts - capture_ts) / 1000.0; }

  /// Every timestamp is >= its predecessor.
  bool monotonic() const;
  StageDurations inference() const;
  bool operator==(const LatencyTrace&) const = default;
};

/// Deterministic durations drawn from the backend profile. Reports are built
/// from these so they do not depend on machine load.
struct SimulatedDurations {
  std::int64_t network_up_us = 0;
  StageDurations stages;
  std::int64_t network_down_us = 0;

  std::int64_t e2e_us() const { return network_up_us + stages.total_us() + network_down_us; }
  double e2e_ms() const { return static_cast<double>(e2e_us()) / 1000.0; }
  bool operator==(const SimulatedDurations&) const = default;
};

struct AnswerError {
  std::string code;
  std::string message;
  bool operator==(const AnswerError&) const = default;
};

struct AnswerEnvelope {
  std::string query_id;
  std::string text;
  std::string backend_id;
  LatencyTrace trace;
  std::optional<SimulatedDurations> simulated;
  int token_count = 0;
  std::optional<std::uint32_t> frame_id;
  std::optional<std::string> item_id;
  std::optional<AnswerError> error;

  bool ok() const { return !error.has_value(); }
};

nlohmann::json to_json(const LatencyTrace& trace);
LatencyTrace trace_from_json(const nlohmann::json& body);
nlohmann::json to_json(const SimulatedDurations& sim);
SimulatedDurations simulated_from_json(const nlohmann::json& body);

/// Includes "type":"answer" so the result is a valid DataMessage body.
nlohmann::json to_json(const AnswerEnvelope& answer);
AnswerEnvelope answer_from_json(const nlohmann::json& body);

/// Rough whitespace token count, capped at `max_tokens`.
int count_tokens(std::string_view text, int max_tokens = 50);

}  // namespace vlmedge::gateway
