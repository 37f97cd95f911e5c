#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vlmedge/gateway/envelopes.hpp"
#include "vlmedge/protocol/frame.hpp"

namespace vlmedge::backends {

/// Stage-1 output: planar float RGB in [0, 1] at the backend's input size.
struct PreprocessedImage {
  int width = 0;
  int height = 0;
  std::vector<float> chw;
};

/// Receives the wall-clock end of each stage as the backend finishes it.
class StageObserver {
 public:
  virtual ~StageObserver() = default;
  virtual std::int64_t now_us() const = 0;
  virtual void mark(gateway::Stage stage, std::int64_t ts_us) = 0;
  void mark_now(gateway::Stage stage) { mark(stage, now_us()); }
};

struct InferenceInput {
  const protocol::FrameEnvelope& frame;
  const PreprocessedImage& image;
  const gateway::QueryEnvelope& query;
  /// Time the gateway already spent on stage 1.
  std::int64_t preprocess_elapsed_us = 0;
};

struct InferenceOutput {
  std::string text;
  int token_count = 0;
  /// Durations drawn from a profile; set by simulated backends only.
  std::optional<gateway::StageDurations> simulated;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  /// Runs stages 2-4. Must mark Preprocess, Fusion, Generation and TextDecode
  /// in order. Throws BackendError.
  virtual InferenceOutput infer(const InferenceInput& input, StageObserver& observer) = 0;
};

}  // namespace vlmedge::backends
