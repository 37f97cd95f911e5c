#pragma once

#include <chrono>
#include <string>

#include "vlmedge/backends/backend.hpp"

namespace vlmedge::backends {

struct DecodeParams {
  bool greedy = true;
  int max_new_tokens = 50;
  bool stop_on_eos = true;
};

struct RemoteOptions {
  /// Full URL, e.g. http://127.0.0.1:9000/v1/generate
  std::string endpoint_url;
  std::chrono::milliseconds timeout = std::chrono::seconds(30);
  DecodeParams decode;
  int input_width = 448;
  int input_height = 448;
};

/// Forwards each query to an HTTP inference server (see docs/backend-api.md).
/// Remote timings, when present, place the stage boundaries; otherwise the
/// whole remote call counts as generation.
class RemoteBackend final : public Backend {
 public:
  /// Throws std::invalid_argument for a URL it cannot parse.
  explicit RemoteBackend(RemoteOptions options);

  std::string id() const override { return "remote:" + options_.endpoint_url; }
  int input_width() const override { return options_.input_width; }
  int input_height() const override { return options_.input_height; }
  InferenceOutput infer(const InferenceInput& input, StageObserver& observer) override;

 private:
  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace vlmedge::backends
