#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlmedge/common/clock.hpp"
#include "vlmedge/common/error.hpp"
#include "vlmedge/dataset/dataset.hpp"
#include "vlmedge/evaluation/predictions.hpp"
#include "vlmedge/transport/media_channel.hpp"

namespace vlmedge::robot_sim {

enum class RobotErrc { InvalidPlan, SignalingFailed, SessionLost, IoError };
std::string_view to_string(RobotErrc code);
using RobotError = CodedError<RobotErrc>;

struct QuerySchedule {
  enum class Kind { PerFrame, Paced, Burst };
  Kind kind = Kind::PerFrame;
  /// Paced: spacing between query issues.
  std::chrono::milliseconds interval{0};
  /// Burst: queries issued back to back before waiting for their answers.
  std::size_t burst = 1;

  /// "per_frame", "paced:<ms>" or "burst:<n>". Throws RobotError{InvalidPlan}.
  static QuerySchedule parse(std::string_view text);
  std::string to_string() const;
};

struct ReplayPlan {
  dataset::DatasetManifest manifest;
  double fps = 10;
  QuerySchedule schedule;
};

struct RobotSimConfig {
  std::string peer_id = "robot1";
  std::string gateway_peer = "gw1";
  std::string signal_host = "127.0.0.1";
  std::uint16_t signal_port = 8443;
  transport::MediaSenderConfig media;
  std::chrono::milliseconds connect_timeout = std::chrono::seconds(5);
  std::chrono::milliseconds frame_ack_timeout = std::chrono::seconds(5);
  /// Longest wait for any single answer.
  std::chrono::milliseconds answer_timeout = std::chrono::seconds(60);
  /// Renegotiations allowed after the session drops.
  int session_retries = 1;
};

struct ReplayResult {
  std::vector<evaluation::Prediction> predictions;
  std::string session_id;
  std::size_t frames_sent = 0;
  std::size_t reconnects = 0;
  /// Set when the run aborted; predictions cover only part of the manifest.
  bool partial = false;
  std::string abort_reason;
};

/// Replays every item: its image goes out as a frame, and once the gateway
/// acknowledges that frame the item's query follows, bound to it. Frames keep
/// streaming at `fps` between queries. Throws RobotError{SignalingFailed} if
/// no session can be negotiated.
ReplayResult run_replay(const ReplayPlan& plan, const RobotSimConfig& config,
                        const Clock& clock = steady_clock());

struct StreamResult {
  std::string session_id;
  std::size_t frames_sent = 0;
  std::size_t frames_acked = 0;
};

/// Streams the manifest images in a loop for `duration` without querying.
StreamResult stream_only(const dataset::DatasetManifest& manifest, double fps, std::chrono::milliseconds duration,
                         const RobotSimConfig& config, const Clock& clock = steady_clock());

}  // namespace vlmedge::robot_sim
