#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vlmedge/protocol/frame.hpp"

namespace vlmedge::transport {

struct JitterConfig {
  std::int64_t target_delay_ms = 50;
  /// Maximum frame_id distance between the oldest held frame and the newest
  /// frame seen before the oldest is forced out.
  std::uint32_t reorder_window = 16;
  /// Frame id the sender starts with. When unknown (nullopt) the first frame
  /// is held until its deadline, since an earlier frame may still be in flight.
  std::optional<std::uint32_t> first_frame_id = 0;
};

struct JitterStats {
  std::uint64_t packets = 0;
  std::uint64_t frames_released = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t packets_late = 0;
  std::uint64_t packets_duplicate = 0;
  std::uint64_t packets_corrupt = 0;
};

/// Reorders media fragments into complete frames and releases them in
/// strictly increasing frame_id order.
///
/// A complete frame is released as soon as every earlier frame has been
/// finalized. An incomplete frame is discarded once its deadline (first
/// fragment arrival + target delay) passes or the reorder window forces it
/// out. Fragments of frames at or below the last finalized id are late and
/// dropped. Timestamps are supplied by the caller, so the buffer itself is
/// clock-free and deterministic. Not thread-safe.
class JitterBuffer {
 public:
  explicit JitterBuffer(JitterConfig config = {});

  std::vector<protocol::FrameEnvelope> push(const protocol::MediaPacket& packet,
                                            std::int64_t arrival_us);

  /// Releases or discards whatever has become due by `now_us`.
  std::vector<protocol::FrameEnvelope> poll(std::int64_t now_us);

  /// Earliest time at which poll() may change state, if any frame is held.
  std::optional<std::int64_t> next_deadline_us() const;

  const JitterStats& stats() const { return stats_; }
  std::size_t held_frames() const { return pending_.size(); }
  const JitterConfig& config() const { return config_; }

 private:
  struct Pending {
    protocol::FrameAssembler assembler;
    std::int64_t first_arrival_us = 0;
  };

  void drain(std::int64_t now_us, std::vector<protocol::FrameEnvelope>& out);
  void finalize(std::uint32_t frame_id);

  JitterConfig config_;
  std::map<std::uint32_t, Pending> pending_;
  std::optional<std::int64_t> next_expected_;
  JitterStats stats_;
};

}  // namespace vlmedge::transport
