#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

#include "vlmedge/protocol/frame.hpp"

namespace vlmedge::gateway {

/// The most recent frames of one session. Written by the media receive path,
/// read by the pipeline; readers get immutable snapshots.
class FrameCache {
 public:
  struct Entry {
    std::shared_ptr<const protocol::FrameEnvelope> frame;
    std::int64_t received_us = 0;
  };

  explicit FrameCache(std::size_t capacity = 4);

  void put(protocol::FrameEnvelope frame, std::int64_t received_us);
  std::optional<Entry> get(std::uint32_t frame_id) const;
  std::optional<Entry> latest() const;
  /// nullopt frame_id means latest.
  std::optional<Entry> resolve(std::optional<std::uint32_t> frame_id) const;

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t frames_received() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<Entry> entries_;
  std::uint64_t received_ = 0;
};

}  // namespace vlmedge::gateway
