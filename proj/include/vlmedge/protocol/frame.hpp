#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "vlmedge/protocol/media_packet.hpp"

namespace vlmedge::protocol {

enum class PixelFormat : std::uint8_t { Jpeg = 0, RawRgb8 = 1 };

/// One captured RGB frame.
struct FrameEnvelope {
  std::uint32_t frame_id = 0;
  std::uint64_t capture_ts_us = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  PixelFormat pixel_format = PixelFormat::Jpeg;
  std::vector<std::uint8_t> data;

  bool operator==(const FrameEnvelope&) const = default;
};

/// Size of the serialized frame header prefixed to the fragmented payload:
/// width u16, height u16, pixel_format u8.
inline constexpr std::size_t kFrameHeaderSize = 5;

/// Splits `frame` into datagrams of at most `mtu_payload` payload bytes.
/// Always returns at least one packet; an empty frame still carries its header.
/// Throws std::invalid_argument when mtu_payload is outside [64, 1200] or the
/// frame would need more than 65535 fragments.
std::vector<MediaPacket> fragment_frame(const FrameEnvelope& frame, std::uint16_t stream_id,
                                        std::size_t mtu_payload = kMaxPayload);

/// Incremental reassembly of one frame's fragments.
class FrameAssembler {
 public:
  enum class AddResult { Added, Duplicate, Complete };

  /// Throws MixedFrame when `packet` disagrees with earlier fragments on
  /// stream, frame id, fragment count or capture time, and
  /// ConflictingDuplicate when a fragment index repeats with another payload.
  AddResult add(const MediaPacket& packet);

  bool complete() const;
  bool empty() const { return fragments_.empty(); }
  std::size_t received() const { return fragments_.size(); }
  std::uint16_t expected() const { return fragment_count_; }
  std::uint32_t frame_id() const { return frame_id_; }

  /// Builds the frame. Throws InvalidPacket if the payload is not a valid
  /// serialized frame. Precondition: complete().
  FrameEnvelope assemble() const;

 private:
  std::uint16_t stream_id_ = 0;
  std::uint32_t frame_id_ = 0;
  std::uint16_t fragment_count_ = 0;
  std::uint64_t capture_ts_us_ = 0;
  std::map<std::uint16_t, std::vector<std::uint8_t>> fragments_;
};

/// Returns the frame if every fragment is present, nullopt otherwise.
std::optional<FrameEnvelope> reassemble_frame(std::span<const MediaPacket> packets);

}  // namespace vlmedge::protocol
