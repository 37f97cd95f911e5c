#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vlmedge/protocol/errors.hpp"

namespace vlmedge::protocol {

inline constexpr std::uint8_t kMagic0 = 0x45;
inline constexpr std::uint8_t kMagic1 = 0x50;
inline constexpr std::uint8_t kMediaVersion = 1;
inline constexpr std::size_t kMediaHeaderSize = 24;
inline constexpr std::size_t kMaxPayload = 1200;
inline constexpr std::size_t kMinMtuPayload = 64;

/// Bit 0 of `flags` is reserved to announce encrypted payloads. Version 1
/// defines no flags, so any set bit is rejected.
inline constexpr std::uint8_t kFlagEncrypted = 0x01;

/// Stream id reserved for the media-path handshake probe. Frames never use it.
inline constexpr std::uint16_t kProbeStreamId = 0xFFFF;

/// One media datagram. Header layout (big-endian):
///   magic 0-1 | version 2 | flags 3 | stream_id 4-5 | frame_id 6-9 |
///   fragment_index 10-11 | fragment_count 12-13 | capture_ts_us 14-21 |
///   payload_len 22-23 | payload 24..
struct MediaPacket {
  std::uint8_t flags = 0;
  std::uint16_t stream_id = 0;
  std::uint32_t frame_id = 0;
  std::uint16_t fragment_index = 0;
  std::uint16_t fragment_count = 1;
  std::uint64_t capture_ts_us = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const MediaPacket&) const = default;
};

/// Throws ProtocolError{InvalidPacket} when `packet` violates its invariants.
void validate(const MediaPacket& packet);

std::vector<std::uint8_t> encode_media_packet(const MediaPacket& packet);

/// Accepts exactly one datagram: trailing bytes are an error, as is a payload
/// shorter than the header's payload_len.
MediaPacket decode_media_packet(std::span<const std::uint8_t> bytes);

}  // namespace vlmedge::protocol
