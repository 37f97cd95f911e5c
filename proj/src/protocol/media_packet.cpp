#include "vlmedge/protocol/media_packet.hpp"

#include <string>

#include "byte_order.hpp"

namespace vlmedge::protocol {

using detail::get_be;
using detail::put_be;

std::string_view to_string(ProtocolErrc code) {
  switch (code) {
    case ProtocolErrc::InvalidPacket: return "InvalidPacket";
    case ProtocolErrc::BadMagic: return "BadMagic";
    case ProtocolErrc::UnsupportedVersion: return "UnsupportedVersion";
    case ProtocolErrc::Truncated: return "Truncated";
    case ProtocolErrc::MixedFrame: return "MixedFrame";
    case ProtocolErrc::ConflictingDuplicate: return "ConflictingDuplicate";
    case ProtocolErrc::MalformedJson: return "MalformedJson";
    case ProtocolErrc::UnknownMessageType: return "UnknownMessageType";
    case ProtocolErrc::MessageTooLarge: return "MessageTooLarge";
  }
  return "Unknown";
}

void validate(const MediaPacket& packet) {
  if (packet.flags != 0) {
    throw ProtocolError(ProtocolErrc::InvalidPacket,
                        "unsupported flags 0x" + std::to_string(packet.flags));
  }
  if (packet.fragment_count == 0 || packet.fragment_index >= packet.fragment_count) {
    throw ProtocolError(ProtocolErrc::InvalidPacket,
                        "fragment index " + std::to_string(packet.fragment_index) +
                            " out of range for count " + std::to_string(packet.fragment_count));
  }
  if (packet.payload.size() > kMaxPayload) {
    throw ProtocolError(ProtocolErrc::InvalidPacket,
                        "payload of " + std::to_string(packet.payload.size()) + " bytes exceeds " +
                            std::to_string(kMaxPayload));
  }
}

std::vector<std::uint8_t> encode_media_packet(const MediaPacket& packet) {
  validate(packet);
  std::vector<std::uint8_t> out;
  out.reserve(kMediaHeaderSize + packet.payload.size());
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kMediaVersion);
  out.push_back(packet.flags);
  put_be<std::uint16_t>(out, packet.stream_id);
  put_be<std::uint32_t>(out, packet.frame_id);
  put_be<std::uint16_t>(out, packet.fragment_index);
  put_be<std::uint16_t>(out, packet.fragment_count);
  put_be<std::uint64_t>(out, packet.capture_ts_us);
  put_be<std::uint16_t>(out, static_cast<std::uint16_t>(packet.payload.size()));
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
  return out;
}

MediaPacket decode_media_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw ProtocolError(ProtocolErrc::Truncated, "datagram shorter than magic");
  if (bytes[0] != kMagic0 || bytes[1] != kMagic1) {
    throw ProtocolError(ProtocolErrc::BadMagic, "bad magic");
  }
  if (bytes.size() < 3) throw ProtocolError(ProtocolErrc::Truncated, "datagram shorter than version");
  if (bytes[2] != kMediaVersion) {
    throw ProtocolError(ProtocolErrc::UnsupportedVersion,
                        "unsupported version " + std::to_string(bytes[2]));
  }
  if (bytes.size() < kMediaHeaderSize) {
    throw ProtocolError(ProtocolErrc::Truncated, "datagram shorter than header");
  }

  MediaPacket packet;
  packet.flags = bytes[3];
  packet.stream_id = get_be<std::uint16_t>(bytes, 4);
  packet.frame_id = get_be<std::uint32_t>(bytes, 6);
  packet.fragment_index = get_be<std::uint16_t>(bytes, 10);
  packet.fragment_count = get_be<std::uint16_t>(bytes, 12);
  packet.capture_ts_us = get_be<std::uint64_t>(bytes, 14);
  const std::size_t payload_len = get_be<std::uint16_t>(bytes, 22);

  if (payload_len > kMaxPayload) {
    throw ProtocolError(ProtocolErrc::InvalidPacket, "payload_len exceeds maximum");
  }
  const std::size_t available = bytes.size() - kMediaHeaderSize;
  if (available < payload_len) {
    throw ProtocolError(ProtocolErrc::Truncated,
                        "payload_len " + std::to_string(payload_len) + " but only " +
                            std::to_string(available) + " bytes follow");
  }
  if (available > payload_len) {
    throw ProtocolError(ProtocolErrc::InvalidPacket, "trailing bytes after payload");
  }
  packet.payload.assign(bytes.begin() + kMediaHeaderSize, bytes.end());
  validate(packet);
  return packet;
}

}  // namespace vlmedge::protocol
