#include "vlmedge/protocol/frame.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "byte_order.hpp"

namespace vlmedge::protocol {

std::vector<MediaPacket> fragment_frame(const FrameEnvelope& frame, std::uint16_t stream_id,
                                        std::size_t mtu_payload) {
  if (mtu_payload < kMinMtuPayload || mtu_payload > kMaxPayload) {
    throw std::invalid_argument("mtu_payload must be within [64, 1200], got " +
                                std::to_string(mtu_payload));
  }

  std::vector<std::uint8_t> serialized;
  serialized.reserve(kFrameHeaderSize + frame.data.size());
  detail::put_be<std::uint16_t>(serialized, frame.width);
  detail::put_be<std::uint16_t>(serialized, frame.height);
  serialized.push_back(static_cast<std::uint8_t>(frame.pixel_format));
  serialized.insert(serialized.end(), frame.data.begin(), frame.data.end());

  const std::size_t count = (serialized.size() + mtu_payload - 1) / mtu_payload;
  if (count > 0xFFFF) {
    throw std::invalid_argument("frame of " + std::to_string(frame.data.size()) +
                                " bytes needs more than 65535 fragments");
  }

  std::vector<MediaPacket> packets;
  packets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t begin = i * mtu_payload;
    const std::size_t end = std::min(serialized.size(), begin + mtu_payload);
    MediaPacket p;
    p.stream_id = stream_id;
    p.frame_id = frame.frame_id;
    p.fragment_index = static_cast<std::uint16_t>(i);
    p.fragment_count = static_cast<std::uint16_t>(count);
    p.capture_ts_us = frame.capture_ts_us;
    p.payload.assign(serialized.begin() + static_cast<std::ptrdiff_t>(begin),
                     serialized.begin() + static_cast<std::ptrdiff_t>(end));
    packets.push_back(std::move(p));
  }
  return packets;
}

FrameAssembler::AddResult FrameAssembler::add(const MediaPacket& packet) {
  validate(packet);
  if (fragments_.empty()) {
    stream_id_ = packet.stream_id;
    frame_id_ = packet.frame_id;
    fragment_count_ = packet.fragment_count;
    capture_ts_us_ = packet.capture_ts_us;
  } else if (packet.frame_id != frame_id_) {
    throw ProtocolError(ProtocolErrc::MixedFrame,
                        "fragment of frame " + std::to_string(packet.frame_id) +
                            " mixed into frame " + std::to_string(frame_id_));
  } else if (packet.stream_id != stream_id_ || packet.fragment_count != fragment_count_ ||
             packet.capture_ts_us != capture_ts_us_) {
    throw ProtocolError(ProtocolErrc::MixedFrame,
                        "fragment header disagrees with frame " + std::to_string(frame_id_));
  }

  auto [it, inserted] = fragments_.try_emplace(packet.fragment_index, packet.payload);
  if (!inserted) {
    if (it->second != packet.payload) {
      throw ProtocolError(ProtocolErrc::ConflictingDuplicate,
                          "fragment " + std::to_string(packet.fragment_index) + " of frame " +
                              std::to_string(frame_id_) + " repeated with different payload");
    }
    return AddResult::Duplicate;
  }
  return complete() ? AddResult::Complete : AddResult::Added;
}

bool FrameAssembler::complete() const {
  return !fragments_.empty() && fragments_.size() == fragment_count_;
}

FrameEnvelope FrameAssembler::assemble() const {
  std::vector<std::uint8_t> serialized;
  for (const auto& [index, payload] : fragments_) {
    serialized.insert(serialized.end(), payload.begin(), payload.end());
  }
  if (serialized.size() < kFrameHeaderSize) {
    throw ProtocolError(ProtocolErrc::InvalidPacket, "frame payload shorter than frame header");
  }
  FrameEnvelope frame;
  frame.frame_id = frame_id_;
  frame.capture_ts_us = capture_ts_us_;
  frame.width = detail::get_be<std::uint16_t>(serialized, 0);
  frame.height = detail::get_be<std::uint16_t>(serialized, 2);
  const std::uint8_t format = serialized[4];
  if (format > static_cast<std::uint8_t>(PixelFormat::RawRgb8)) {
    throw ProtocolError(ProtocolErrc::InvalidPacket,
                        "unknown pixel format " + std::to_string(format));
  }
  frame.pixel_format = static_cast<PixelFormat>(format);
  frame.data.assign(serialized.begin() + kFrameHeaderSize, serialized.end());
  if (frame.pixel_format == PixelFormat::RawRgb8 &&
      frame.data.size() != std::size_t{frame.width} * frame.height * 3) {
    throw ProtocolError(ProtocolErrc::InvalidPacket, "raw frame size does not match dimensions");
  }
  return frame;
}

std::optional<FrameEnvelope> reassemble_frame(std::span<const MediaPacket> packets) {
  FrameAssembler assembler;
  for (const auto& packet : packets) assembler.add(packet);
  if (!assembler.complete()) return std::nullopt;
  return assembler.assemble();
}

}  // namespace vlmedge::protocol
