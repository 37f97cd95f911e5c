#include "vlmedge/transport/jitter_buffer.hpp"

namespace vlmedge::transport {

using protocol::FrameEnvelope;
using protocol::MediaPacket;

JitterBuffer::JitterBuffer(JitterConfig config) : config_(config) {
  if (config_.first_frame_id) next_expected_ = *config_.first_frame_id;
}

std::vector<FrameEnvelope> JitterBuffer::push(const MediaPacket& packet, std::int64_t arrival_us) {
  ++stats_.packets;
  std::vector<FrameEnvelope> out;
  if (next_expected_ && static_cast<std::int64_t>(packet.frame_id) < *next_expected_) {
    ++stats_.packets_late;
    drain(arrival_us, out);
    return out;
  }

  auto [it, inserted] = pending_.try_emplace(packet.frame_id);
  if (inserted) it->second.first_arrival_us = arrival_us;
  try {
    if (it->second.assembler.add(packet) == protocol::FrameAssembler::AddResult::Duplicate) {
      ++stats_.packets_duplicate;
    }
  } catch (const protocol::ProtocolError&) {
    ++stats_.packets_corrupt;
    if (it->second.assembler.empty()) pending_.erase(it);
  }
  drain(arrival_us, out);
  return out;
}

std::vector<FrameEnvelope> JitterBuffer::poll(std::int64_t now_us) {
  std::vector<FrameEnvelope> out;
  drain(now_us, out);
  return out;
}

std::optional<std::int64_t> JitterBuffer::next_deadline_us() const {
  if (pending_.empty()) return std::nullopt;
  return pending_.begin()->second.first_arrival_us + config_.target_delay_ms * 1000;
}

void JitterBuffer::finalize(std::uint32_t frame_id) {
  pending_.erase(frame_id);
  next_expected_ = static_cast<std::int64_t>(frame_id) + 1;
}

void JitterBuffer::drain(std::int64_t now_us, std::vector<FrameEnvelope>& out) {
  while (!pending_.empty()) {
    auto head = pending_.begin();
    const std::uint32_t id = head->first;
    const Pending& held = head->second;
    const bool in_order = next_expected_ && static_cast<std::int64_t>(id) == *next_expected_;
    const bool expired = now_us >= held.first_arrival_us + config_.target_delay_ms * 1000;
    const bool forced = pending_.rbegin()->first - id >= config_.reorder_window;

    if (held.assembler.complete()) {
      // A complete frame behind a gap waits for its own deadline so a missing
      // predecessor still has a chance to arrive.
      if (!in_order && !expired && !forced) return;
      try {
        out.push_back(held.assembler.assemble());
        ++stats_.frames_released;
      } catch (const protocol::ProtocolError&) {
        ++stats_.frames_dropped;
      }
      finalize(id);
    } else {
      if (!expired && !forced) return;
      ++stats_.frames_dropped;
      finalize(id);
    }
  }
}

}  // namespace vlmedge::transport
