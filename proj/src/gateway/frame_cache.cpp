#include "vlmedge/gateway/frame_cache.hpp"

#include <stdexcept>

namespace vlmedge::gateway {

FrameCache::FrameCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("frame cache capacity must be positive");
}

void FrameCache::put(protocol::FrameEnvelope frame, std::int64_t received_us) {
  auto shared = std::make_shared<const protocol::FrameEnvelope>(std::move(frame));
  std::lock_guard lock(mutex_);
  ++received_;
  entries_.push_back({std::move(shared), received_us});
  while (entries_.size() > capacity_) entries_.pop_front();
}

std::optional<FrameCache::Entry> FrameCache::get(std::uint32_t frame_id) const {
  std::lock_guard lock(mutex_);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->frame->frame_id == frame_id) return *it;
  }
  return std::nullopt;
}

std::optional<FrameCache::Entry> FrameCache::latest() const {
  std::lock_guard lock(mutex_);
  if (entries_.empty()) return std::nullopt;
  return entries_.back();
}

std::optional<FrameCache::Entry> FrameCache::resolve(std::optional<std::uint32_t> frame_id) const {
  return frame_id ? get(*frame_id) : latest();
}

std::size_t FrameCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::uint64_t FrameCache::frames_received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

}  // namespace vlmedge::gateway
