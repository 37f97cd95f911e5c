#include "vlmedge/backends/latency.hpp"

#include <algorithm>
#include <cmath>

namespace vlmedge::backends {

gateway::StageDurations sample_stage_latencies(const BackendProfile& profile, std::mt19937_64& rng) {
  gateway::StageDurations out;
  std::normal_distribution<double> standard(0.0, 1.0);
  for (std::size_t i = 0; i < gateway::kStageCount; ++i) {
    // Draw even when sigma is 0 so the stream position does not depend on it.
    const double z = standard(rng);
    const double ms = profile.stage_medians_ms[i] * std::exp(profile.stage_sigma[i] * z);
    out[static_cast<gateway::Stage>(i)] = std::max<std::int64_t>(1, std::llround(ms * 1000.0));
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> sample_wan_delay(const WanDelay& wan, std::mt19937_64& rng) {
  if (!wan.enabled()) return {0, 0};
  std::uniform_real_distribution<double> spread(-wan.jitter_ms, wan.jitter_ms);
  const double total_us = std::max(0.0, wan.mean_ms + spread(rng)) * 1000.0;
  const auto up = static_cast<std::int64_t>(std::llround(total_us / 2.0));
  const auto down = std::llround(total_us) - up;
  return {up, down};
}

}  // namespace vlmedge::backends
