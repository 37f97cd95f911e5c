#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "vlmedge/backends/profile.hpp"

namespace vlmedge::backends {

/// Draws lognormal(ln median, sigma) per stage, rounded to microseconds.
/// sigma == 0 returns the medians exactly.
gateway::StageDurations sample_stage_latencies(const BackendProfile& profile, std::mt19937_64& rng);

/// (uplink, downlink) in microseconds. Zero when the delay is disabled.
std::pair<std::int64_t, std::int64_t> sample_wan_delay(const WanDelay& wan, std::mt19937_64& rng);

}  // namespace vlmedge::backends
