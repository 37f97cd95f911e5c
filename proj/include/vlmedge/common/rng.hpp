#pragma once

#include <cstdint>
#include <string_view>

namespace vlmedge {

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent random stream keyed by (base seed, item key, stream
/// tag). Results depend only on the inputs, so per-item draws do not depend on
/// the order items are processed in.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t stream);

}  // namespace vlmedge
