#include "vlmedge/gateway/select_backend.hpp"

#include <random>

#include "vlmedge/backends/latency.hpp"
#include "vlmedge/common/rng.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::gateway {

namespace {

constexpr std::uint64_t kWanStream = 3;

}  // namespace

std::string_view to_string(Deployment deployment) {
  return deployment == Deployment::Cloud ? "cloud" : "edge";
}

std::optional<Deployment> parse_deployment(std::string_view text) {
  if (text == "edge") return Deployment::Edge;
  if (text == "cloud") return Deployment::Cloud;
  return std::nullopt;
}

std::pair<std::int64_t, std::int64_t> BackendHandle::sample_wan(const std::string& key) const {
  if (deployment != Deployment::Cloud) return {0, 0};
  std::mt19937_64 rng(derive_seed(wan_seed, key, kWanStream));
  return backends::sample_wan_delay(wan, rng);
}

std::string BackendHandle::id() const {
  return backend->id() + "@" + std::string(to_string(deployment));
}

BackendHandle select_backend(const backends::ProfileRegistry& registry, Deployment deployment,
                             const std::string& profile_name, const BackendFactoryOptions& options) {
  if (!registry.contains(profile_name)) {
    throw GatewayError(GatewayErrc::UnknownProfile, "unknown profile '" + profile_name + "'");
  }
  const auto& profile = registry.get(profile_name);

  BackendHandle handle;
  handle.deployment = deployment;
  handle.profile_name = profile.name;
  handle.family = profile.family;
  if (options.remote) {
    auto remote = *options.remote;
    remote.input_width = profile.input_width;
    remote.input_height = profile.input_height;
    remote.decode.max_new_tokens = profile.max_new_tokens;
    handle.backend = std::make_shared<backends::RemoteBackend>(remote);
  } else {
    handle.backend = std::make_shared<backends::MockBackend>(profile, options.answers, options.mock);
  }
  if (deployment == Deployment::Cloud) {
    handle.wan = profile.wan_delay.enabled() ? profile.wan_delay : kDefaultWanDelay;
  }
  handle.wan_seed = splitmix64(profile.seed) ^ options.mock.run_seed;
  return handle;
}

}  // namespace vlmedge::gateway
