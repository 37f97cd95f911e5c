#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vlmedge/backends/backend.hpp"
#include "vlmedge/backends/mock_backend.hpp"
#include "vlmedge/backends/profile.hpp"
#include "vlmedge/backends/remote_backend.hpp"

namespace vlmedge::gateway {

enum class Deployment { Edge, Cloud };

std::string_view to_string(Deployment deployment);
std::optional<Deployment> parse_deployment(std::string_view text);

/// Used for cloud deployments whose profile has no WAN delay configured.
inline constexpr backends::WanDelay kDefaultWanDelay{85.17, 10.0};

struct BackendHandle {
  std::shared_ptr<backends::Backend> backend;
  Deployment deployment = Deployment::Edge;
  std::string profile_name;
  std::string family;
  backends::WanDelay wan;
  std::uint64_t wan_seed = 0;

  /// Deterministic (uplink, downlink) injection in microseconds for `key`.
  std::pair<std::int64_t, std::int64_t> sample_wan(const std::string& key) const;
  std::string id() const;
};

struct BackendFactoryOptions {
  backends::MockOptions mock;
  std::shared_ptr<const dataset::AnswerTable> answers;
  /// When set, queries go to this HTTP endpoint instead of the mock.
  std::optional<backends::RemoteOptions> remote;
};

/// Edge: the backend as is. Cloud: the same backend plus WAN injection.
/// Throws GatewayError{UnknownProfile}.
BackendHandle select_backend(const backends::ProfileRegistry& registry, Deployment deployment,
                             const std::string& profile_name, const BackendFactoryOptions& options = {});

}  // namespace vlmedge::gateway
