#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/error.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::backends {

enum class BackendErrc {
  UnknownProfile,
  InvalidProfile,
  MissingGold,
  RemoteUnreachable,
  RemoteError,
  Timeout,
};

std::string_view to_string(BackendErrc code);

using BackendError = CodedError<BackendErrc>;

struct WanDelay {
  /// Mean added round-trip delay; each query's sample is split evenly
  /// between the uplink and the downlink.
  double mean_ms = 0;
  /// Half-width of the uniform spread around the mean.
  double jitter_ms = 0;

  bool enabled() const { return mean_ms > 0 || jitter_ms > 0; }
};

struct BackendProfile {
  std::string name;
  std::string family;
  std::string model;
  /// Indexed by gateway::Stage.
  std::array<double, gateway::kStageCount> stage_medians_ms{};
  std::array<double, gateway::kStageCount> stage_sigma{0.08, 0.08, 0.08, 0.08};
  WanDelay wan_delay;
  std::map<std::string, double> accuracy_by_category;
  std::map<std::string, double> accuracy_by_schema;
  double default_accuracy = 0;
  std::uint64_t seed = 0;
  int input_width = 448;
  int input_height = 448;
  int max_new_tokens = 50;

  double median_total_ms() const;
  /// Category first, then schema, then the default.
  double accuracy_for(const std::optional<std::string>& category,
                      const std::optional<std::string>& schema) const;
};

/// Throws BackendError{InvalidProfile} when an invariant is violated.
void validate(const BackendProfile& profile);

BackendProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendProfile& profile);

/// Read-only after loading; safe to share between sessions.
class ProfileRegistry {
 public:
  void add(BackendProfile profile);
  /// Loads every *.json file in `dir`. Throws InvalidProfile naming the file.
  void load_directory(const std::filesystem::path& dir);
  const BackendProfile& get(const std::string& name) const;
  bool contains(const std::string& name) const { return profiles_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, BackendProfile> profiles_;
};

}  // namespace vlmedge::backends
