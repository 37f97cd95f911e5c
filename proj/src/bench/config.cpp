#include "vlmedge/bench/config.hpp"

#include <charconv>

namespace vlmedge::bench {

using nlohmann::json;

std::string_view to_string(BenchErrc code) {
  switch (code) {
    case BenchErrc::ConfigError: return "ConfigError";
    case BenchErrc::RunFailed: return "RunFailed";
  }
  return "Unknown";
}

std::string ProfileEntry::label() const { return std::string(gateway::to_string(deployment)) + "-" + profile; }

ProfileEntry parse_profile_entry(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw BenchError(BenchErrc::ConfigError,
                     "profile entry '" + std::string(text) + "' must look like <edge|cloud>:<profile>");
  }
  auto deployment = gateway::parse_deployment(text.substr(0, colon));
  if (!deployment) {
    throw BenchError(BenchErrc::ConfigError, "unknown deployment in '" + std::string(text) + "'");
  }
  return {*deployment, std::string(text.substr(colon + 1))};
}

std::string to_string(const ProfileEntry& entry) {
  return std::string(gateway::to_string(entry.deployment)) + ":" + entry.profile;
}

DatasetSource parse_dataset_source(std::string_view text, std::uint64_t seed) {
  DatasetSource source;
  if (!text.starts_with("synthetic:")) {
    if (text.empty()) throw BenchError(BenchErrc::ConfigError, "dataset is required");
    source.path = std::string(text);
    return source;
  }
  const auto rest = text.substr(10);
  const auto colon = rest.find(':');
  auto schema = dataset::parse_schema(rest.substr(0, colon));
  std::size_t count = 200;
  bool count_ok = true;
  if (colon != std::string_view::npos) {
    const auto digits = rest.substr(colon + 1);
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
    count_ok = ec == std::errc() && end == digits.data() + digits.size() && count > 0;
  }
  if (!schema || !count_ok) {
    throw BenchError(BenchErrc::ConfigError,
                     "synthetic dataset '" + std::string(text) + "' must look like synthetic:<schema>:<count>");
  }
  dataset::SyntheticOptions options;
  options.name = "synthetic-" + std::string(dataset::to_string(*schema));
  options.schema = *schema;
  options.count = count;
  options.seed = seed;
  source.synthetic = options;
  return source;
}

void validate(const BenchConfig& config) {
  auto fail = [](const std::string& message) { throw BenchError(BenchErrc::ConfigError, message); };
  if (config.profiles.empty()) fail("at least one profile entry is required");
  if (!(config.fps > 0)) fail("fps must be positive");
  if (config.time_scale < 0) fail("time scale must not be negative");
  if (config.formats.empty()) fail("at least one report format is required");
  if (config.target_delay_ms < 0) fail("target delay must not be negative");
  if (!(config.initial_bitrate_kbps > 0)) fail("initial bitrate must be positive");
  if (config.backend_timeout.count() <= 0) fail("backend timeout must be positive");
  if (config.output_dir.empty()) fail("output directory is required");
  std::vector<std::string> labels;
  for (const auto& entry : config.profiles) {
    if (entry.profile.empty()) fail("empty profile name");
    if (std::find(labels.begin(), labels.end(), entry.label()) != labels.end()) {
      fail("profile entry '" + to_string(entry) + "' is listed twice");
    }
    labels.push_back(entry.label());
  }
  if (config.spawn && config.executable.empty()) fail("spawn mode needs the executable path");
  parse_dataset_source(config.dataset, config.seed);
}

json to_json(const BenchConfig& config) {
  json profiles = json::array();
  for (const auto& entry : config.profiles) profiles.push_back(to_string(entry));
  json formats = json::array();
  for (auto f : config.formats) formats.push_back(evaluation::extension(f));
  json j{{"dataset", config.dataset},
         {"profiles", profiles},
         {"seed", config.seed},
         {"fps", config.fps},
         {"schedule", config.schedule.to_string()},
         {"output_dir", config.output_dir.string()},
         {"formats", formats},
         {"profile_dir", config.profile_dir.string()},
         {"time_scale", config.time_scale},
         {"strict_mc", config.score.strict_mc},
         {"normalize_articles", config.score.normalize.strip_articles},
         {"target_delay_ms", config.target_delay_ms},
         {"initial_bitrate_kbps", config.initial_bitrate_kbps},
         {"backend_timeout_ms", config.backend_timeout.count()},
         {"spawn", config.spawn}};
  if (config.remote_endpoint) j["remote_endpoint"] = *config.remote_endpoint;
  return j;
}

}  // namespace vlmedge::bench
