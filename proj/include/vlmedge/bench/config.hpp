#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/error.hpp"
#include "vlmedge/dataset/synthetic.hpp"
#include "vlmedge/evaluation/report.hpp"
#include "vlmedge/evaluation/scoring.hpp"
#include "vlmedge/gateway/select_backend.hpp"
#include "vlmedge/robot_sim/robot_sim.hpp"

namespace vlmedge::bench {

enum class BenchErrc { ConfigError, RunFailed };
std::string_view to_string(BenchErrc code);
using BenchError = CodedError<BenchErrc>;

struct ProfileEntry {
  gateway::Deployment deployment = gateway::Deployment::Edge;
  std::string profile;

  /// "<deployment>-<profile>", also the run's output directory name.
  std::string label() const;
  bool operator==(const ProfileEntry&) const = default;
};

/// "edge:edge-llama" or "cloud:cloud-llama". Throws BenchError{ConfigError}.
ProfileEntry parse_profile_entry(std::string_view text);
std::string to_string(const ProfileEntry& entry);

/// A dataset path, or "synthetic:<schema>:<count>" to generate one.
struct DatasetSource {
  std::filesystem::path path;
  std::optional<dataset::SyntheticOptions> synthetic;
};

/// Throws BenchError{ConfigError} for a malformed synthetic spec.
DatasetSource parse_dataset_source(std::string_view text, std::uint64_t seed);

struct BenchConfig {
  std::string dataset = "synthetic:robo2vlm:200";
  std::vector<ProfileEntry> profiles;
  std::uint64_t seed = 42;
  double fps = 10;
  robot_sim::QuerySchedule schedule = robot_sim::QuerySchedule::parse("burst:1");
  std::filesystem::path output_dir = "bench-out";
  std::vector<evaluation::ReportFormat> formats{evaluation::ReportFormat::Json, evaluation::ReportFormat::Csv,
                                               evaluation::ReportFormat::Markdown};
  std::filesystem::path profile_dir;
  /// Scales every injected delay; reports always carry the unscaled values.
  double time_scale = 1.0;
  evaluation::ScoreOptions score;
  std::int64_t target_delay_ms = 50;
  double initial_bitrate_kbps = 2000;
  std::optional<std::string> remote_endpoint;
  std::chrono::milliseconds backend_timeout = std::chrono::seconds(30);
  /// Run each component as a child process of `executable`.
  bool spawn = false;
  std::filesystem::path executable;
};

/// Throws BenchError{ConfigError}.
void validate(const BenchConfig& config);

/// Everything needed to repeat a run; written into the output manifest.
nlohmann::json to_json(const BenchConfig& config);

}  // namespace vlmedge::bench
