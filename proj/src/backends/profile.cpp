#include "vlmedge/backends/profile.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace vlmedge::backends {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(BackendErrc code) {
  switch (code) {
    case BackendErrc::UnknownProfile: return "UnknownProfile";
    case BackendErrc::InvalidProfile: return "InvalidProfile";
    case BackendErrc::MissingGold: return "MissingGold";
    case BackendErrc::RemoteUnreachable: return "RemoteUnreachable";
    case BackendErrc::RemoteError: return "RemoteError";
    case BackendErrc::Timeout: return "Timeout";
  }
  return "Unknown";
}

namespace {

constexpr std::array<gateway::Stage, gateway::kStageCount> kStages{
    gateway::Stage::Preprocess, gateway::Stage::Fusion, gateway::Stage::Generation,
    gateway::Stage::TextDecode};

[[noreturn]] void invalid(const BackendProfile& p, const std::string& why) {
  throw BackendError(BackendErrc::InvalidProfile, "profile '" + p.name + "': " + why);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

double BackendProfile::median_total_ms() const {
  return std::accumulate(stage_medians_ms.begin(), stage_medians_ms.end(), 0.0);
}

double BackendProfile::accuracy_for(const std::optional<std::string>& category,
                                    const std::optional<std::string>& schema) const {
  if (category) {
    if (auto it = accuracy_by_category.find(*category); it != accuracy_by_category.end()) return it->second;
  }
  if (schema) {
    if (auto it = accuracy_by_schema.find(*schema); it != accuracy_by_schema.end()) return it->second;
  }
  return default_accuracy;
}

void validate(const BackendProfile& p) {
  if (p.name.empty()) throw BackendError(BackendErrc::InvalidProfile, "profile name is empty");
  for (std::size_t i = 0; i < kStages.size(); ++i) {
    const auto stage = std::string(gateway::to_string(kStages[i]));
    if (!(p.stage_medians_ms[i] > 0)) invalid(p, "median for " + stage + " must be > 0");
    if (!(p.stage_sigma[i] >= 0)) invalid(p, "sigma for " + stage + " must be >= 0");
  }
  if (!is_probability(p.default_accuracy)) invalid(p, "default_accuracy must be in [0, 1]");
  for (const auto* table : {&p.accuracy_by_category, &p.accuracy_by_schema}) {
    for (const auto& [key, value] : *table) {
      if (!is_probability(value)) invalid(p, "accuracy for '" + key + "' must be in [0, 1]");
    }
  }
  if (p.wan_delay.mean_ms < 0 || p.wan_delay.jitter_ms < 0) invalid(p, "WAN delay must be >= 0");
  if (p.input_width <= 0 || p.input_height <= 0) invalid(p, "input size must be positive");
  if (p.max_new_tokens <= 0) invalid(p, "max_new_tokens must be positive");
  if (p.family == "llama") {
    const double share = p.stage_medians_ms[2] / p.median_total_ms();
    if (share <= 0.85) invalid(p, "llama-class profiles need a generation share above 0.85");
  }
}

BackendProfile profile_from_json(const json& j) {
  BackendProfile p;
  try {
    p.name = j.at("name").get<std::string>();
    p.family = j.value("family", std::string());
    p.model = j.value("model", std::string());
    const auto& medians = j.at("stage_medians_ms");
    for (std::size_t i = 0; i < kStages.size(); ++i) {
      p.stage_medians_ms[i] = medians.at(std::string(gateway::to_string(kStages[i]))).get<double>();
    }
    if (auto it = j.find("stage_sigma"); it != j.end()) {
      for (std::size_t i = 0; i < kStages.size(); ++i) {
        p.stage_sigma[i] =
            it->is_number() ? it->get<double>() : it->at(std::string(gateway::to_string(kStages[i]))).get<double>();
      }
    }
    if (auto it = j.find("wan_delay_ms"); it != j.end()) {
      p.wan_delay.mean_ms = it->value("mean", 0.0);
      p.wan_delay.jitter_ms = it->value("jitter", 0.0);
    }
    p.accuracy_by_category = j.value("accuracy_by_category", std::map<std::string, double>{});
    p.accuracy_by_schema = j.value("accuracy_by_schema", std::map<std::string, double>{});
    p.default_accuracy = j.at("default_accuracy").get<double>();
    p.seed = j.value("seed", std::uint64_t{0});
    if (auto it = j.find("input_size"); it != j.end()) {
      p.input_width = it->at(0).get<int>();
      p.input_height = it->at(1).get<int>();
    }
    p.max_new_tokens = j.value("max_new_tokens", 50);
  } catch (const json::exception& e) {
    throw BackendError(BackendErrc::InvalidProfile,
                       "profile '" + j.value("name", std::string("?")) + "': " + e.what());
  }
  validate(p);
  return p;
}

json to_json(const BackendProfile& p) {
  json medians = json::object();
  json sigma = json::object();
  for (std::size_t i = 0; i < kStages.size(); ++i) {
    const auto key = std::string(gateway::to_string(kStages[i]));
    medians[key] = p.stage_medians_ms[i];
    sigma[key] = p.stage_sigma[i];
  }
  return {{"name", p.name},
          {"family", p.family},
          {"model", p.model},
          {"stage_medians_ms", medians},
          {"stage_sigma", sigma},
          {"wan_delay_ms", {{"mean", p.wan_delay.mean_ms}, {"jitter", p.wan_delay.jitter_ms}}},
          {"accuracy_by_category", p.accuracy_by_category},
          {"accuracy_by_schema", p.accuracy_by_schema},
          {"default_accuracy", p.default_accuracy},
          {"seed", p.seed},
          {"input_size", {p.input_width, p.input_height}},
          {"max_new_tokens", p.max_new_tokens}};
}

void ProfileRegistry::add(BackendProfile profile) {
  validate(profile);
  auto name = profile.name;
  profiles_[name] = std::move(profile);
}

void ProfileRegistry::load_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw BackendError(BackendErrc::InvalidProfile, "profile directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw BackendError(BackendErrc::InvalidProfile, file.string() + ": " + e.what());
    }
    try {
      add(profile_from_json(j));
    } catch (const BackendError& e) {
      throw BackendError(e.code(), file.string() + ": " + e.what());
    }
  }
}

const BackendProfile& ProfileRegistry::get(const std::string& name) const {
  auto it = profiles_.find(name);
  if (it == profiles_.end()) throw BackendError(BackendErrc::UnknownProfile, "unknown profile '" + name + "'");
  return it->second;
}

std::vector<std::string> ProfileRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : profiles_) out.push_back(name);
  return out;
}

}  // namespace vlmedge::backends
