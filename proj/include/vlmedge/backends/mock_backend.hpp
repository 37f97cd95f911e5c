#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vlmedge/backends/backend.hpp"
#include "vlmedge/backends/profile.hpp"
#include "vlmedge/dataset/dataset.hpp"

namespace vlmedge::backends {

inline constexpr const char* kNoGoldAnswer = "mock: no gold answer";

struct MockOptions {
  /// Mixed into the profile seed so a benchmark seed changes every draw.
  std::uint64_t run_seed = 0;
  /// Multiplier for the stage sleeps; 0 skips sleeping.
  double time_scale = 1.0;
};

/// The wrong answer the mock gives: the next choice in sorted order for
/// multiple choice, the negation for yes/no, "unknown" otherwise.
std::string wrong_answer(gateway::QType qtype, const std::vector<std::string>& choices, const std::string& gold);

/// Per-item random draws: correctness and stage durations depend only on
/// (profile seed, run seed, item id), never on call order.
struct MockDraw {
  bool correct = false;
  gateway::StageDurations durations;
};
MockDraw draw_for_item(const BackendProfile& profile, std::uint64_t run_seed, const std::string& item_id,
                       const std::optional<std::string>& category, const std::optional<std::string>& schema);

/// Deterministic VLM stand-in calibrated by a BackendProfile.
class MockBackend final : public Backend {
 public:
  MockBackend(BackendProfile profile, std::shared_ptr<const dataset::AnswerTable> answers,
              MockOptions options = {});

  std::string id() const override;
  int input_width() const override { return profile_.input_width; }
  int input_height() const override { return profile_.input_height; }
  InferenceOutput infer(const InferenceInput& input, StageObserver& observer) override;

  const BackendProfile& profile() const { return profile_; }

 private:
  void sleep_us(std::int64_t us) const;

  BackendProfile profile_;
  std::shared_ptr<const dataset::AnswerTable> answers_;
  MockOptions options_;
};

}  // namespace vlmedge::backends
