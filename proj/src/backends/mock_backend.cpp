#include "vlmedge/backends/mock_backend.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include "vlmedge/backends/latency.hpp"
#include "vlmedge/common/rng.hpp"
#include "vlmedge/evaluation/normalize.hpp"

namespace vlmedge::backends {

namespace {

constexpr std::uint64_t kLatencyStream = 1;
constexpr std::uint64_t kCorrectnessStream = 2;

}  // namespace

std::string wrong_answer(gateway::QType qtype, const std::vector<std::string>& choices, const std::string& gold) {
  switch (qtype) {
    case gateway::QType::MultipleChoice: {
      std::vector<std::string> sorted = choices;
      std::sort(sorted.begin(), sorted.end());
      auto it = std::upper_bound(sorted.begin(), sorted.end(), gold);
      if (it == sorted.end()) it = sorted.begin();
      if (sorted.empty() || *it == gold) return "unknown";
      return *it;
    }
    case gateway::QType::YesNo:
      return evaluation::normalize_answer(gold) == "yes" ? "no" : "yes";
    case gateway::QType::FreeForm:
      break;
  }
  return evaluation::normalize_answer(gold) == "unknown" ? "none" : "unknown";
}

MockDraw draw_for_item(const BackendProfile& profile, std::uint64_t run_seed, const std::string& item_id,
                       const std::optional<std::string>& category, const std::optional<std::string>& schema) {
  const std::uint64_t base = splitmix64(profile.seed) ^ run_seed;
  MockDraw draw;
  std::mt19937_64 latency_rng(derive_seed(base, item_id, kLatencyStream));
  draw.durations = sample_stage_latencies(profile, latency_rng);
  std::mt19937_64 correctness_rng(derive_seed(base, item_id, kCorrectnessStream));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(correctness_rng);
  draw.correct = u < profile.accuracy_for(category, schema);
  return draw;
}

MockBackend::MockBackend(BackendProfile profile, std::shared_ptr<const dataset::AnswerTable> answers,
                         MockOptions options)
    : profile_(std::move(profile)), answers_(std::move(answers)), options_(options) {
  validate(profile_);
  if (!answers_) answers_ = std::make_shared<dataset::AnswerTable>();
}

std::string MockBackend::id() const { return "mock:" + profile_.name; }

void MockBackend::sleep_us(std::int64_t us) const {
  const auto scaled = static_cast<std::int64_t>(static_cast<double>(us) * options_.time_scale);
  if (scaled > 0) std::this_thread::sleep_for(std::chrono::microseconds(scaled));
}

InferenceOutput MockBackend::infer(const InferenceInput& input, StageObserver& observer) {
  const auto& q = input.query;
  const std::string key = q.item_id.value_or(q.query_id);
  const MockDraw draw = draw_for_item(profile_, options_.run_seed, key, q.category, q.schema);

  InferenceOutput out;
  if (q.item_id) {
    auto it = answers_->find(*q.item_id);
    if (it == answers_->end()) {
      throw BackendError(BackendErrc::MissingGold, "no gold answer for item '" + *q.item_id + "'");
    }
    out.text = draw.correct ? it->second : wrong_answer(q.qtype, q.choices, it->second);
  } else {
    out.text = kNoGoldAnswer;
  }

  // Stage 1 already ran in the gateway; pad it up to the sampled duration.
  const auto pad = static_cast<std::int64_t>(static_cast<double>(draw.durations.preprocess_us) *
                                             options_.time_scale) -
                   input.preprocess_elapsed_us;
  if (pad > 0) std::this_thread::sleep_for(std::chrono::microseconds(pad));
  observer.mark_now(gateway::Stage::Preprocess);
  sleep_us(draw.durations.fusion_us);
  observer.mark_now(gateway::Stage::Fusion);
  sleep_us(draw.durations.generation_us);
  observer.mark_now(gateway::Stage::Generation);
  sleep_us(draw.durations.text_decode_us);
  observer.mark_now(gateway::Stage::TextDecode);

  out.token_count = gateway::count_tokens(out.text, profile_.max_new_tokens);
  out.simulated = draw.durations;
  return out;
}

}  // namespace vlmedge::backends
