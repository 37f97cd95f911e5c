#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "support/test_support.hpp"
#include "vlmedge/backends/latency.hpp"
#include "vlmedge/backends/mock_backend.hpp"
#include "vlmedge/backends/profile.hpp"
#include "vlmedge/common/rng.hpp"
#include "vlmedge/gateway/select_backend.hpp"

namespace vlmedge::backends {
namespace {

using gateway::QType;
using gateway::Stage;
using nlohmann::json;

const ProfileRegistry& shipped_profiles() {
  static const ProfileRegistry registry = [] {
    ProfileRegistry r;
    r.load_directory(test::profile_dir());
    return r;
  }();
  return registry;
}

BackendErrc error_of(const std::function<void()>& action) {
  try {
    action();
  } catch (const BackendError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a BackendError";
  return BackendErrc::RemoteError;
}

class RecordingObserver : public StageObserver {
 public:
  std::int64_t now_us() const override { return ++clock_; }
  void mark(Stage stage, std::int64_t ts) override { marks.emplace_back(stage, ts); }
  std::vector<std::pair<Stage, std::int64_t>> marks;

 private:
  mutable std::int64_t clock_ = 0;
};

TEST(Profiles, ShippedProfilesLoad) {
  const auto& registry = shipped_profiles();
  EXPECT_EQ(registry.names(), (std::vector<std::string>{"cloud-llama", "edge-llama", "edge-qwen"}));
  const auto& edge = registry.get("edge-llama");
  EXPECT_EQ(edge.family, "llama");
  EXPECT_DOUBLE_EQ(edge.median_total_ms(), 1600.0);
  EXPECT_EQ(edge.input_width, 560);
  EXPECT_FALSE(edge.wan_delay.enabled());
  const auto& cloud = registry.get("cloud-llama");
  EXPECT_DOUBLE_EQ(cloud.wan_delay.mean_ms, 85.17);
  EXPECT_EQ(cloud.stage_medians_ms, edge.stage_medians_ms);
}

TEST(Profiles, AccuracyLookupOrder) {
  const auto& qwen = shipped_profiles().get("edge-qwen");
  EXPECT_DOUBLE_EQ(qwen.accuracy_for(std::nullopt, std::string("robo2vlm")), 0.2802);
  EXPECT_DOUBLE_EQ(qwen.accuracy_for(std::string("gesture_recognition"), std::string("robot_collected")),
                   0.7708);
  EXPECT_DOUBLE_EQ(qwen.accuracy_for(std::nullopt, std::nullopt), 0.2802);
  BackendProfile p = qwen;
  p.accuracy_by_category["gesture_recognition"] = 0.9;
  EXPECT_DOUBLE_EQ(p.accuracy_for(std::string("gesture_recognition"), std::string("robot_collected")), 0.9);
}

TEST(Profiles, JsonRoundTrip) {
  const auto& edge = shipped_profiles().get("edge-qwen");
  const auto back = profile_from_json(to_json(edge));
  EXPECT_EQ(to_json(back), to_json(edge));
}

TEST(Profiles, ValidationRejectsBadValues) {
  const auto base = shipped_profiles().get("edge-llama");
  auto p = base;
  p.stage_medians_ms[1] = 0;
  EXPECT_EQ(error_of([&] { validate(p); }), BackendErrc::InvalidProfile);
  p = base;
  p.default_accuracy = 1.5;
  EXPECT_EQ(error_of([&] { validate(p); }), BackendErrc::InvalidProfile);
  p = base;
  p.stage_sigma[2] = -0.1;
  EXPECT_EQ(error_of([&] { validate(p); }), BackendErrc::InvalidProfile);
  p = base;
  p.name.clear();
  EXPECT_EQ(error_of([&] { validate(p); }), BackendErrc::InvalidProfile);
}

TEST(Profiles, BadFileNamedInError) {
  test::TempDir dir;
  std::ofstream(dir / "broken.json") << "{\"name\": \"x\"";
  ProfileRegistry registry;
  try {
    registry.load_directory(dir.path());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), BackendErrc::InvalidProfile);
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
  EXPECT_EQ(error_of([&] { registry.load_directory(dir / "missing"); }), BackendErrc::InvalidProfile);
  EXPECT_EQ(error_of([&] { (void)registry.get("nope"); }), BackendErrc::UnknownProfile);
}

TEST(Latency, ZeroSigmaReturnsMedians) {
  auto p = shipped_profiles().get("edge-llama");
  p.stage_sigma = {0, 0, 0, 0};
  std::mt19937_64 rng(1);
  const auto d = sample_stage_latencies(p, rng);
  EXPECT_EQ(d, (gateway::StageDurations{24'000, 144'000, 1'392'000, 40'000}));
}

TEST(Latency, SampleMeanMatchesLognormalMean) {
  const auto& p = shipped_profiles().get("edge-llama");
  std::mt19937_64 rng(99);
  const int n = 20000;
  double total = 0;
  for (int i = 0; i < n; ++i) total += static_cast<double>(sample_stage_latencies(p, rng).total_us());
  // E[lognormal(ln m, s)] = m * exp(s^2 / 2).
  const double expected = 1600.0 * 1000.0 * std::exp(0.08 * 0.08 / 2.0);
  EXPECT_NEAR(total / n, expected, expected * 0.003);
}

TEST(Latency, WanDelaySplitsRoundTrip) {
  std::mt19937_64 rng(5);
  EXPECT_EQ(sample_wan_delay({}, rng), std::make_pair(std::int64_t{0}, std::int64_t{0}));
  double total = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const auto [up, down] = sample_wan_delay({85.17, 10.0}, rng);
    EXPECT_GE(up + down, 75'170 - 2);
    EXPECT_LE(up + down, 95'170 + 2);
    EXPECT_LE(std::abs(up - down), 1);
    total += static_cast<double>(up + down);
  }
  EXPECT_NEAR(total / n / 1000.0, 85.17, 0.5);
}

TEST(Mock, WrongAnswers) {
  EXPECT_EQ(wrong_answer(QType::YesNo, {}, "Yes"), "no");
  EXPECT_EQ(wrong_answer(QType::YesNo, {}, "no"), "yes");
  EXPECT_EQ(wrong_answer(QType::MultipleChoice, {"red", "blue", "green"}, "green"), "red");
  EXPECT_EQ(wrong_answer(QType::MultipleChoice, {"red", "blue", "green"}, "red"), "blue");
  EXPECT_EQ(wrong_answer(QType::FreeForm, {}, "cup"), "unknown");
  EXPECT_EQ(wrong_answer(QType::FreeForm, {}, "Unknown"), "none");
}

TEST(Mock, DrawsDependOnlyOnItem) {
  const auto& p = shipped_profiles().get("edge-llama");
  const auto a1 = draw_for_item(p, 42, "item-7", std::nullopt, std::string("robo2vlm"));
  draw_for_item(p, 42, "item-8", std::nullopt, std::string("robo2vlm"));
  const auto a2 = draw_for_item(p, 42, "item-7", std::nullopt, std::string("robo2vlm"));
  EXPECT_EQ(a1.correct, a2.correct);
  EXPECT_EQ(a1.durations, a2.durations);
  const auto other_seed = draw_for_item(p, 43, "item-7", std::nullopt, std::string("robo2vlm"));
  EXPECT_NE(a1.durations, other_seed.durations);
}

TEST(Mock, CorrectnessRateTracksProfile) {
  const auto& p = shipped_profiles().get("edge-qwen");
  int correct = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    correct += draw_for_item(p, 1, "x" + std::to_string(i), std::nullopt, std::string("robot_collected")).correct;
  }
  EXPECT_NEAR(static_cast<double>(correct) / n, 0.7708, 0.025);
}

TEST(Mock, InferMarksStagesAndAnswers) {
  auto p = shipped_profiles().get("edge-llama");
  p.default_accuracy = 1.0;
  p.accuracy_by_schema.clear();
  auto answers = std::make_shared<dataset::AnswerTable>(dataset::AnswerTable{{"it-1", "blue"}});
  MockBackend backend(p, answers, {.run_seed = 1, .time_scale = 0});
  EXPECT_EQ(backend.id(), "mock:edge-llama");

  protocol::FrameEnvelope frame;
  PreprocessedImage image;
  gateway::QueryEnvelope query;
  query.query_id = "q1";
  query.text = "color?";
  query.item_id = "it-1";
  RecordingObserver observer;
  const auto out = backend.infer({frame, image, query}, observer);
  EXPECT_EQ(out.text, "blue");
  EXPECT_EQ(out.token_count, 1);
  ASSERT_TRUE(out.simulated.has_value());
  EXPECT_GT(out.simulated->generation_us, out.simulated->fusion_us);
  ASSERT_EQ(observer.marks.size(), 4u);
  EXPECT_EQ(observer.marks[0].first, Stage::Preprocess);
  EXPECT_EQ(observer.marks[3].first, Stage::TextDecode);
  for (std::size_t i = 1; i < observer.marks.size(); ++i) {
    EXPECT_GT(observer.marks[i].second, observer.marks[i - 1].second);
  }

  query.item_id = "missing";
  EXPECT_EQ(error_of([&] { backend.infer({frame, image, query}, observer); }), BackendErrc::MissingGold);
  query.item_id.reset();
  EXPECT_EQ(backend.infer({frame, image, query}, observer).text, kNoGoldAnswer);
}

TEST(Mock, AlwaysWrongProfileNeverAnswersGold) {
  auto p = shipped_profiles().get("edge-llama");
  p.default_accuracy = 0.0;
  p.accuracy_by_schema.clear();
  auto answers = std::make_shared<dataset::AnswerTable>(dataset::AnswerTable{{"it", "yes"}});
  MockBackend backend(p, answers, {.time_scale = 0});
  protocol::FrameEnvelope frame;
  PreprocessedImage image;
  gateway::QueryEnvelope query;
  query.query_id = "q";
  query.text = "t";
  query.qtype = QType::YesNo;
  query.item_id = "it";
  RecordingObserver observer;
  EXPECT_EQ(backend.infer({frame, image, query}, observer).text, "no");
}

TEST(SelectBackend, CloudAddsDefaultWanDelay) {
  const auto& registry = shipped_profiles();
  const auto edge = gateway::select_backend(registry, gateway::Deployment::Edge, "edge-llama");
  EXPECT_FALSE(edge.wan.enabled());
  EXPECT_EQ(edge.family, "llama");
  const auto cloud = gateway::select_backend(registry, gateway::Deployment::Cloud, "edge-llama");
  EXPECT_DOUBLE_EQ(cloud.wan.mean_ms, gateway::kDefaultWanDelay.mean_ms);
  EXPECT_EQ(cloud.sample_wan("k"), cloud.sample_wan("k"));
  EXPECT_THROW(gateway::select_backend(registry, gateway::Deployment::Edge, "gpt"), gateway::GatewayError);
  EXPECT_EQ(gateway::parse_deployment("cloud"), gateway::Deployment::Cloud);
  EXPECT_FALSE(gateway::parse_deployment("moon").has_value());
}

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "a", 1), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a", 1), derive_seed(1, "a", 2));
  EXPECT_NE(derive_seed(1, "a", 1), derive_seed(1, "b", 1));
  EXPECT_NE(derive_seed(1, "a", 1), derive_seed(2, "a", 1));
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

}  // namespace
}  // namespace vlmedge::backends
