// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is 0 only when all of them pass.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "support/jitter_properties.hpp"
#include "support/loopback.hpp"
#include "support/protocol_fuzz.hpp"
#include "support/scoring_oracle.hpp"
#include "support/signaling_model.hpp"
#include "support/test_support.hpp"
#include "vlmedge/backends/mock_backend.hpp"
#include "vlmedge/bench/bench.hpp"
#include "vlmedge/dataset/synthetic.hpp"
#include "vlmedge/evaluation/predictions.hpp"
#include "vlmedge/evaluation/report.hpp"

namespace {

using namespace vlmedge;
namespace fs = std::filesystem;

// Published reference figures.
constexpr double kEdgeLlamaMeanMs = 1600.03;
constexpr double kCloudLlamaMeanMs = 1685.20;
constexpr double kLlamaRobo2VlmAccuracy = 0.41;
constexpr double kQwenRobo2VlmAccuracy = 0.2802;
constexpr double kQwenRobotCollectedAccuracy = 0.7708;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool within_pct(double value, double target, double pct) { return std::abs(value - target) <= target * pct / 100.0; }

/// The calibration benchmark, run twice for the determinism check.
struct Calibration {
  test::TempDir first;
  test::TempDir second;
  std::optional<bench::BenchResult> a;
  std::optional<bench::BenchResult> b;
  std::string error;

  static bench::BenchConfig config(const fs::path& out) {
    bench::BenchConfig c;
    c.dataset = "synthetic:robo2vlm:200";
    c.profiles = {bench::parse_profile_entry("edge:edge-llama"), bench::parse_profile_entry("cloud:cloud-llama"),
                  bench::parse_profile_entry("edge:edge-qwen")};
    c.seed = 42;
    c.time_scale = 0.1;
    c.profile_dir = test::profile_dir();
    c.output_dir = out;
    return c;
  }

  void run() {
    try {
      a = bench::run_benchmark(config(first.path()));
      b = bench::run_benchmark(config(second.path()));
    } catch (const std::exception& e) {
      error = e.what();
    }
  }

  const evaluation::ScoreReport* report(const std::string& label) const {
    if (!a) return nullptr;
    for (const auto& run : a->runs) {
      if (run.entry.label() == label && run.report) return &*run.report;
    }
    return nullptr;
  }
};

Verdict latency_calibration(const Calibration& cal) {
  const auto* edge = cal.report("edge-edge-llama");
  const auto* cloud = cal.report("cloud-cloud-llama");
  if (!edge || !cloud || cal.a->comparisons.empty()) return {false, "benchmark did not produce both runs: " + cal.error};
  const double expected_reduction = (kCloudLlamaMeanMs - kEdgeLlamaMeanMs) / kCloudLlamaMeanMs * 100.0;
  const double reduction = cal.a->comparisons.front().latency_reduction_pct;
  const bool pass = within_pct(edge->latency.mean_ms, kEdgeLlamaMeanMs, 5) &&
                    within_pct(cloud->latency.mean_ms, kCloudLlamaMeanMs, 5) &&
                    std::abs(reduction - expected_reduction) <= 2.0 && std::abs(expected_reduction - 5.05) < 0.01;
  return {pass, fmt("edge %.2f ms (target %.2f), cloud %.2f ms (target %.2f), reduction %.2f%% (target %.2f%%)",
                    edge->latency.mean_ms, kEdgeLlamaMeanMs, cloud->latency.mean_ms, kCloudLlamaMeanMs, reduction,
                    expected_reduction)};
}

Verdict generation_share(const Calibration& cal) {
  const auto* edge = cal.report("edge-edge-llama");
  if (!edge || !edge->stage_shares.count("generation")) return {false, "no edge-llama stage shares"};
  const double share = edge->stage_shares.at("generation");
  return {share > 0.85, fmt("edge-llama generation share %.4f (needs > 0.85)", share)};
}

Verdict qwen_latency(const Calibration& cal) {
  const auto* qwen = cal.report("edge-edge-qwen");
  const auto* cloud = cal.report("cloud-cloud-llama");
  if (!qwen || !cloud) return {false, "missing qwen or cloud run"};
  const double q = qwen->latency.mean_ms;
  const double c = cloud->latency.mean_ms;
  return {q < 1000.0 && q < 0.5 * c, fmt("edge-qwen %.2f ms, cloud %.2f ms, ratio %.3f", q, c, q / c)};
}

/// Scores the mock's answers for a 1000-item synthetic set offline.
double mock_accuracy(const backends::ProfileRegistry& registry, const std::string& profile, dataset::Schema schema,
                     const fs::path& dir) {
  dataset::SyntheticOptions options;
  options.name = profile + "-" + std::string(dataset::to_string(schema));
  options.schema = schema;
  options.count = 1000;
  options.seed = 42;
  options.image_size = 32;
  const auto manifest = dataset::generate_synthetic(options, dir / options.name);
  auto answers = std::make_shared<const dataset::AnswerTable>(dataset::make_answer_table(manifest));
  backends::MockBackend backend(registry.get(profile), answers, {42, 0});

  struct NullObserver : backends::StageObserver {
    std::int64_t now_us() const override { return 0; }
    void mark(gateway::Stage, std::int64_t) override {}
  } observer;
  protocol::FrameEnvelope frame;
  backends::PreprocessedImage image;
  std::vector<evaluation::Prediction> predictions;
  for (const auto& item : manifest.items) {
    const auto query = dataset::make_query(item, manifest.schema, "q-" + item.id);
    const auto out = backend.infer({frame, image, query}, observer);
    predictions.push_back({item.id, out.text, query.query_id, backend.id(), std::nullopt, std::nullopt, std::nullopt});
  }
  std::size_t correct = 0;
  for (const auto& outcome : evaluation::score_predictions(predictions, manifest)) correct += outcome.correct;
  return static_cast<double>(correct) / static_cast<double>(manifest.items.size());
}

Verdict accuracy_calibration() {
  test::TempDir dir;
  backends::ProfileRegistry registry;
  registry.load_directory(test::profile_dir());
  const double llama = mock_accuracy(registry, "edge-llama", dataset::Schema::Robo2Vlm, dir.path());
  const double qwen = mock_accuracy(registry, "edge-qwen", dataset::Schema::Robo2Vlm, dir.path());
  const double qwen_rc = mock_accuracy(registry, "edge-qwen", dataset::Schema::RobotCollected, dir.path());
  const bool pass = std::abs(llama - kLlamaRobo2VlmAccuracy) <= 0.03 && std::abs(qwen - kQwenRobo2VlmAccuracy) <= 0.03 &&
                    std::abs(qwen_rc - kQwenRobotCollectedAccuracy) <= 0.03;
  return {pass, fmt("edge-llama robo2vlm %.3f (%.4f), edge-qwen robo2vlm %.3f (%.4f), edge-qwen robot_collected "
                    "%.3f (%.4f)",
                    llama, kLlamaRobo2VlmAccuracy, qwen, kQwenRobo2VlmAccuracy, qwen_rc, kQwenRobotCollectedAccuracy)};
}

Verdict scoring_oracle() {
  const auto agreement = test::check_scoring_agreement(200, 42);
  const auto idempotence = test::check_normalize_idempotent(10'000, 42);
  const bool pass = agreement.cases == 200 && agreement.agree == agreement.cases && idempotence.strings == 10'000 &&
                    idempotence.failures.empty();
  return {pass, fmt("agreement %zu/%zu, idempotence failures %zu/%zu", agreement.agree, agreement.cases,
                    idempotence.failures.size(), idempotence.strings)};
}

Verdict protocol_fuzz() {
  const auto media = test::check_media_packet_roundtrip(10'000, 42);
  const auto data = test::check_data_message_roundtrip(10'000, 42);
  const auto frames = test::check_fragment_identity(60, 10u * 1024u * 1024u, 42);
  std::string detail = fmt("media %zu/%zu, data %zu/%zu, frames %zu/%zu up to 10 MB", media.cases - media.failures,
                           media.cases, data.cases - data.failures, data.cases, frames.cases - frames.failures,
                           frames.cases);
  for (const auto* r : {&media, &data, &frames}) {
    if (!r->first_failure.empty()) detail += "; " + r->first_failure;
  }
  return {media.ok() && data.ok() && frames.ok() && media.cases == 10'000 && data.cases == 10'000, detail};
}

Verdict jitter_properties() {
  const auto r = test::check_jitter_properties(1000, 42);
  return {r.ok(), fmt("%zu cases (%zu clean, %zu lossy), %zu failures%s%s", r.cases, r.clean_cases, r.lossy_cases,
                      r.failures, r.first_failure.empty() ? "" : ": ", r.first_failure.c_str())};
}

Verdict signaling_model() {
  const auto model = test::check_registry_against_model(6);
  const auto forward = test::run_glare("alpha", "beta");
  const auto swapped = test::run_glare("beta", "alpha");
  const bool glare_ok = forward.offerer == swapped.offerer && forward.answerer == swapped.answerer &&
                        forward.state == swapped.state && forward.loser_answer_ok && swapped.loser_answer_ok;
  return {model.ok() && glare_ok,
          fmt("%zu sequences, %zu steps, %zu mismatches; glare winner %s/%s", model.sequences, model.steps,
              model.mismatches.size(), forward.offerer.c_str(), swapped.offerer.c_str())};
}

Verdict loopback() {
  try {
    const auto registry = test::registry_with_fixtures(test::profile_dir(), test::fixture_dir() / "profiles");
    const auto manifest = dataset::load_dataset(test::fixture_dir() / "hri20" / "hri20.jsonl");
    test::LoopbackStack stack(registry, "oracle", manifest, 0.01);
    robot_sim::ReplayPlan plan{manifest, 10, robot_sim::QuerySchedule::parse("paced:500")};
    const auto result = robot_sim::run_replay(plan, stack.robot_config());

    std::size_t monotone = 0;
    std::size_t identity = 0;
    for (const auto& p : result.predictions) {
      if (!p.trace) continue;
      monotone += p.trace->monotonic();
      const auto wire = evaluation::to_json(p).at("trace");
      double parts = 0;
      for (const char* key :
           {"d_network_up", "d_preprocess", "d_fusion", "d_generation", "d_text_decode", "d_network_down"}) {
        parts += wire.at(key).get<double>();
      }
      identity += std::abs(parts - wire.at("e2e_ms").get<double>()) <= 1.0;
    }
    const evaluation::RunLabels labels{"edge", "oracle", "llama", manifest.name};
    const auto in_run = evaluation::aggregate(evaluation::score_predictions(result.predictions, manifest), labels);
    test::TempDir dir;
    evaluation::write_predictions(dir / "predictions.jsonl", result.predictions);
    const auto offline = evaluation::aggregate(
        evaluation::score_predictions(evaluation::read_predictions(dir / "predictions.jsonl"), manifest), labels);
    const std::size_t n = result.predictions.size();
    const bool pass = n == 20 && !result.partial && monotone == n && identity == n && in_run.n_correct == 20 &&
                      evaluation::to_json(offline) == evaluation::to_json(in_run);
    return {pass, fmt("%zu items, %zu correct, %zu monotone, %zu sum identities, offline accuracy %.4f vs %.4f", n,
                      in_run.n_correct, monotone, identity, offline.accuracy, in_run.accuracy)};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

Verdict determinism(const Calibration& cal) {
  if (!cal.a || !cal.b) return {false, "benchmark failed: " + cal.error};
  std::size_t files = 0;
  std::size_t identical = 0;
  for (const auto& run : cal.a->runs) {
    for (const char* name : {"report.json", "report.csv", "report.md"}) {
      const auto left = slurp(cal.first / run.entry.label() / name);
      ++files;
      identical += !left.empty() && left == slurp(cal.second / run.entry.label() / name);
    }
  }
  for (const char* name : {"comparison-llama.json", "comparison-llama.md"}) {
    const auto left = slurp(cal.first / name);
    ++files;
    identical += !left.empty() && left == slurp(cal.second / name);
  }
  return {files == 11 && identical == files, fmt("%zu/%zu report files byte-identical", identical, files)};
}

}  // namespace

int main() {
  Calibration calibration;
  calibration.run();

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"latency calibration", [&] { return latency_calibration(calibration); }},
      {"generation share", [&] { return generation_share(calibration); }},
      {"compact model latency", [&] { return qwen_latency(calibration); }},
      {"accuracy calibration", accuracy_calibration},
      {"scoring oracle", scoring_oracle},
      {"protocol fuzz", protocol_fuzz},
      {"jitter properties", jitter_properties},
      {"signaling model", signaling_model},
      {"e2e loopback", loopback},
      {"report determinism", [&] { return determinism(calibration); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %-22s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
