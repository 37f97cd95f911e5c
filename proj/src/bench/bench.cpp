#include "vlmedge/bench/bench.hpp"

#include <map>

#include "vlmedge/backends/profile.hpp"
#include "vlmedge/bench/spawn.hpp"
#include "vlmedge/dataset/synthetic.hpp"
#include "vlmedge/evaluation/report.hpp"
#include "vlmedge/gateway/server.hpp"
#include "vlmedge/signaling/server.hpp"
#include "vlmedge/transport/io_thread.hpp"

#ifndef VLMEDGE_DEFAULT_PROFILE_DIR
#define VLMEDGE_DEFAULT_PROFILE_DIR "profiles"
#endif

namespace vlmedge::bench {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::filesystem::path profile_dir(const BenchConfig& config) {
  return config.profile_dir.empty() ? std::filesystem::path(VLMEDGE_DEFAULT_PROFILE_DIR) : config.profile_dir;
}

std::string format_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", ms);
  return buf;
}

robot_sim::ReplayResult replay_in_process(const BenchConfig& config, const ProfileEntry& entry,
                                          const backends::ProfileRegistry& registry,
                                          const dataset::DatasetManifest& manifest) {
  transport::IoThread signaling_io;
  signaling::SignalingServerConfig signaling_config;
  signaling_config.port = 0;
  signaling::SignalingServer signaling_server(signaling_io.context(), signaling_config);
  signaling_server.start();

  gateway::GatewayServerConfig gw;
  gw.peer_id = "gw-" + entry.label();
  gw.signal_port = signaling_server.port();
  gw.deployment = entry.deployment;
  gw.profile = entry.profile;
  gw.jitter.target_delay_ms = config.target_delay_ms;
  gw.gateway.time_scale = config.time_scale;
  gw.gateway.backend_timeout = config.backend_timeout;

  gateway::BackendFactoryOptions backend;
  backend.mock = {config.seed, config.time_scale};
  backend.answers = std::make_shared<const dataset::AnswerTable>(dataset::make_answer_table(manifest));
  if (config.remote_endpoint) {
    backends::RemoteOptions remote;
    remote.endpoint_url = *config.remote_endpoint;
    remote.timeout = config.backend_timeout;
    backend.remote = remote;
  }

  gateway::GatewayServer gateway_server(gw, registry, backend);
  gateway_server.start();

  robot_sim::RobotSimConfig robot;
  robot.peer_id = "robot-" + entry.label();
  robot.gateway_peer = gw.peer_id;
  robot.signal_port = signaling_server.port();
  robot.media.fps = config.fps;
  robot.media.bitrate.initial_kbps = config.initial_bitrate_kbps;
  robot.answer_timeout = config.backend_timeout + std::chrono::seconds(30);

  auto result = robot_sim::run_replay({manifest, config.fps, config.schedule}, robot);
  gateway_server.stop();
  signaling_server.stop();
  return result;
}

std::vector<evaluation::Prediction> replay_spawned(const BenchConfig& config, const ProfileEntry& entry,
                                                   const std::filesystem::path& dataset_path,
                                                   const std::filesystem::path& dir, bool& partial) {
  const auto signal_port = std::to_string(pick_free_port());
  const auto media_port = std::to_string(pick_free_port());
  const std::string gw_peer = "gw-" + entry.label();
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };

  auto signal = ChildProcess::spawn(config.executable, {"signal-server", "--signal-port", signal_port},
                                    dir / "signal-server.log");
  std::vector<std::string> gw_args{"gateway",
                                   "--signal-port", signal_port,
                                   "--media-port", media_port,
                                   "--http-port", "-1",
                                   "--peer-id", gw_peer,
                                   "--deployment", std::string(gateway::to_string(entry.deployment)),
                                   "--profile", entry.profile,
                                   "--profile-dir", profile_dir(config).string(),
                                   "--dataset", dataset_path.string(),
                                   "--seed", std::to_string(config.seed),
                                   "--time-scale", fmt(config.time_scale),
                                   "--target-delay-ms", std::to_string(config.target_delay_ms),
                                   "--backend-timeout-ms", std::to_string(config.backend_timeout.count())};
  if (config.remote_endpoint) {
    gw_args.push_back("--remote");
    gw_args.push_back(*config.remote_endpoint);
  }
  auto gateway_process = ChildProcess::spawn(config.executable, gw_args, dir / "gateway.log");

  const auto preds_path = dir / "predictions.jsonl";
  auto robot = ChildProcess::spawn(config.executable,
                                   {"robot-sim",
                                    "--dataset", dataset_path.string(),
                                    "--fps", fmt(config.fps),
                                    "--schedule", config.schedule.to_string(),
                                    "--signal", "127.0.0.1:" + signal_port,
                                    "--gateway-peer", gw_peer,
                                    "--peer-id", "robot-" + entry.label(),
                                    "--initial-bitrate-kbps", fmt(config.initial_bitrate_kbps),
                                    "--connect-timeout-ms", "15000",
                                    "--out", preds_path.string()},
                                   dir / "robot-sim.log");
  const auto status = robot.wait(std::chrono::hours(6));
  gateway_process.terminate();
  signal.terminate();
  if (!status) {
    robot.terminate();
    throw BenchError(BenchErrc::RunFailed, "robot-sim did not finish");
  }
  // robot-sim exits 3 after writing partial results.
  if (*status != 0 && *status != 3) {
    throw BenchError(BenchErrc::RunFailed,
                     "robot-sim exited with status " + std::to_string(*status) + "; see robot-sim.log");
  }
  partial = *status == 3;
  return evaluation::read_predictions(preds_path);
}

void write_reports(const BenchConfig& config, const evaluation::ScoreReport& report, const std::filesystem::path& dir) {
  for (auto format : config.formats) {
    evaluation::emit_report(report, format, dir / ("report." + std::string(evaluation::extension(format))));
  }
}

json run_summary(const RunOutcome& run) {
  json j{{"entry", to_string(run.entry)}, {"dir", run.dir.filename().string()}, {"ok", run.ok()}};
  if (run.partial) j["partial"] = true;
  if (!run.error.empty()) j["error"] = run.error;
  if (run.report) {
    j["accuracy"] = run.report->accuracy;
    j["mean_e2e_ms"] = run.report->latency.mean_ms;
  }
  return j;
}

}  // namespace

bool BenchResult::ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.ok(); });
}

std::pair<dataset::DatasetManifest, std::filesystem::path> prepare_dataset(const BenchConfig& config) {
  const auto source = parse_dataset_source(config.dataset, config.seed);
  try {
    if (source.synthetic) {
      const auto dir = config.output_dir / "dataset";
      auto manifest = dataset::generate_synthetic(*source.synthetic, dir);
      return {manifest, dir / (source.synthetic->name + ".jsonl")};
    }
    return {dataset::load_dataset(source.path), source.path};
  } catch (const dataset::DatasetError& e) {
    throw BenchError(BenchErrc::ConfigError, std::string("dataset: ") + e.what());
  }
}

BenchResult run_benchmark(const BenchConfig& config, const ProgressSink& progress) {
  validate(config);
  auto say = [&](const std::string& message) {
    if (progress) progress(message);
  };

  backends::ProfileRegistry registry;
  try {
    registry.load_directory(profile_dir(config));
  } catch (const backends::BackendError& e) {
    throw BenchError(BenchErrc::ConfigError, e.what());
  }
  for (const auto& entry : config.profiles) {
    if (!registry.contains(entry.profile)) {
      throw BenchError(BenchErrc::ConfigError,
                       "unknown profile '" + entry.profile + "' (looked in " + profile_dir(config).string() + ")");
    }
  }

  std::filesystem::create_directories(config.output_dir);
  BenchResult result;
  std::tie(result.dataset, result.dataset_path) = prepare_dataset(config);
  say("dataset " + result.dataset.name + ": " + std::to_string(result.dataset.items.size()) + " items");

  for (const auto& entry : config.profiles) {
    RunOutcome run;
    run.entry = entry;
    run.dir = config.output_dir / entry.label();
    std::filesystem::create_directories(run.dir);
    say("run " + entry.label());
    try {
      if (config.spawn) {
        run.predictions = replay_spawned(config, entry, result.dataset_path, run.dir, run.partial);
      } else {
        auto replay = replay_in_process(config, entry, registry, result.dataset);
        run.predictions = std::move(replay.predictions);
        run.partial = replay.partial;
        if (replay.partial) run.error = "session lost: " + replay.abort_reason;
        evaluation::write_predictions(run.dir / "predictions.jsonl", run.predictions);
      }
      const auto& profile = registry.get(entry.profile);
      auto outcomes = evaluation::score_predictions(run.predictions, result.dataset, config.score);
      run.report = evaluation::aggregate(
          outcomes, {std::string(gateway::to_string(entry.deployment)), entry.profile, profile.family,
                     result.dataset.name});
      write_reports(config, *run.report, run.dir);
      say("  accuracy " + format_ms(run.report->accuracy * 100) + "%, mean e2e " +
          format_ms(run.report->latency.mean_ms) + " ms, errors " + std::to_string(run.report->n_errors));
    } catch (const std::exception& e) {
      if (run.error.empty()) run.error = e.what();
      say("  failed: " + run.error);
    }
    result.runs.push_back(std::move(run));
  }

  // Pair the first edge and first cloud run of each family.
  std::map<std::string, std::pair<const RunOutcome*, const RunOutcome*>> families;
  for (const auto& run : result.runs) {
    if (!run.report) continue;
    auto& slot = families[run.report->family];
    auto& side = run.entry.deployment == gateway::Deployment::Edge ? slot.first : slot.second;
    if (!side) side = &run;
  }
  for (const auto& [family, pair] : families) {
    if (!pair.first || !pair.second) continue;
    try {
      auto comparison = evaluation::compare_deployments(*pair.first->report, *pair.second->report);
      const auto base = config.output_dir / ("comparison-" + family);
      evaluation::write_text(base.string() + ".json", evaluation::to_json(comparison).dump(2) + "\n");
      evaluation::write_text(base.string() + ".md", evaluation::render_markdown(comparison));
      say("comparison " + family + ": latency reduction " + format_ms(comparison.latency_reduction_pct) + "%");
      result.comparisons.push_back(std::move(comparison));
    } catch (const evaluation::EvaluationError& e) {
      say("comparison " + family + " skipped: " + e.what());
    }
  }

  json runs = json::array();
  for (const auto& run : result.runs) runs.push_back(run_summary(run));
  json manifest{{"config", to_json(config)},
                {"seed", config.seed},
                {"dataset", {{"name", result.dataset.name},
                             {"schema", dataset::to_string(result.dataset.schema)},
                             {"items", result.dataset.items.size()},
                             {"path", result.dataset_path.string()}}},
                {"versions", {{"vlmedge", kVersion}, {"compiler", __VERSION__}}},
                {"runs", runs}};
  evaluation::write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace vlmedge::bench
