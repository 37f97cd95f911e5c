#include <signal.h>

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "json_config.hpp"
#include "vlmedge/backends/profile.hpp"
#include "vlmedge/bench/bench.hpp"
#include "vlmedge/dataset/synthetic.hpp"
#include "vlmedge/evaluation/predictions.hpp"
#include "vlmedge/evaluation/report.hpp"
#include "vlmedge/gateway/server.hpp"
#include "vlmedge/robot_sim/robot_sim.hpp"
#include "vlmedge/signaling/server.hpp"
#include "vlmedge/transport/io_thread.hpp"

#ifndef VLMEDGE_DEFAULT_PROFILE_DIR
#define VLMEDGE_DEFAULT_PROFILE_DIR "profiles"
#endif

namespace {

using namespace vlmedge;

constexpr int kUsage = 2;
constexpr int kRuntime = 1;
constexpr int kPartial = 3;

// Blocks SIGINT/SIGTERM in this thread and every thread created after it.
sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_shutdown(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--signal", "expected host:port, got " + address);
  const int port = std::stoi(address.substr(colon + 1));
  if (port <= 0 || port > 65535) throw CLI::ValidationError("--signal", "bad port in " + address);
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::shared_ptr<const dataset::AnswerTable> answers_from(const std::string& dataset_path) {
  if (dataset_path.empty()) return nullptr;
  return std::make_shared<const dataset::AnswerTable>(dataset::make_answer_table(dataset::load_dataset(dataset_path)));
}

struct SignalOptions {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 8443;
  int stale_after_s = 60;
};

int run_signal_server(const SignalOptions& o) {
  const auto signals = block_shutdown_signals();
  transport::IoThread io;
  signaling::SignalingServerConfig config;
  config.bind_address = o.bind;
  config.port = o.port;
  config.stale_after = std::chrono::seconds(o.stale_after_s);
  signaling::SignalingServer server(io.context(), config);
  server.start();
  std::printf("signal-server listening on %s:%u\n", o.bind.c_str(), server.port());
  std::fflush(stdout);
  wait_for_shutdown(signals);
  server.stop();
  return 0;
}

struct GatewayOptions {
  std::string signal_host = "127.0.0.1";
  std::uint16_t signal_port = 8443;
  std::string bind = "127.0.0.1";
  std::uint16_t media_port = 0;
  int http_port = 8080;
  std::string peer_id = "gw1";
  std::string deployment = "edge";
  std::string profile = "edge-llama";
  std::string profile_dir = VLMEDGE_DEFAULT_PROFILE_DIR;
  std::string dataset;
  std::uint64_t seed = 42;
  double time_scale = 1.0;
  std::int64_t target_delay_ms = 50;
  int backend_timeout_ms = 30000;
  std::string remote;
  std::string static_dir;
  std::size_t cache_frames = 4;
};

int run_gateway(const GatewayOptions& o) {
  auto deployment = gateway::parse_deployment(o.deployment);
  if (!deployment) {
    std::fprintf(stderr, "unknown deployment '%s' (edge or cloud)\n", o.deployment.c_str());
    return kUsage;
  }
  backends::ProfileRegistry registry;
  registry.load_directory(o.profile_dir);

  gateway::GatewayServerConfig config;
  config.peer_id = o.peer_id;
  config.signal_host = o.signal_host;
  config.signal_port = o.signal_port;
  config.bind_address = o.bind;
  config.media_port = o.media_port;
  if (o.http_port >= 0) config.http_port = static_cast<std::uint16_t>(o.http_port);
  config.deployment = *deployment;
  config.profile = o.profile;
  config.jitter.target_delay_ms = o.target_delay_ms;
  config.gateway.time_scale = o.time_scale;
  config.gateway.backend_timeout = std::chrono::milliseconds(o.backend_timeout_ms);
  config.gateway.cache_frames = o.cache_frames;
  config.static_dir = o.static_dir;

  gateway::BackendFactoryOptions backend;
  backend.mock = {o.seed, o.time_scale};
  backend.answers = answers_from(o.dataset);
  if (!o.remote.empty()) {
    backends::RemoteOptions remote;
    remote.endpoint_url = o.remote;
    remote.timeout = config.gateway.backend_timeout;
    backend.remote = remote;
  }

  const auto signals = block_shutdown_signals();
  gateway::GatewayServer server(config, registry, backend);
  server.start();
  std::printf("gateway %s (%s %s) media %s:%u", o.peer_id.c_str(), o.deployment.c_str(), o.profile.c_str(),
              o.bind.c_str(), server.media_port());
  if (config.http_port) std::printf(" http %s:%u", o.bind.c_str(), server.http_port());
  std::printf("\n");
  std::fflush(stdout);
  wait_for_shutdown(signals);
  server.stop();
  return 0;
}

struct RobotOptions {
  std::string dataset;
  double fps = 10;
  std::string schedule = "per_frame";
  std::string signal = "127.0.0.1:8443";
  std::string gateway_peer = "gw1";
  std::string peer_id = "robot1";
  std::string out = "predictions.jsonl";
  double initial_bitrate_kbps = 2000;
  int connect_timeout_ms = 5000;
  double stream_only_s = 0;
};

int run_robot(const RobotOptions& o) {
  robot_sim::RobotSimConfig config;
  std::tie(config.signal_host, config.signal_port) = split_address(o.signal);
  config.gateway_peer = o.gateway_peer;
  config.peer_id = o.peer_id;
  config.media.fps = o.fps;
  config.media.bitrate.initial_kbps = o.initial_bitrate_kbps;
  config.connect_timeout = std::chrono::milliseconds(o.connect_timeout_ms);
  const auto manifest = dataset::load_dataset(o.dataset);

  if (o.stream_only_s > 0) {
    auto result = robot_sim::stream_only(manifest, o.fps,
                                         std::chrono::milliseconds(static_cast<std::int64_t>(o.stream_only_s * 1000)),
                                         config);
    std::printf("session %s: %zu frames sent, %zu acknowledged\n", result.session_id.c_str(), result.frames_sent,
                result.frames_acked);
    return 0;
  }

  robot_sim::ReplayPlan plan{manifest, o.fps, robot_sim::QuerySchedule::parse(o.schedule)};
  auto result = robot_sim::run_replay(plan, config);
  evaluation::write_predictions(o.out, result.predictions);
  std::size_t errors = 0;
  for (const auto& p : result.predictions) errors += p.error ? 1 : 0;
  std::printf("session %s: %zu items, %zu errors, %zu frames sent -> %s\n", result.session_id.c_str(),
              result.predictions.size(), errors, result.frames_sent, o.out.c_str());
  if (result.partial) {
    std::fprintf(stderr, "run aborted: %s\n", result.abort_reason.c_str());
    return kPartial;
  }
  return 0;
}

struct BenchOptions {
  std::string dataset = "synthetic:robo2vlm:200";
  std::vector<std::string> profiles;
  std::uint64_t seed = 42;
  double fps = 10;
  std::string schedule = "burst:1";
  std::string out = "bench-out";
  std::vector<std::string> formats{"json", "csv", "md"};
  std::string profile_dir = VLMEDGE_DEFAULT_PROFILE_DIR;
  double time_scale = 1.0;
  bool strict_mc = false;
  bool normalize_articles = false;
  std::int64_t target_delay_ms = 50;
  double initial_bitrate_kbps = 2000;
  std::string remote;
  int backend_timeout_ms = 30000;
  bool spawn = false;
};

int run_bench(const BenchOptions& o) {
  bench::BenchConfig config;
  try {
    config.dataset = o.dataset;
    for (const auto& p : o.profiles) config.profiles.push_back(bench::parse_profile_entry(p));
    config.seed = o.seed;
    config.fps = o.fps;
    config.schedule = robot_sim::QuerySchedule::parse(o.schedule);
    config.output_dir = o.out;
    config.formats.clear();
    for (const auto& f : o.formats) {
      auto format = evaluation::parse_report_format(f);
      if (!format) throw bench::BenchError(bench::BenchErrc::ConfigError, "unknown report format '" + f + "'");
      config.formats.push_back(*format);
    }
    config.profile_dir = o.profile_dir;
    config.time_scale = o.time_scale;
    config.score.strict_mc = o.strict_mc;
    config.score.normalize.strip_articles = o.normalize_articles;
    config.target_delay_ms = o.target_delay_ms;
    config.initial_bitrate_kbps = o.initial_bitrate_kbps;
    if (!o.remote.empty()) config.remote_endpoint = o.remote;
    config.backend_timeout = std::chrono::milliseconds(o.backend_timeout_ms);
    config.spawn = o.spawn;
    if (o.spawn) config.executable = std::filesystem::canonical("/proc/self/exe");
    bench::validate(config);
  } catch (const robot_sim::RobotError& e) {
    std::fprintf(stderr, "ConfigError: %s\n", e.what());
    return kUsage;
  } catch (const bench::BenchError& e) {
    std::fprintf(stderr, "%s: %s\n", std::string(bench::to_string(e.code())).c_str(), e.what());
    return kUsage;
  }

  try {
    auto result = bench::run_benchmark(config, [](const std::string& line) {
      std::printf("%s\n", line.c_str());
      std::fflush(stdout);
    });
    std::printf("%zu reports, %zu comparisons under %s\n",
                static_cast<std::size_t>(std::count_if(result.runs.begin(), result.runs.end(),
                                                       [](const auto& r) { return r.report.has_value(); })),
                result.comparisons.size(), config.output_dir.c_str());
    return result.ok() ? 0 : kRuntime;
  } catch (const bench::BenchError& e) {
    std::fprintf(stderr, "%s: %s\n", std::string(bench::to_string(e.code())).c_str(), e.what());
    return e.code() == bench::BenchErrc::ConfigError ? kUsage : kRuntime;
  }
}

struct ScoreOptions {
  std::string predictions;
  std::string dataset;
  bool strict_mc = false;
  bool normalize_articles = false;
  std::string format = "json";
  std::string out;
  std::string profile_dir = VLMEDGE_DEFAULT_PROFILE_DIR;
};

int run_score(const ScoreOptions& o) {
  auto format = evaluation::parse_report_format(o.format);
  if (!format) {
    std::fprintf(stderr, "unknown format '%s' (json, csv, md)\n", o.format.c_str());
    return kUsage;
  }
  const auto manifest = dataset::load_dataset(o.dataset);
  const auto predictions = evaluation::read_predictions(o.predictions);
  evaluation::ScoreOptions options;
  options.strict_mc = o.strict_mc;
  options.normalize.strip_articles = o.normalize_articles;

  // Labels come from the backend id, "<profile>@<deployment>".
  evaluation::RunLabels labels;
  labels.dataset = manifest.name;
  for (const auto& p : predictions) {
    if (p.backend_id.empty()) continue;
    const auto at = p.backend_id.rfind('@');
    labels.profile = p.backend_id.substr(0, at);
    if (auto colon = labels.profile.find(':'); colon != std::string::npos) labels.profile.erase(0, colon + 1);
    if (at != std::string::npos) labels.deployment = p.backend_id.substr(at + 1);
    break;
  }
  if (!labels.profile.empty()) {
    backends::ProfileRegistry registry;
    try {
      registry.load_directory(o.profile_dir);
      if (registry.contains(labels.profile)) labels.family = registry.get(labels.profile).family;
    } catch (const std::exception&) {
      // The family label is optional.
    }
  }

  const auto report =
      evaluation::aggregate(evaluation::score_predictions(predictions, manifest, options), labels);
  const auto text = evaluation::render(report, *format);
  if (o.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    evaluation::write_text(o.out, text);
  }
  return 0;
}

struct SynthOptions {
  std::string schema = "robo2vlm";
  std::size_t count = 200;
  std::uint64_t seed = 42;
  std::string out = "dataset";
  std::string name;
  int image_size = 96;
  bool inline_images = false;
};

int run_synth(const SynthOptions& o) {
  auto schema = dataset::parse_schema(o.schema);
  if (!schema) {
    std::fprintf(stderr, "unknown schema '%s' (robo2vlm, robot_collected)\n", o.schema.c_str());
    return kUsage;
  }
  dataset::SyntheticOptions options;
  options.schema = *schema;
  options.count = o.count;
  options.seed = o.seed;
  options.image_size = o.image_size;
  options.inline_images = o.inline_images;
  options.name = o.name.empty() ? "synthetic-" + o.schema : o.name;
  const auto manifest = dataset::generate_synthetic(options, o.out);
  std::printf("%zu items -> %s\n", manifest.items.size(),
              (std::filesystem::path(o.out) / (options.name + ".jsonl")).c_str());
  return 0;
}

std::string config_extension(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.starts_with("--config=")) {
      path = std::string(arg.substr(9));
    }
    if (!path.empty()) return std::filesystem::path(path).extension().string();
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge VLM perception pipeline: signaling, gateway, robot simulator and benchmark"};
  app.set_config("--config", "", "TOML or JSON config; [section] names match subcommands");
  if (config_extension(argc, argv) == ".json") app.config_formatter(std::make_shared<cli::JsonConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);

  SignalOptions signal;
  auto* signal_cmd = app.add_subcommand("signal-server", "Run the signaling server");
  signal_cmd->add_option("--signal-port", signal.port, "TCP port")->capture_default_str();
  signal_cmd->add_option("--bind", signal.bind, "Bind address")->capture_default_str();
  signal_cmd->add_option("--stale-after-s", signal.stale_after_s, "Expire stalled negotiations after this long")
      ->capture_default_str();

  GatewayOptions gw;
  auto* gw_cmd = app.add_subcommand("gateway", "Run the inference gateway");
  gw_cmd->add_option("--signal-host", gw.signal_host, "Signaling server host")->capture_default_str();
  gw_cmd->add_option("--signal-port", gw.signal_port, "Signaling server port")->capture_default_str();
  gw_cmd->add_option("--bind", gw.bind, "Address for media, data and HTTP listeners")->capture_default_str();
  gw_cmd->add_option("--media-port", gw.media_port, "UDP media port, also the TCP data port (0 picks one)")
      ->capture_default_str();
  gw_cmd->add_option("--http-port", gw.http_port, "HTTP port for /v1/infer and /v1/bridge (-1 disables)")
      ->capture_default_str();
  gw_cmd->add_option("--peer-id", gw.peer_id, "Signaling peer id")->capture_default_str();
  gw_cmd->add_option("--deployment", gw.deployment, "edge or cloud")->capture_default_str();
  gw_cmd->add_option("--profile", gw.profile, "Backend profile name")->capture_default_str();
  gw_cmd->add_option("--profile-dir", gw.profile_dir, "Directory of profile JSON files")->capture_default_str();
  gw_cmd->add_option("--dataset", gw.dataset, "Dataset whose gold answers drive the mock backend");
  gw_cmd->add_option("--seed", gw.seed, "Run seed mixed into every mock draw")->capture_default_str();
  gw_cmd->add_option("--time-scale", gw.time_scale, "Multiplier for injected delays (0 skips sleeping)")
      ->capture_default_str();
  gw_cmd->add_option("--target-delay-ms", gw.target_delay_ms, "Jitter buffer target delay")->capture_default_str();
  gw_cmd->add_option("--backend-timeout-ms", gw.backend_timeout_ms, "Per-query backend timeout")
      ->capture_default_str();
  gw_cmd->add_option("--remote", gw.remote, "HTTP inference endpoint to use instead of the mock backend");
  gw_cmd->add_option("--static-dir", gw.static_dir, "Serve files from this directory over HTTP");
  gw_cmd->add_option("--cache-frames", gw.cache_frames, "Frames kept per session")->capture_default_str();

  RobotOptions robot;
  auto* robot_cmd = app.add_subcommand("robot-sim", "Replay a dataset as a streaming robot");
  robot_cmd->add_option("--dataset", robot.dataset, "Dataset JSONL")->required();
  robot_cmd->add_option("--fps", robot.fps, "Frame rate")->capture_default_str();
  robot_cmd->add_option("--schedule", robot.schedule, "per_frame, paced:<ms> or burst:<n>")->capture_default_str();
  robot_cmd->add_option("--signal", robot.signal, "Signaling server host:port")->capture_default_str();
  robot_cmd->add_option("--gateway-peer", robot.gateway_peer, "Gateway peer id")->capture_default_str();
  robot_cmd->add_option("--peer-id", robot.peer_id, "This robot's peer id")->capture_default_str();
  robot_cmd->add_option("--out", robot.out, "Predictions JSONL")->capture_default_str();
  robot_cmd->add_option("--initial-bitrate-kbps", robot.initial_bitrate_kbps, "Starting media bitrate")
      ->capture_default_str();
  robot_cmd->add_option("--connect-timeout-ms", robot.connect_timeout_ms, "How long to wait for the gateway")
      ->capture_default_str();
  robot_cmd->add_option("--stream-only", robot.stream_only_s, "Only stream frames for this many seconds");

  BenchOptions bench_options;
  auto* bench_cmd = app.add_subcommand("bench", "Run the edge/cloud benchmark");
  bench_cmd->add_option("--dataset", bench_options.dataset, "Dataset JSONL or synthetic:<schema>:<count>")
      ->capture_default_str();
  bench_cmd->add_option("--profile,--profiles", bench_options.profiles, "Entries like edge:edge-llama (repeatable)");
  bench_cmd->add_option("--seed", bench_options.seed, "Run seed")->capture_default_str();
  bench_cmd->add_option("--fps", bench_options.fps, "Robot frame rate")->capture_default_str();
  bench_cmd->add_option("--schedule", bench_options.schedule, "per_frame, paced:<ms> or burst:<n>")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_options.out, "Output directory")->capture_default_str();
  bench_cmd->add_option("--format,--formats", bench_options.formats, "json, csv, md (repeatable)");
  bench_cmd->add_option("--profile-dir", bench_options.profile_dir, "Directory of profile JSON files")
      ->capture_default_str();
  bench_cmd->add_option("--time-scale", bench_options.time_scale, "Multiplier for injected delays")
      ->capture_default_str();
  bench_cmd->add_flag("--strict-mc", bench_options.strict_mc, "Reject option letters for multiple choice");
  bench_cmd->add_flag("--normalize-articles", bench_options.normalize_articles, "Drop a/an/the before matching");
  bench_cmd->add_option("--target-delay-ms", bench_options.target_delay_ms, "Jitter buffer target delay")
      ->capture_default_str();
  bench_cmd->add_option("--initial-bitrate-kbps", bench_options.initial_bitrate_kbps, "Starting media bitrate")
      ->capture_default_str();
  bench_cmd->add_option("--remote", bench_options.remote, "HTTP inference endpoint instead of the mock backend");
  bench_cmd->add_option("--backend-timeout-ms", bench_options.backend_timeout_ms, "Per-query backend timeout")
      ->capture_default_str();
  bench_cmd->add_flag("--spawn", bench_options.spawn, "Run components as separate processes");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score a predictions file offline");
  score_cmd->add_option("predictions", score.predictions, "Predictions JSONL")->required();
  score_cmd->add_option("--dataset", score.dataset, "Dataset JSONL with gold answers")->required();
  score_cmd->add_flag("--strict-mc", score.strict_mc, "Reject option letters for multiple choice");
  score_cmd->add_flag("--normalize-articles", score.normalize_articles, "Drop a/an/the before matching");
  score_cmd->add_option("--format", score.format, "json, csv or md")->capture_default_str();
  score_cmd->add_option("--out", score.out, "Write the report here instead of stdout");
  score_cmd->add_option("--profile-dir", score.profile_dir, "Used to look up the profile family")
      ->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--schema", synth.schema, "robo2vlm or robot_collected")->capture_default_str();
  synth_cmd->add_option("--count", synth.count, "Number of items")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--name", synth.name, "Dataset name (default synthetic-<schema>)");
  synth_cmd->add_option("--image-size", synth.image_size, "Image side in pixels")->capture_default_str();
  synth_cmd->add_flag("--inline-images", synth.inline_images, "Embed images as base64");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (signal_cmd->parsed()) return run_signal_server(signal);
    if (gw_cmd->parsed()) return run_gateway(gw);
    if (robot_cmd->parsed()) return run_robot(robot);
    if (bench_cmd->parsed()) return run_bench(bench_options);
    if (score_cmd->parsed()) return run_score(score);
    if (synth_cmd->parsed()) return run_synth(synth);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  } catch (const robot_sim::RobotError& e) {
    std::fprintf(stderr, "%s: %s\n", std::string(robot_sim::to_string(e.code())).c_str(), e.what());
    return e.code() == robot_sim::RobotErrc::InvalidPlan ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
