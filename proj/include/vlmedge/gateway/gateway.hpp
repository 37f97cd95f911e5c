#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/clock.hpp"
#include "vlmedge/gateway/envelopes.hpp"
#include "vlmedge/gateway/frame_cache.hpp"
#include "vlmedge/gateway/select_backend.hpp"

namespace vlmedge::gateway {

struct GatewayConfig {
  std::size_t cache_frames = 4;
  std::chrono::milliseconds backend_timeout = std::chrono::seconds(30);
  /// Multiplier for injected WAN sleeps; 0 skips them (sampled values are
  /// still reported).
  double time_scale = 1.0;
  /// Minimum spacing of frame events to bridge observers.
  std::chrono::milliseconds bridge_frame_interval = std::chrono::milliseconds(500);
};

struct SessionStats {
  std::uint64_t frames = 0;
  std::uint64_t queries = 0;
  std::uint64_t answers = 0;
  std::uint64_t errors = 0;
};

/// Transport-independent inference service. Each session owns a frame cache
/// and a worker that runs queries strictly one at a time in arrival order.
class Gateway {
 public:
  using AnswerSink = std::function<void(const AnswerEnvelope&)>;
  /// Receives bridge events: {"kind", "ts", "session_id", ...}.
  using EventSink = std::function<void(const nlohmann::json&)>;

  explicit Gateway(GatewayConfig config = {}, const Clock& clock = steady_clock());
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void open_session(const std::string& session_id, BackendHandle backend);
  /// Finishes queued queries, then stops the worker.
  void close_session(const std::string& session_id);
  bool has_session(const std::string& session_id) const;
  std::vector<std::string> sessions() const;

  void on_frame(const std::string& session_id, protocol::FrameEnvelope frame, std::int64_t received_us);

  /// Binds the query to a cached frame now and queues it. The sink runs on
  /// the session worker; failures arrive as answers carrying an error.
  void submit(const std::string& session_id, QueryEnvelope query, AnswerSink sink);

  /// submit() and wait for the answer.
  AnswerEnvelope handle_query(const std::string& session_id, QueryEnvelope query);

  std::shared_ptr<FrameCache> cache(const std::string& session_id) const;
  SessionStats stats(const std::string& session_id) const;

  int add_event_sink(EventSink sink);
  void remove_event_sink(int id);
  /// Sends an event to every sink, stamping "ts" if absent.
  void publish(nlohmann::json event);

  const Clock& clock() const { return clock_; }
  const GatewayConfig& config() const { return config_; }

 private:
  struct Job {
    QueryEnvelope query;
    std::optional<FrameCache::Entry> frame;
    std::optional<AnswerError> rejected;
    AnswerSink sink;
  };

  struct Session {
    std::string id;
    BackendHandle backend;
    std::shared_ptr<FrameCache> cache;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Job> queue;
    bool stopping = false;
    SessionStats stats;
    std::int64_t last_bridge_frame_us = 0;
    bool bridge_frame_sent = false;
    std::thread worker;
  };

  std::shared_ptr<Session> find(const std::string& session_id) const;
  void run_worker(const std::shared_ptr<Session>& session);
  AnswerEnvelope run_job(Session& session, Job& job);

  GatewayConfig config_;
  const Clock& clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex sinks_mutex_;
  std::map<int, EventSink> sinks_;
  int next_sink_ = 1;
};

}  // namespace vlmedge::gateway
