#include "vlmedge/gateway/gateway.hpp"

#include <array>
#include <future>

#include "vlmedge/backends/profile.hpp"
#include "vlmedge/common/base64.hpp"
#include "vlmedge/common/image.hpp"
#include "vlmedge/gateway/preprocess.hpp"

namespace vlmedge::gateway {

using nlohmann::json;

namespace {

class TraceObserver final : public backends::StageObserver {
 public:
  explicit TraceObserver(const Clock& clock) : clock_(clock) {}

  std::int64_t now_us() const override { return clock_.now_us(); }

  void mark(Stage stage, std::int64_t ts_us) override {
    std::lock_guard lock(mutex_);
    marks_[static_cast<std::size_t>(stage)] = ts_us;
  }

  std::array<std::int64_t, kStageCount> marks() const {
    std::lock_guard lock(mutex_);
    return marks_;
  }

 private:
  const Clock& clock_;
  mutable std::mutex mutex_;
  std::array<std::int64_t, kStageCount> marks_{};
};

struct BackendCall {
  std::shared_ptr<backends::Backend> backend;
  std::shared_ptr<const protocol::FrameEnvelope> frame;
  backends::PreprocessedImage image;
  QueryEnvelope query;
  std::int64_t preprocess_elapsed_us = 0;
  std::shared_ptr<TraceObserver> observer;
};

void sleep_scaled(std::int64_t us, double scale) {
  const auto scaled = static_cast<std::int64_t>(static_cast<double>(us) * scale);
  if (scaled > 0) std::this_thread::sleep_for(std::chrono::microseconds(scaled));
}

// Gives every unset stage timestamp the value of its predecessor so partial
// traces of failed queries stay monotone.
void fill_forward(LatencyTrace& t) {
  std::int64_t* chain[] = {&t.capture_ts,         &t.tx_start_ts,        &t.rx_gateway_ts,
                           &t.preprocess_done_ts, &t.fusion_done_ts,     &t.generation_done_ts,
                           &t.decode_done_ts};
  for (std::size_t i = 1; i < std::size(chain); ++i) {
    if (*chain[i] < *chain[i - 1]) *chain[i] = *chain[i - 1];
  }
}

}  // namespace

Gateway::Gateway(GatewayConfig config, const Clock& clock) : config_(config), clock_(clock) {}

Gateway::~Gateway() {
  for (const auto& id : sessions()) close_session(id);
}

void Gateway::open_session(const std::string& session_id, BackendHandle backend) {
  auto session = std::make_shared<Session>();
  session->id = session_id;
  session->backend = std::move(backend);
  session->cache = std::make_shared<FrameCache>(config_.cache_frames);
  {
    std::lock_guard lock(mutex_);
    if (sessions_.count(session_id)) throw std::invalid_argument("session " + session_id + " already open");
    sessions_[session_id] = session;
  }
  session->worker = std::thread([this, session] { run_worker(session); });
  publish({{"kind", "session_state"}, {"session_id", session_id}, {"state", "open"},
           {"backend_id", session->backend.id()}});
}

void Gateway::close_session(const std::string& session_id) {
  std::shared_ptr<Session> session;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return;
    session = it->second;
    sessions_.erase(it);
  }
  {
    std::lock_guard lock(session->mutex);
    session->stopping = true;
  }
  session->cv.notify_all();
  if (session->worker.joinable()) session->worker.join();
  SessionStats stats;
  {
    std::lock_guard lock(session->mutex);
    stats = session->stats;
  }
  publish({{"kind", "session_state"},
           {"session_id", session_id},
           {"state", "closed"},
           {"frames_received", session->cache->frames_received()},
           {"queries", stats.queries},
           {"answers", stats.answers},
           {"errors", stats.errors}});
}

bool Gateway::has_session(const std::string& session_id) const { return find(session_id) != nullptr; }

std::vector<std::string> Gateway::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<Gateway::Session> Gateway::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

void Gateway::on_frame(const std::string& session_id, protocol::FrameEnvelope frame, std::int64_t received_us) {
  auto session = find(session_id);
  if (!session) return;
  bool send_event = false;
  {
    std::lock_guard lock(session->mutex);
    ++session->stats.frames;
    const auto interval_us = std::chrono::duration_cast<std::chrono::microseconds>(config_.bridge_frame_interval).count();
    if (!session->bridge_frame_sent || received_us - session->last_bridge_frame_us >= interval_us) {
      send_event = true;
    }
  }
  bool has_sinks = false;
  {
    std::lock_guard lock(sinks_mutex_);
    has_sinks = !sinks_.empty();
  }
  json event;
  if (send_event && has_sinks) {
    try {
      event = {{"kind", "frame"},
               {"session_id", session_id},
               {"frame_id", frame.frame_id},
               {"capture_ts", frame.capture_ts_us},
               {"frame_jpeg_b64", base64_encode(imaging::frame_as_jpeg(frame, 75))}};
    } catch (const std::exception&) {
      // Undecodable frames are still cached; the pipeline reports the error.
    }
  }
  session->cache->put(std::move(frame), received_us);
  if (!event.is_null()) {
    {
      std::lock_guard lock(session->mutex);
      session->bridge_frame_sent = true;
      session->last_bridge_frame_us = received_us;
    }
    publish(std::move(event));
  }
}

void Gateway::submit(const std::string& session_id, QueryEnvelope query, AnswerSink sink) {
  auto session = find(session_id);
  Job job;
  job.sink = std::move(sink);
  if (!session) {
    AnswerEnvelope a;
    a.query_id = query.query_id;
    a.item_id = query.item_id;
    a.trace.rx_gateway_ts = clock_.now_us();
    fill_forward(a.trace);
    a.error = AnswerError{std::string(to_string(GatewayErrc::BackendUnavailable)),
                          "no open session '" + session_id + "'"};
    if (job.sink) job.sink(a);
    return;
  }
  query.session_id = session_id;
  job.frame = session->cache->resolve(query.frame_ref);
  if (!job.frame) {
    job.rejected = AnswerError{std::string(to_string(GatewayErrc::NoFrameAvailable)),
                               query.frame_ref ? "frame " + std::to_string(*query.frame_ref) + " is not cached"
                                               : "no frame received yet"};
  }
  try {
    validate(query);
  } catch (const GatewayError& e) {
    job.rejected = AnswerError{std::string(to_string(e.code())), e.what()};
  }
  job.query = std::move(query);
  {
    std::lock_guard lock(session->mutex);
    ++session->stats.queries;
    session->queue.push_back(std::move(job));
  }
  session->cv.notify_all();
}

AnswerEnvelope Gateway::handle_query(const std::string& session_id, QueryEnvelope query) {
  auto promise = std::make_shared<std::promise<AnswerEnvelope>>();
  auto future = promise->get_future();
  submit(session_id, std::move(query), [promise](const AnswerEnvelope& a) { promise->set_value(a); });
  return future.get();
}

std::shared_ptr<FrameCache> Gateway::cache(const std::string& session_id) const {
  auto session = find(session_id);
  return session ? session->cache : nullptr;
}

SessionStats Gateway::stats(const std::string& session_id) const {
  auto session = find(session_id);
  if (!session) return {};
  std::lock_guard lock(session->mutex);
  return session->stats;
}

int Gateway::add_event_sink(EventSink sink) {
  std::lock_guard lock(sinks_mutex_);
  const int id = next_sink_++;
  sinks_[id] = std::move(sink);
  return id;
}

void Gateway::remove_event_sink(int id) {
  std::lock_guard lock(sinks_mutex_);
  sinks_.erase(id);
}

void Gateway::publish(json event) {
  if (!event.contains("ts")) event["ts"] = clock_.now_us();
  std::vector<EventSink> sinks;
  {
    std::lock_guard lock(sinks_mutex_);
    for (const auto& [id, sink] : sinks_) sinks.push_back(sink);
  }
  for (const auto& sink : sinks) sink(event);
}

void Gateway::run_worker(const std::shared_ptr<Session>& session) {
  while (true) {
    Job job;
    {
      std::unique_lock lock(session->mutex);
      session->cv.wait(lock, [&] { return session->stopping || !session->queue.empty(); });
      if (session->queue.empty()) return;
      job = std::move(session->queue.front());
      session->queue.pop_front();
    }
    AnswerEnvelope answer = run_job(*session, job);
    {
      std::lock_guard lock(session->mutex);
      ++session->stats.answers;
      if (!answer.ok()) ++session->stats.errors;
    }
    if (job.sink) job.sink(answer);
    publish({{"kind", "answer"}, {"session_id", session->id}, {"answer", to_json(answer)}});
  }
}

AnswerEnvelope Gateway::run_job(Session& session, Job& job) {
  const QueryEnvelope& q = job.query;
  AnswerEnvelope a;
  a.query_id = q.query_id;
  a.item_id = q.item_id;
  a.backend_id = session.backend.id();
  LatencyTrace& t = a.trace;
  if (job.frame) {
    a.frame_id = job.frame->frame->frame_id;
    t.capture_ts = static_cast<std::int64_t>(job.frame->frame->capture_ts_us);
    t.tx_start_ts = t.capture_ts;
  }

  auto fail = [&](std::string_view code, const std::string& message) {
    a.text.clear();
    a.error = AnswerError{std::string(code), message};
    if (t.rx_gateway_ts == 0) t.rx_gateway_ts = clock_.now_us();
    fill_forward(t);
    return a;
  };
  if (job.rejected) return fail(job.rejected->code, job.rejected->message);

  const auto [up_us, down_us] = session.backend.sample_wan(q.item_id.value_or(q.query_id));
  sleep_scaled(up_us, config_.time_scale);
  t.rx_gateway_ts = clock_.now_us();

  auto call = std::make_shared<BackendCall>();
  call->backend = session.backend.backend;
  call->frame = job.frame->frame;
  call->query = q;
  call->observer = std::make_shared<TraceObserver>(clock_);
  try {
    call->image = preprocess_frame(*call->frame, call->backend->input_width(), call->backend->input_height());
  } catch (const GatewayError& e) {
    return fail(to_string(e.code()), e.what());
  }
  call->preprocess_elapsed_us = clock_.now_us() - t.rx_gateway_ts;

  auto promise = std::make_shared<std::promise<backends::InferenceOutput>>();
  auto future = promise->get_future();
  std::thread([call, promise] {
    try {
      backends::InferenceInput input{*call->frame, call->image, call->query, call->preprocess_elapsed_us};
      promise->set_value(call->backend->infer(input, *call->observer));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();

  if (future.wait_for(config_.backend_timeout) != std::future_status::ready) {
    return fail(to_string(GatewayErrc::BackendTimeout),
                "backend did not answer within " + std::to_string(config_.backend_timeout.count()) + " ms");
  }
  backends::InferenceOutput out;
  try {
    out = future.get();
  } catch (const backends::BackendError& e) {
    return fail(backends::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(to_string(GatewayErrc::BackendError), e.what());
  }

  const auto marks = call->observer->marks();
  t.preprocess_done_ts = marks[static_cast<std::size_t>(Stage::Preprocess)];
  t.fusion_done_ts = marks[static_cast<std::size_t>(Stage::Fusion)];
  t.generation_done_ts = marks[static_cast<std::size_t>(Stage::Generation)];
  t.decode_done_ts = marks[static_cast<std::size_t>(Stage::TextDecode)];
  fill_forward(t);
  sleep_scaled(down_us, config_.time_scale);

  a.text = std::move(out.text);
  a.token_count = out.token_count;
  if (out.simulated) a.simulated = SimulatedDurations{up_us, *out.simulated, down_us};
  return a;
}

}  // namespace vlmedge::gateway
