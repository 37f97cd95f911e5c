#include "vlmedge/robot_sim/robot_sim.hpp"

#include <charconv>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "vlmedge/common/image.hpp"
#include "vlmedge/signaling/client.hpp"
#include "vlmedge/transport/errors.hpp"
#include "vlmedge/transport/io_thread.hpp"
#include "vlmedge/transport/message_stream.hpp"

namespace vlmedge::robot_sim {

using nlohmann::json;
using protocol::DataMessage;
using protocol::MessageType;
using namespace std::chrono_literals;

std::string_view to_string(RobotErrc code) {
  switch (code) {
    case RobotErrc::InvalidPlan: return "InvalidPlan";
    case RobotErrc::SignalingFailed: return "SignalingFailed";
    case RobotErrc::SessionLost: return "SessionLost";
    case RobotErrc::IoError: return "IoError";
  }
  return "Unknown";
}

QuerySchedule QuerySchedule::parse(std::string_view text) {
  auto number = [&](std::string_view digits) {
    long long value = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || end != digits.data() + digits.size() || value <= 0) {
      throw RobotError(RobotErrc::InvalidPlan, "bad schedule '" + std::string(text) + "'");
    }
    return value;
  };
  QuerySchedule s;
  if (text == "per_frame") return s;
  if (text.starts_with("paced:")) {
    s.kind = Kind::Paced;
    s.interval = std::chrono::milliseconds(number(text.substr(6)));
    return s;
  }
  if (text.starts_with("burst:")) {
    s.kind = Kind::Burst;
    s.burst = static_cast<std::size_t>(number(text.substr(6)));
    return s;
  }
  throw RobotError(RobotErrc::InvalidPlan,
                   "unknown schedule '" + std::string(text) + "' (per_frame, paced:<ms>, burst:<n>)");
}

std::string QuerySchedule::to_string() const {
  switch (kind) {
    case Kind::PerFrame: return "per_frame";
    case Kind::Paced: return "paced:" + std::to_string(interval.count());
    case Kind::Burst: return "burst:" + std::to_string(burst);
  }
  return "per_frame";
}

namespace {

struct Answered {
  std::size_t index = 0;
  gateway::AnswerEnvelope answer;
};

/// Answers arrive on the data-channel thread and land here.
class Collector {
 public:
  explicit Collector(const Clock& clock) : clock_(clock) {}

  void expect(const std::string& query_id, std::size_t index, std::int64_t tx_start_ts) {
    std::lock_guard lock(mutex_);
    pending_[query_id] = {index, tx_start_ts};
  }

  void on_answer(gateway::AnswerEnvelope answer) {
    const std::int64_t now = clock_.now_us();
    std::lock_guard lock(mutex_);
    auto it = pending_.find(answer.query_id);
    if (it == pending_.end()) return;
    auto& t = answer.trace;
    t.tx_start_ts = std::max(t.capture_ts, std::min(it->second.tx_start_ts, t.rx_gateway_ts));
    t.response_received_ts = std::max(now, t.decode_done_ts);
    done_.push_back({it->second.index, std::move(answer)});
    pending_.erase(it);
    cv_.notify_all();
  }

  void mark_lost() {
    std::lock_guard lock(mutex_);
    lost_ = true;
    cv_.notify_all();
  }

  bool lost() const {
    std::lock_guard lock(mutex_);
    return lost_;
  }

  std::size_t pending() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
  }

  /// Waits until nothing is pending, the session drops or `idle` passes
  /// without progress. Returns true when nothing is pending.
  bool wait_drained(std::chrono::milliseconds idle) {
    std::unique_lock lock(mutex_);
    while (!pending_.empty() && !lost_) {
      const auto before = done_.size();
      if (!cv_.wait_for(lock, idle, [&] { return pending_.empty() || lost_ || done_.size() != before; })) break;
    }
    return pending_.empty();
  }

  std::vector<Answered> take_done() {
    std::lock_guard lock(mutex_);
    std::vector<Answered> out(std::make_move_iterator(done_.begin()), std::make_move_iterator(done_.end()));
    done_.clear();
    return out;
  }

  /// Forgets pending queries and returns their item indices.
  std::vector<std::size_t> take_pending() {
    std::lock_guard lock(mutex_);
    std::vector<std::size_t> out;
    for (const auto& [id, p] : pending_) out.push_back(p.index);
    pending_.clear();
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Pending {
    std::size_t index = 0;
    std::int64_t tx_start_ts = 0;
  };

  const Clock& clock_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, Pending> pending_;
  std::vector<Answered> done_;
  bool lost_ = false;
};

/// One negotiated session: signaling, the UDP media sender and the TCP data
/// channel.
class Link {
 public:
  Link(transport::IoThread& io, const RobotSimConfig& config, double fps, const Clock& clock,
       std::shared_ptr<Collector> collector)
      : io_(io), config_(config), clock_(clock), collector_(std::move(collector)) {
    negotiate(fps);
  }

  ~Link() { close(); }

  const std::string& session_id() const { return session_id_; }

  std::uint32_t send_frame(protocol::FrameEnvelope frame) {
    frame.frame_id = next_frame_id_++;
    frame.capture_ts_us = static_cast<std::uint64_t>(clock_.now_us());
    try {
      sender_->send_frame(frame);
    } catch (const transport::TransportError& e) {
      if (e.code() != transport::TransportErrc::FrameTooLarge) throw;
    }
    ++frames_sent_;
    return frame.frame_id;
  }

  bool wait_ack(std::uint32_t frame_id, std::chrono::milliseconds timeout) {
    auto ack = acks_->wait_for(
        [&](const DataMessage& m) { return m.body().value("frame_id", 0u) == frame_id; }, timeout);
    return ack.has_value();
  }

  void send(const json& body) { data_->send(DataMessage(body)); }

  /// True once the data channel or the signaling session has dropped.
  bool lost() {
    if (collector_->lost() || !data_->is_open() || !signaling_->is_open()) return true;
    while (auto state = signaling_->wait_notification("state", 0ms, session_id_)) {
      const auto s = signaling::parse_state(state->value("state", ""));
      if (s == signaling::NegotiationState::Failed || s == signaling::NegotiationState::Closed) return true;
    }
    return false;
  }

  std::size_t frames_sent() const { return frames_sent_; }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (signaling_ && signaling_->is_open() && !session_id_.empty()) {
      try {
        signaling_->close_session(session_id_);
      } catch (const std::exception&) {
      }
    }
    if (data_) data_->close();
    if (sender_) sender_->close();
    if (signaling_) signaling_->close();
  }

 private:
  void negotiate(double fps) {
    try {
      signaling::MediaParams media;
      media.mtu_payload = static_cast<std::uint16_t>(config_.media.mtu_payload);
      media.initial_bitrate_kbps = static_cast<std::uint32_t>(config_.media.bitrate.initial_kbps);
      // Components may start together, so the server and the gateway get
      // until the connect timeout to show up.
      const auto deadline = std::chrono::steady_clock::now() + config_.connect_timeout;
      while (true) {
        try {
          if (!signaling_) {
            signaling_ = signaling::SignalingClient::connect(io_.context(), config_.signal_host,
                                                             config_.signal_port, config_.peer_id,
                                                             config_.connect_timeout);
          }
          session_id_ = signaling_->create_session(config_.gateway_peer, media).session_id;
          break;
        } catch (const signaling::SignalingError& e) {
          const bool retryable = e.code() == signaling::SignalingErrc::SignalingFailed ||
                                 e.code() == signaling::SignalingErrc::UnknownPeer ||
                                 e.code() == signaling::SignalingErrc::DuplicatePeer;
          if (!retryable || std::chrono::steady_clock::now() + 100ms >= deadline) throw;
          if (e.code() == signaling::SignalingErrc::SignalingFailed) signaling_.reset();
          std::this_thread::sleep_for(100ms);
        }
      }
      signaling_->offer(session_id_, {{"peer", config_.peer_id}, {"first_frame_id", 1}, {"fps", fps}});
      auto answer = signaling_->wait_notification("answer", config_.connect_timeout, session_id_);
      if (!answer) throw RobotError(RobotErrc::SignalingFailed, "gateway did not answer the offer");
      const json body = answer->value("body", json::object());
      stream_id_ = body.at("stream_id").get<std::uint16_t>();
      const auto data_port = body.at("data_port").get<std::uint16_t>();

      std::vector<signaling::CandidateHint> remote;
      if (auto first = signaling_->wait_notification("candidate", config_.connect_timeout, session_id_)) {
        remote.push_back(first->at("candidate").get<signaling::CandidateHint>());
      }
      while (auto more = signaling_->wait_notification("candidate", 0ms, session_id_)) {
        remote.push_back(more->at("candidate").get<signaling::CandidateHint>());
      }
      if (remote.empty()) throw RobotError(RobotErrc::SignalingFailed, "gateway sent no media candidate");

      const std::vector<signaling::CandidateHint> local{{"127.0.0.1", 0, 100}};
      auto pair = signaling::select_candidate_pair(
          local, remote, [&](const signaling::CandidateHint&, const signaling::CandidateHint& r) {
            auto sender = std::make_unique<transport::MediaSender>(r.address, r.port, stream_id_, config_.media,
                                                                   clock_);
            if (!sender->probe(500ms)) return false;
            sender_ = std::move(sender);
            return true;
          });
      if (!pair) throw RobotError(RobotErrc::SignalingFailed, "no candidate pair answered a media probe");

      data_ = transport::MessageStream::connect(io_.context(), pair->second.address, data_port,
                                                config_.connect_timeout);
      auto acks = acks_;
      auto collector = collector_;
      transport::MediaSender* sender = sender_.get();
      data_->start(
          [acks, collector, sender](DataMessage m) {
            const json& b = m.body();
            if (m.type() == MessageType::Answer) {
              collector->on_answer(gateway::answer_from_json(b));
            } else if (m.type() == MessageType::Telemetry && b.value("kind", "") == "receiver_report") {
              try {
                sender->on_receiver_report(transport::receiver_report_from_json(b));
              } catch (const std::exception&) {
              }
            } else {
              acks->push(std::move(m));
            }
          },
          [collector] { collector->mark_lost(); });
      send({{"type", "control"}, {"op", "hello"}, {"session_id", session_id_}});
      auto ack = acks_->wait_for([](const DataMessage& m) { return m.body().value("op", "") == "hello_ack"; },
                                 config_.connect_timeout);
      if (!ack) throw RobotError(RobotErrc::SignalingFailed, "gateway did not acknowledge the data channel");
      signaling_->connected(session_id_);
    } catch (const signaling::SignalingError& e) {
      close();
      throw RobotError(RobotErrc::SignalingFailed, e.what());
    } catch (const transport::TransportError& e) {
      close();
      throw RobotError(RobotErrc::SignalingFailed, e.what());
    } catch (const json::exception& e) {
      close();
      throw RobotError(RobotErrc::SignalingFailed, std::string("malformed answer: ") + e.what());
    } catch (...) {
      close();
      throw;
    }
  }

  transport::IoThread& io_;
  const RobotSimConfig& config_;
  const Clock& clock_;
  std::shared_ptr<Collector> collector_;
  std::shared_ptr<transport::MessageInbox> acks_ = std::make_shared<transport::MessageInbox>();
  std::unique_ptr<signaling::SignalingClient> signaling_;
  std::unique_ptr<transport::MediaSender> sender_;
  std::shared_ptr<transport::MessageStream> data_;
  std::string session_id_;
  std::uint16_t stream_id_ = 0;
  std::uint32_t next_frame_id_ = 1;
  std::size_t frames_sent_ = 0;
  bool closed_ = false;
};

protocol::FrameEnvelope load_frame(const dataset::DatasetManifest& manifest, const dataset::DatasetItem& item) {
  try {
    return imaging::frame_from_image_bytes(dataset::load_image_bytes(item, manifest.base_dir));
  } catch (const imaging::ImageDecodeError& e) {
    throw RobotError(RobotErrc::IoError, item.id + ": " + e.what());
  } catch (const dataset::DatasetError& e) {
    throw RobotError(RobotErrc::IoError, e.what());
  }
}

evaluation::Prediction error_prediction(const dataset::DatasetItem& item, RobotErrc code, const std::string& message) {
  evaluation::Prediction p;
  p.item_id = item.id;
  p.error = gateway::AnswerError{std::string(to_string(code)), message};
  return p;
}

void validate(const ReplayPlan& plan) {
  if (!(plan.fps > 0)) throw RobotError(RobotErrc::InvalidPlan, "fps must be positive");
  if (plan.manifest.items.empty()) throw RobotError(RobotErrc::InvalidPlan, "dataset has no items");
  if (plan.schedule.kind == QuerySchedule::Kind::Burst && plan.schedule.burst == 0) {
    throw RobotError(RobotErrc::InvalidPlan, "burst size must be positive");
  }
}

}  // namespace

ReplayResult run_replay(const ReplayPlan& plan, const RobotSimConfig& config, const Clock& clock) {
  validate(plan);
  const auto& items = plan.manifest.items;
  const auto period = std::chrono::microseconds(static_cast<std::int64_t>(1e6 / plan.fps));

  transport::IoThread io;
  ReplayResult result;
  std::vector<std::optional<evaluation::Prediction>> outcomes(items.size());
  std::deque<std::size_t> todo;
  for (std::size_t i = 0; i < items.size(); ++i) todo.push_back(i);
  std::map<std::size_t, protocol::FrameEnvelope> frames;
  std::size_t query_seq = 0;
  int retries_left = config.session_retries;

  auto collector = std::make_shared<Collector>(clock);
  auto link = std::make_unique<Link>(io, config, plan.fps, clock, collector);
  result.session_id = link->session_id();

  auto collect = [&] {
    for (auto& done : collector->take_done()) {
      outcomes[done.index] = evaluation::prediction_from_answer(items[done.index].id, done.answer);
    }
  };

  // Returns false when the run has to stop.
  auto recover = [&](const std::string& reason) {
    collect();
    auto unanswered = collector->take_pending();
    for (auto it = unanswered.rbegin(); it != unanswered.rend(); ++it) todo.push_front(*it);
    result.frames_sent += link->frames_sent();
    link.reset();
    if (retries_left-- <= 0) {
      result.partial = true;
      result.abort_reason = reason;
      return false;
    }
    try {
      collector = std::make_shared<Collector>(clock);
      link = std::make_unique<Link>(io, config, plan.fps, clock, collector);
      ++result.reconnects;
      return true;
    } catch (const RobotError& e) {
      result.partial = true;
      result.abort_reason = reason + "; reconnect failed: " + e.what();
      return false;
    }
  };

  auto issue = [&](std::size_t index) {
    const auto& item = items[index];
    auto cached = frames.find(index);
    if (cached == frames.end()) cached = frames.emplace(index, load_frame(plan.manifest, item)).first;
    // A frame lost on the media path is resent a couple of times.
    std::optional<std::uint32_t> acked;
    for (int attempt = 0; attempt < 3 && !acked; ++attempt) {
      const auto frame_id = link->send_frame(cached->second);
      if (link->wait_ack(frame_id, config.frame_ack_timeout)) acked = frame_id;
    }
    if (!acked) {
      outcomes[index] = error_prediction(item, RobotErrc::SessionLost, "gateway never acknowledged the frame");
      return;
    }
    char qid[32];
    std::snprintf(qid, sizeof qid, "q-%06zu", ++query_seq);
    auto query = dataset::make_query(item, plan.manifest.schema, qid);
    query.frame_ref = *acked;
    query.issued_ts_us = clock.now_us();
    collector->expect(qid, index, query.issued_ts_us);
    link->send(gateway::to_json(query));
  };

  std::optional<std::size_t> last_index;
  auto next_tick = std::chrono::steady_clock::now();
  auto next_query = next_tick;
  bool aborted = false;
  while (!aborted && (!todo.empty() || collector->pending() > 0)) {
    if (link->lost()) {
      if (!recover("session lost")) {
        aborted = true;
        break;
      }
      next_tick = next_query = std::chrono::steady_clock::now();
      continue;
    }
    if (todo.empty()) {
      if (collector->wait_drained(config.answer_timeout)) break;
      if (collector->lost()) continue;
      collect();
      for (auto index : collector->take_pending()) {
        outcomes[index] = error_prediction(items[index], RobotErrc::SessionLost, "no answer before timeout");
      }
      break;
    }

    const auto now = std::chrono::steady_clock::now();
    std::size_t to_issue = 0;
    switch (plan.schedule.kind) {
      case QuerySchedule::Kind::PerFrame:
        to_issue = 1;
        break;
      case QuerySchedule::Kind::Paced:
        if (now >= next_query) {
          to_issue = 1;
          next_query += plan.schedule.interval;
          if (next_query < now) next_query = now + plan.schedule.interval;
        }
        break;
      case QuerySchedule::Kind::Burst:
        if (collector->pending() == 0) to_issue = std::min(plan.schedule.burst, todo.size());
        break;
    }
    try {
      if (to_issue == 0) {
        if (last_index) link->send_frame(frames.at(*last_index));
      }
      for (std::size_t k = 0; k < to_issue && !todo.empty(); ++k) {
        const auto index = todo.front();
        todo.pop_front();
        issue(index);
        last_index = index;
      }
    } catch (const transport::TransportError&) {
      continue;  // picked up by lost() on the next pass
    }
    collect();

    next_tick += period;
    const auto after = std::chrono::steady_clock::now();
    if (next_tick < after) {
      next_tick = after;
    } else {
      std::this_thread::sleep_until(next_tick);
    }
  }

  collect();
  if (link) {
    result.frames_sent += link->frames_sent();
    link->close();
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!outcomes[i]) {
      outcomes[i] = error_prediction(items[i], RobotErrc::SessionLost,
                                     result.abort_reason.empty() ? "not answered" : result.abort_reason);
    }
    result.predictions.push_back(std::move(*outcomes[i]));
  }
  return result;
}

StreamResult stream_only(const dataset::DatasetManifest& manifest, double fps, std::chrono::milliseconds duration,
                         const RobotSimConfig& config, const Clock& clock) {
  if (!(fps > 0)) throw RobotError(RobotErrc::InvalidPlan, "fps must be positive");
  if (manifest.items.empty()) throw RobotError(RobotErrc::InvalidPlan, "dataset has no items");
  std::vector<protocol::FrameEnvelope> frames;
  for (const auto& item : manifest.items) frames.push_back(load_frame(manifest, item));

  transport::IoThread io;
  auto collector = std::make_shared<Collector>(clock);
  Link link(io, config, fps, clock, collector);
  StreamResult result;
  result.session_id = link.session_id();

  const auto period = std::chrono::microseconds(static_cast<std::int64_t>(1e6 / fps));
  const auto count = static_cast<std::size_t>(std::chrono::duration<double>(duration).count() * fps + 0.5);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::uint32_t> sent;
  for (std::size_t i = 0; i < count; ++i) {
    std::this_thread::sleep_until(start + i * period);
    sent.push_back(link.send_frame(frames[i % frames.size()]));
  }
  for (auto id : sent) {
    if (link.wait_ack(id, 500ms)) ++result.frames_acked;
  }
  result.frames_sent = link.frames_sent();
  link.close();
  return result;
}

}  // namespace vlmedge::robot_sim
