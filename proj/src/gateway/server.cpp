#include "vlmedge/gateway/server.hpp"

#include <future>

#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/system/system_error.hpp>

#include "vlmedge/transport/errors.hpp"

namespace vlmedge::gateway {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;
using protocol::DataMessage;
using protocol::MessageType;

struct GatewayServer::Link {
  std::string session_id;
  std::string robot_peer;
  std::uint16_t stream_id = 0;
  std::mutex mutex;
  std::shared_ptr<transport::MessageStream> data;

  void send(const DataMessage& message) {
    std::shared_ptr<transport::MessageStream> stream;
    {
      std::lock_guard lock(mutex);
      stream = data;
    }
    if (!stream) return;
    try {
      stream->send(message);
    } catch (const transport::TransportError&) {
      // The robot went away; teardown happens through signaling.
    }
  }
};

GatewayServer::GatewayServer(GatewayServerConfig config, const backends::ProfileRegistry& registry,
                             BackendFactoryOptions backend_options, const Clock& clock)
    : config_(std::move(config)),
      registry_(registry),
      backend_options_(std::move(backend_options)),
      clock_(clock),
      gateway_(config_.gateway, clock) {
  // Fail fast on a bad profile rather than at the first offer.
  make_backend();
}

GatewayServer::~GatewayServer() { stop(); }

BackendHandle GatewayServer::make_backend() const {
  return select_backend(registry_, config_.deployment, config_.profile, backend_options_);
}

std::uint16_t GatewayServer::http_port() const { return http_ ? http_->port() : 0; }

std::size_t GatewayServer::active_links() const {
  std::lock_guard lock(mutex_);
  return links_.size();
}

void GatewayServer::bind_ports() {
  constexpr int kAttempts = 20;
  for (int attempt = 0;; ++attempt) {
    auto receiver = std::make_unique<transport::MediaReceiver>(io_.context(), config_.bind_address,
                                                               config_.media_port, clock_, config_.jitter);
    auto acceptor = std::make_unique<tcp::acceptor>(asio::make_strand(io_.context()));
    try {
      const tcp::endpoint endpoint(asio::ip::make_address(config_.bind_address), receiver->port());
      acceptor->open(endpoint.protocol());
      acceptor->set_option(tcp::acceptor::reuse_address(true));
      acceptor->bind(endpoint);
      acceptor->listen();
    } catch (const boost::system::system_error&) {
      // An ephemeral UDP port whose TCP twin is taken: try another.
      if (config_.media_port != 0 || attempt + 1 >= kAttempts) throw;
      continue;
    }
    media_port_ = receiver->port();
    receiver_ = std::move(receiver);
    acceptor_ = std::move(acceptor);
    return;
  }
}

void GatewayServer::start() {
  if (running_) return;
  bind_ports();
  receiver_->start();
  asio::post(acceptor_->get_executor(), [this] { accept_next(); });

  if (config_.http_port) {
    HttpFrontendConfig http_config;
    http_config.bind_address = config_.bind_address;
    http_config.port = *config_.http_port;
    http_config.static_dir = config_.static_dir;
    gateway_.open_session(http_config.infer_session, make_backend());
    http_ = std::make_unique<HttpFrontend>(io_.context(), http_config, gateway_);
    http_->start();
  }

  report_timer_ = std::make_unique<asio::steady_timer>(io_.context());
  schedule_reports();

  signaling_ = signaling::SignalingClient::connect(io_.context(), config_.signal_host, config_.signal_port,
                                                   config_.peer_id);
  running_ = true;
  signaling_thread_ = std::thread([this] { signaling_loop(); });
}

void GatewayServer::stop() {
  if (!running_.exchange(false)) return;
  if (signaling_thread_.joinable()) signaling_thread_.join();

  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, link] : links_) ids.push_back(id);
  }
  for (const auto& id : ids) teardown(id);
  if (signaling_) signaling_->close();

  if (http_) http_->stop();
  auto done = std::make_shared<std::promise<void>>();
  auto finished = done->get_future();
  asio::post(acceptor_->get_executor(), [this, done] {
    boost::system::error_code ignored;
    acceptor_->close(ignored);
    report_timer_->cancel();
    done->set_value();
  });
  finished.wait_for(std::chrono::seconds(2));
  receiver_->stop();
  for (const auto& id : gateway_.sessions()) gateway_.close_session(id);
  io_.stop();
}

void GatewayServer::accept_next() {
  acceptor_->async_accept(asio::make_strand(io_.context()), [this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == asio::error::operation_aborted || !acceptor_->is_open()) return;
      return accept_next();
    }
    on_connection(std::make_shared<transport::MessageStream>(std::move(socket)));
    accept_next();
  });
}

void GatewayServer::on_connection(std::shared_ptr<transport::MessageStream> stream) {
  // The link is bound by the first "hello"; it lives with the handler.
  auto bound = std::make_shared<std::shared_ptr<Link>>();
  std::weak_ptr<transport::MessageStream> weak = stream;
  stream->start(
      [this, weak, bound](DataMessage message) {
        if (auto s = weak.lock()) on_data_message(s, *bound, message);
      },
      [bound] {
        if (auto link = *bound) {
          std::lock_guard lock(link->mutex);
          link->data.reset();
        }
      });
}

void GatewayServer::on_data_message(const std::shared_ptr<transport::MessageStream>& stream,
                                    std::shared_ptr<Link>& bound, const DataMessage& message) {
  const json& body = message.body();
  auto reply_error = [&](const std::string& message_text) {
    try {
      stream->send(DataMessage::make(MessageType::Control, {{"op", "error"}, {"message", message_text}}));
    } catch (const transport::TransportError&) {
    }
  };

  if (!bound) {
    if (message.type() != MessageType::Control || body.value("op", "") != "hello") {
      return reply_error("expected hello before other messages");
    }
    const std::string session_id = body.value("session_id", "");
    std::shared_ptr<Link> link;
    {
      std::lock_guard lock(mutex_);
      if (auto it = links_.find(session_id); it != links_.end()) link = it->second;
    }
    if (!link) return reply_error("unknown session '" + session_id + "'");
    {
      std::lock_guard lock(link->mutex);
      link->data = stream;
    }
    bound = link;
    stream->send(DataMessage::make(MessageType::Control,
                                   {{"op", "hello_ack"}, {"session_id", session_id}, {"stream_id", link->stream_id}}));
    return;
  }

  switch (message.type()) {
    case MessageType::Query: {
      std::weak_ptr<Link> weak_link = bound;
      Gateway::AnswerSink sink = [weak_link](const AnswerEnvelope& answer) {
        if (auto link = weak_link.lock()) link->send(DataMessage(to_json(answer)));
      };
      try {
        QueryEnvelope query = query_from_json(body);
        query.session_id = bound->session_id;
        gateway_.submit(bound->session_id, std::move(query), std::move(sink));
      } catch (const std::exception& e) {
        AnswerEnvelope answer;
        answer.query_id = body.value("query_id", body.value("id", ""));
        answer.backend_id = config_.profile;
        answer.error = AnswerError{"MalformedQuery", e.what()};
        bound->send(DataMessage(to_json(answer)));
      }
      break;
    }
    case MessageType::Control:
      if (body.value("op", "") == "ping") {
        stream->send(DataMessage::make(MessageType::Control, {{"op", "pong"}, {"ts", clock_.now_us()}}));
      }
      break;
    default:
      break;
  }
}

void GatewayServer::signaling_loop() {
  const auto any = [](const DataMessage&) { return true; };
  while (running_) {
    auto message = signaling_->notifications().wait_for(any, std::chrono::milliseconds(200));
    if (!message) continue;
    const json& body = message->body();
    const std::string op = body.value("op", "");
    try {
      if (op == "offer") {
        handle_offer(body);
      } else if (op == "state") {
        const auto state = signaling::parse_state(body.value("state", ""));
        if (state == signaling::NegotiationState::Closed || state == signaling::NegotiationState::Failed) {
          teardown(body.value("session_id", ""));
        }
      }
    } catch (const std::exception& e) {
      gateway_.publish({{"kind", "session_state"},
                        {"session_id", body.value("session_id", "")},
                        {"state", "error"},
                        {"message", e.what()}});
    }
  }
}

void GatewayServer::handle_offer(const json& message) {
  const std::string session_id = message.at("session_id").get<std::string>();
  const json& offer = message.contains("body") ? message["body"] : json::object();

  auto link = std::make_shared<Link>();
  link->session_id = session_id;
  link->robot_peer = message.value("from", "");
  {
    std::lock_guard lock(mutex_);
    if (links_.count(session_id) != 0) return;
    link->stream_id = next_stream_id_++;
    if (next_stream_id_ == 0xFFFF) next_stream_id_ = 1;
    links_[session_id] = link;
  }

  auto backend = make_backend();
  const std::string backend_id = backend.id();
  gateway_.open_session(session_id, std::move(backend));

  transport::JitterConfig jitter = config_.jitter;
  if (auto it = offer.find("first_frame_id"); it != offer.end() && it->is_number_unsigned()) {
    jitter.first_frame_id = it->get<std::uint32_t>();
  } else {
    jitter.first_frame_id.reset();
  }
  std::weak_ptr<Link> weak = link;
  receiver_->add_stream(
      link->stream_id,
      [this, weak](protocol::FrameEnvelope frame, std::int64_t release_us) {
        auto link = weak.lock();
        if (!link) return;
        const auto frame_id = frame.frame_id;
        const auto capture_ts = frame.capture_ts_us;
        gateway_.on_frame(link->session_id, std::move(frame), release_us);
        link->send(DataMessage::make(MessageType::Telemetry, {{"kind", "frame_ack"},
                                                              {"session_id", link->session_id},
                                                              {"frame_id", frame_id},
                                                              {"capture_ts", capture_ts},
                                                              {"received_ts", release_us}}));
      },
      jitter);

  signaling_->answer(session_id, {{"media_port", media_port_},
                                  {"data_port", media_port_},
                                  {"stream_id", link->stream_id},
                                  {"peer", config_.peer_id},
                                  {"backend", backend_id}});
  signaling_->add_candidate(session_id, {config_.bind_address, media_port_, config_.candidate_priority});
  gateway_.publish({{"kind", "session_state"},
                    {"session_id", session_id},
                    {"state", "answered"},
                    {"robot", link->robot_peer}});
}

void GatewayServer::teardown(const std::string& session_id) {
  std::shared_ptr<Link> link;
  {
    std::lock_guard lock(mutex_);
    auto it = links_.find(session_id);
    if (it == links_.end()) return;
    link = it->second;
    links_.erase(it);
  }
  receiver_->remove_stream(link->stream_id);
  // Queued answers still go out before the channel closes.
  gateway_.close_session(session_id);
  std::shared_ptr<transport::MessageStream> data;
  {
    std::lock_guard lock(link->mutex);
    data.swap(link->data);
  }
  if (data) data->close();
}

void GatewayServer::schedule_reports() {
  report_timer_->expires_after(config_.report_interval);
  report_timer_->async_wait([this](boost::system::error_code ec) {
    if (ec) return;
    send_reports();
    schedule_reports();
  });
}

void GatewayServer::send_reports() {
  std::vector<std::shared_ptr<Link>> links;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, link] : links_) links.push_back(link);
  }
  for (const auto& link : links) {
    auto stats = receiver_->stats(link->stream_id);
    if (!stats) continue;
    transport::ReceiverReport report{link->stream_id, stats->highest_frame_id, stats->fragments_received,
                                     stats->jitter.frames_released, stats->jitter.frames_dropped};
    json body = to_json(report);
    body["kind"] = "receiver_report";
    body["session_id"] = link->session_id;
    body["ts"] = clock_.now_us();
    link->send(DataMessage::make(MessageType::Telemetry, body));
    body["kind"] = "telemetry";
    gateway_.publish(std::move(body));
  }
}

}  // namespace vlmedge::gateway
