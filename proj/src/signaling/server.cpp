#include "vlmedge/signaling/server.hpp"

#include <future>

#include <boost/asio/strand.hpp>

namespace vlmedge::signaling {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

struct SignalingServer::Connection {
  std::shared_ptr<transport::MessageStream> stream;
  std::string peer_id;
};

namespace {

json reply_error(const json& req_id, std::string_view code, const std::string& message) {
  return {{"type", "control"}, {"op", "error"}, {"req_id", req_id}, {"code", code}, {"message", message}};
}

void send_quietly(const std::shared_ptr<transport::MessageStream>& stream, json body) {
  try {
    stream->send(protocol::DataMessage(std::move(body)));
  } catch (const std::exception&) {
    // The peer went away; its close handler cleans up.
  }
}

json candidates_json(const SessionSnapshot& snap) {
  json out = json::object();
  for (const auto& [peer, list] : snap.candidates) out[peer] = list;
  return out;
}

}  // namespace

SignalingServer::SignalingServer(asio::io_context& io, SignalingServerConfig config, const Clock& clock)
    : io_(io),
      config_(std::move(config)),
      registry_(clock, config_.stale_after),
      acceptor_(asio::make_strand(io)),
      gc_timer_(acceptor_.get_executor()) {}

SignalingServer::~SignalingServer() { stop(); }

void SignalingServer::start() {
  const tcp::endpoint endpoint(asio::ip::make_address(config_.bind_address), config_.port);
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(endpoint);
  acceptor_.listen();
  port_ = acceptor_.local_endpoint().port();
  {
    std::lock_guard lock(mutex_);
    running_ = true;
  }
  asio::post(acceptor_.get_executor(), [this] {
    accept_next();
    schedule_gc();
  });
}

void SignalingServer::stop() {
  std::map<std::string, std::shared_ptr<transport::MessageStream>> peers;
  {
    std::lock_guard lock(mutex_);
    if (!running_) return;
    running_ = false;
    peers.swap(peers_);
  }
  auto done = std::make_shared<std::promise<void>>();
  auto finished = done->get_future();
  asio::post(acceptor_.get_executor(), [this, done] {
    boost::system::error_code ignored;
    acceptor_.close(ignored);
    gc_timer_.cancel();
    done->set_value();
  });
  if (finished.wait_for(std::chrono::seconds(2)) != std::future_status::ready) {
    boost::system::error_code ignored;
    acceptor_.close(ignored);
    gc_timer_.cancel();
  }
  for (auto& [peer, stream] : peers) stream->close();
}

void SignalingServer::accept_next() {
  acceptor_.async_accept(asio::make_strand(io_), [this](const boost::system::error_code& ec, tcp::socket socket) {
    if (ec) {
      if (ec == asio::error::operation_aborted || !acceptor_.is_open()) return;
      return accept_next();
    }
    auto conn = std::make_shared<Connection>();
    conn->stream = std::make_shared<transport::MessageStream>(std::move(socket));
    std::weak_ptr<Connection> weak = conn;
    conn->stream->start(
        [this, conn](protocol::DataMessage message) { on_message(conn, message); },
        [this, weak] {
          if (auto c = weak.lock()) on_closed(c);
        });
    accept_next();
  });
}

void SignalingServer::schedule_gc() {
  gc_timer_.expires_after(config_.gc_interval);
  gc_timer_.async_wait([this](const boost::system::error_code& ec) {
    if (ec) return;
    deliver(registry_.collect_garbage());
    schedule_gc();
  });
}

void SignalingServer::on_message(const std::shared_ptr<Connection>& conn,
                                 const protocol::DataMessage& message) {
  const json& body = message.body();
  const json req_id = body.contains("req_id") ? body["req_id"] : json(nullptr);
  if (message.type() != protocol::MessageType::Control || !body.contains("op") ||
      !body["op"].is_string()) {
    send_quietly(conn->stream, reply_error(req_id, to_string(SignalingErrc::BadRequest),
                                           "expected a control message with an op"));
    return;
  }
  const std::string op = body["op"].get<std::string>();
  try {
    json reply = dispatch(*conn, op, body);
    reply["type"] = "control";
    reply["op"] = "ok";
    reply["req_id"] = req_id;
    send_quietly(conn->stream, std::move(reply));
  } catch (const SignalingError& e) {
    send_quietly(conn->stream, reply_error(req_id, to_string(e.code()), e.what()));
  } catch (const json::exception& e) {
    send_quietly(conn->stream, reply_error(req_id, to_string(SignalingErrc::BadRequest), e.what()));
  }
}

json SignalingServer::dispatch(Connection& conn, const std::string& op, const json& body) {
  if (op == "register") {
    if (!conn.peer_id.empty()) {
      throw SignalingError(SignalingErrc::BadRequest, "connection already registered as " + conn.peer_id);
    }
    const auto peer = body.at("peer_id").get<std::string>();
    registry_.register_peer(peer);
    conn.peer_id = peer;
    std::lock_guard lock(mutex_);
    peers_[peer] = conn.stream;
    return {{"peer_id", peer}};
  }
  if (conn.peer_id.empty()) throw SignalingError(SignalingErrc::UnknownPeer, "register first");
  const std::string& me = conn.peer_id;

  if (op == "create_session") {
    const auto media = body.value("media_params", MediaParams{});
    auto [descriptor, outbound] = registry_.create_session(me, body.at("peer").get<std::string>(), media);
    deliver(outbound);
    return {{"session", descriptor}};
  }

  const auto session_id = body.at("session_id").get<std::string>();
  Transition t;
  if (op == "offer") {
    t = registry_.submit_offer(session_id, me, body.value("body", json::object()));
  } else if (op == "answer") {
    t = registry_.submit_answer(session_id, me, body.value("body", json::object()));
  } else if (op == "candidate") {
    t = registry_.add_candidate(session_id, me, body.at("candidate").get<CandidateHint>());
  } else if (op == "connected") {
    t = registry_.mark_connected(session_id, me);
  } else if (op == "close") {
    t = registry_.close(session_id, me);
  } else if (op == "get_session") {
    const auto snap = registry_.snapshot(session_id);
    if (snap.descriptor.offer_peer != me && snap.descriptor.answer_peer != me) {
      throw SignalingError(SignalingErrc::WrongPeer, "not a participant of " + session_id);
    }
    json out{{"session", snap.descriptor},
             {"state", to_string(snap.state_for(me))},
             {"candidates", candidates_json(snap)}};
    out["offerer"] = snap.offerer ? json(*snap.offerer) : json(nullptr);
    return out;
  } else {
    throw SignalingError(SignalingErrc::BadRequest, "unknown op '" + op + "'");
  }
  deliver(t.outbound);
  const auto snap = registry_.snapshot(session_id);
  return {{"session_id", session_id}, {"state", to_string(snap.state_for(me))}};
}

void SignalingServer::deliver(const std::vector<Outbound>& outbound) {
  for (const auto& out : outbound) {
    std::shared_ptr<transport::MessageStream> stream;
    {
      std::lock_guard lock(mutex_);
      auto it = peers_.find(out.to_peer);
      if (it == peers_.end()) continue;
      stream = it->second;
    }
    send_quietly(stream, out.body);
  }
}

void SignalingServer::on_closed(const std::shared_ptr<Connection>& conn) {
  if (conn->peer_id.empty()) return;
  {
    std::lock_guard lock(mutex_);
    auto it = peers_.find(conn->peer_id);
    if (it != peers_.end() && it->second == conn->stream) peers_.erase(it);
  }
  deliver(registry_.unregister_peer(conn->peer_id));
}

}  // namespace vlmedge::signaling
