#include "vlmedge/signaling/client.hpp"

#include "vlmedge/transport/errors.hpp"

namespace vlmedge::signaling {

using nlohmann::json;

namespace {

NegotiationState state_of(const json& reply) {
  auto state = parse_state(reply.at("state").get<std::string>());
  if (!state) throw SignalingError(SignalingErrc::SignalingFailed, "server sent an unknown state");
  return *state;
}

}  // namespace

SignalingClient::SignalingClient(std::shared_ptr<transport::MessageStream> stream, std::string peer_id,
                                 std::chrono::milliseconds timeout)
    : stream_(std::move(stream)), peer_id_(std::move(peer_id)), timeout_(timeout) {}

SignalingClient::~SignalingClient() { close(); }

std::unique_ptr<SignalingClient> SignalingClient::connect(boost::asio::io_context& io, const std::string& host,
                                                          std::uint16_t port, const std::string& peer_id,
                                                          std::chrono::milliseconds timeout) {
  std::shared_ptr<transport::MessageStream> stream;
  try {
    stream = transport::MessageStream::connect(io, host, port, timeout);
  } catch (const transport::TransportError& e) {
    throw SignalingError(SignalingErrc::SignalingFailed, std::string("signaling server: ") + e.what());
  }
  std::unique_ptr<SignalingClient> client(new SignalingClient(stream, peer_id, timeout));
  stream->start(
      [replies = client->replies_, notes = client->notifications_](protocol::DataMessage message) {
        const auto& body = message.body();
        const auto op = body.value("op", std::string());
        if ((op == "ok" || op == "error") && body.contains("req_id")) {
          replies->push(std::move(message));
        } else {
          notes->push(std::move(message));
        }
      },
      [replies = client->replies_, notes = client->notifications_] {
        replies->close();
        notes->close();
      });
  client->request({{"op", "register"}, {"peer_id", peer_id}});
  return client;
}

json SignalingClient::request(json body) {
  const std::uint64_t req_id = next_req_++;
  body["type"] = "control";
  body["req_id"] = req_id;
  const std::string op = body.value("op", std::string());
  try {
    stream_->send(protocol::DataMessage(std::move(body)));
  } catch (const transport::TransportError&) {
    throw SignalingError(SignalingErrc::SignalingFailed, "signaling connection closed");
  }
  auto reply = replies_->wait_for(
      [req_id](const protocol::DataMessage& m) {
        const auto& id = m.body()["req_id"];
        return id.is_number_unsigned() && id.get<std::uint64_t>() == req_id;
      },
      timeout_);
  if (!reply) {
    throw SignalingError(SignalingErrc::SignalingFailed,
                         replies_->closed() ? "signaling connection closed"
                                           : "no reply to '" + op + "' request");
  }
  const json& r = reply->body();
  if (r.value("op", std::string()) == "error") {
    const auto code = parse_signaling_errc(r.value("code", std::string()));
    throw SignalingError(code.value_or(SignalingErrc::SignalingFailed), r.value("message", std::string()));
  }
  return r;
}

SessionDescriptor SignalingClient::create_session(const std::string& other_peer, const MediaParams& media) {
  return request({{"op", "create_session"}, {"peer", other_peer}, {"media_params", media}})
      .at("session")
      .get<SessionDescriptor>();
}

NegotiationState SignalingClient::offer(const std::string& session_id, const json& body) {
  return state_of(request({{"op", "offer"}, {"session_id", session_id}, {"body", body}}));
}

NegotiationState SignalingClient::answer(const std::string& session_id, const json& body) {
  return state_of(request({{"op", "answer"}, {"session_id", session_id}, {"body", body}}));
}

NegotiationState SignalingClient::add_candidate(const std::string& session_id, const CandidateHint& hint) {
  return state_of(request({{"op", "candidate"}, {"session_id", session_id}, {"candidate", hint}}));
}

NegotiationState SignalingClient::connected(const std::string& session_id) {
  return state_of(request({{"op", "connected"}, {"session_id", session_id}}));
}

NegotiationState SignalingClient::close_session(const std::string& session_id) {
  return state_of(request({{"op", "close"}, {"session_id", session_id}}));
}

json SignalingClient::get_session(const std::string& session_id) {
  return request({{"op", "get_session"}, {"session_id", session_id}});
}

std::optional<json> SignalingClient::wait_notification(const std::string& op,
                                                       std::chrono::milliseconds timeout,
                                                       const std::string& session_id) {
  auto message = notifications_->wait_for(
      [&](const protocol::DataMessage& m) {
        const auto& b = m.body();
        if (b.value("op", std::string()) != op) return false;
        return session_id.empty() || b.value("session_id", std::string()) == session_id;
      },
      timeout);
  if (!message) return std::nullopt;
  return std::optional<json>(message->body());
}

bool SignalingClient::is_open() const { return stream_ && stream_->is_open(); }

void SignalingClient::close() {
  if (stream_) stream_->close();
}

}  // namespace vlmedge::signaling
