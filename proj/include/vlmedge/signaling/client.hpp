#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <boost/asio/io_context.hpp>
#include <nlohmann/json.hpp>

#include "vlmedge/signaling/types.hpp"
#include "vlmedge/transport/message_stream.hpp"

namespace vlmedge::signaling {

/// Blocking client for the signaling server. Requests wait for the matching
/// reply; everything else the server pushes lands in notifications().
class SignalingClient {
 public:
  /// Connects and registers `peer_id`. Throws SignalingError{SignalingFailed}
  /// when the server is unreachable, or the server's error on rejection.
  static std::unique_ptr<SignalingClient> connect(boost::asio::io_context& io, const std::string& host,
                                                  std::uint16_t port, const std::string& peer_id,
                                                  std::chrono::milliseconds timeout = std::chrono::seconds(5));
  ~SignalingClient();

  const std::string& peer_id() const { return peer_id_; }

  SessionDescriptor create_session(const std::string& other_peer, const MediaParams& media = {});
  NegotiationState offer(const std::string& session_id, const nlohmann::json& body);
  NegotiationState answer(const std::string& session_id, const nlohmann::json& body);
  NegotiationState add_candidate(const std::string& session_id, const CandidateHint& hint);
  NegotiationState connected(const std::string& session_id);
  NegotiationState close_session(const std::string& session_id);
  /// Server-side view: {"state", "offerer", "candidates"} as seen by this peer.
  nlohmann::json get_session(const std::string& session_id);

  /// Waits for a pushed control message with the given op (and session, if set).
  std::optional<nlohmann::json> wait_notification(const std::string& op,
                                                  std::chrono::milliseconds timeout,
                                                  const std::string& session_id = {});

  transport::MessageInbox& notifications() { return *notifications_; }
  bool is_open() const;
  void close();

  /// Sends an arbitrary request and returns the "ok" reply body.
  nlohmann::json request(nlohmann::json body);

 private:
  SignalingClient(std::shared_ptr<transport::MessageStream> stream, std::string peer_id,
                  std::chrono::milliseconds timeout);

  std::shared_ptr<transport::MessageStream> stream_;
  std::string peer_id_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::uint64_t> next_req_{1};
  std::shared_ptr<transport::MessageInbox> replies_ = std::make_shared<transport::MessageInbox>();
  std::shared_ptr<transport::MessageInbox> notifications_ = std::make_shared<transport::MessageInbox>();
};

}  // namespace vlmedge::signaling
