#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>

#include "vlmedge/common/clock.hpp"
#include "vlmedge/signaling/session_registry.hpp"
#include "vlmedge/transport/message_stream.hpp"

namespace vlmedge::signaling {

struct SignalingServerConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8443;
  std::chrono::milliseconds stale_after = std::chrono::seconds(60);
  std::chrono::milliseconds gc_interval = std::chrono::seconds(5);
};

/// Relay and registry over TCP. Each connection registers one peer id; every
/// request is answered with op "ok" or "error" echoing its req_id, and the
/// registry's notifications are forwarded to the addressed peers.
class SignalingServer {
 public:
  SignalingServer(boost::asio::io_context& io, SignalingServerConfig config,
                  const Clock& clock = steady_clock());
  ~SignalingServer();

  /// Binds and starts accepting. Port 0 picks an ephemeral port.
  void start();
  void stop();

  std::uint16_t port() const { return port_; }
  SessionRegistry& registry() { return registry_; }

 private:
  struct Connection;

  void accept_next();
  void schedule_gc();
  void on_message(const std::shared_ptr<Connection>& conn, const protocol::DataMessage& message);
  void on_closed(const std::shared_ptr<Connection>& conn);
  nlohmann::json dispatch(Connection& conn, const std::string& op, const nlohmann::json& body);
  void deliver(const std::vector<Outbound>& outbound);

  boost::asio::io_context& io_;
  SignalingServerConfig config_;
  SessionRegistry registry_;
  boost::asio::ip::tcp::acceptor acceptor_;
  boost::asio::steady_timer gc_timer_;
  std::uint16_t port_ = 0;

  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<transport::MessageStream>> peers_;
  bool running_ = false;
};

}  // namespace vlmedge::signaling
