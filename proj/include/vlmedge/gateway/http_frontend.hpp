#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>

#include "vlmedge/gateway/gateway.hpp"

namespace vlmedge::gateway {

struct HttpFrontendConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8080;
  /// Session used for POST /v1/infer.
  std::string infer_session = "http";
  /// Served for GET requests outside /v1 when non-empty.
  std::filesystem::path static_dir;
};

/// HTTP listener: POST /v1/infer, GET /healthz, the /v1/bridge WebSocket
/// and optional static files.
///
/// Bridge clients receive every gateway event as a JSON text message and may
/// send {"type":"query", ...}; the query goes to `session_id` if given, else
/// to the most recently opened session that has frames.
class HttpFrontend {
 public:
  HttpFrontend(boost::asio::io_context& io, HttpFrontendConfig config, Gateway& gateway);
  ~HttpFrontend();

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  struct Context;
  class HttpSession;
  class BridgeSession;

  void accept_next();

  boost::asio::io_context& io_;
  std::shared_ptr<Context> ctx_;
  boost::asio::ip::tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  bool running_ = false;
};

}  // namespace vlmedge::gateway
