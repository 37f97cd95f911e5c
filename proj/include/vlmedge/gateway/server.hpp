#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>

#include "vlmedge/backends/profile.hpp"
#include "vlmedge/common/clock.hpp"
#include "vlmedge/gateway/gateway.hpp"
#include "vlmedge/gateway/http_frontend.hpp"
#include "vlmedge/gateway/select_backend.hpp"
#include "vlmedge/signaling/client.hpp"
#include "vlmedge/transport/io_thread.hpp"
#include "vlmedge/transport/media_channel.hpp"
#include "vlmedge/transport/message_stream.hpp"

namespace vlmedge::gateway {

struct GatewayServerConfig {
  std::string peer_id = "gw1";
  std::string signal_host = "127.0.0.1";
  std::uint16_t signal_port = 8443;
  std::string bind_address = "127.0.0.1";
  /// UDP media port; the TCP data channel listens on the same number.
  /// 0 picks a free port.
  std::uint16_t media_port = 0;
  /// HTTP frontend (/v1/infer, /v1/bridge). Disabled when unset; 0 picks a port.
  std::optional<std::uint16_t> http_port;
  Deployment deployment = Deployment::Edge;
  std::string profile = "edge-llama";
  transport::JitterConfig jitter;
  GatewayConfig gateway;
  std::filesystem::path static_dir;
  std::chrono::milliseconds report_interval = std::chrono::seconds(1);
  std::uint32_t candidate_priority = 100;
};

/// A networked gateway: answers offers arriving through the signaling server,
/// receives media over UDP and serves queries on the TCP data channel.
class GatewayServer {
 public:
  GatewayServer(GatewayServerConfig config, const backends::ProfileRegistry& registry,
                BackendFactoryOptions backend_options, const Clock& clock = steady_clock());
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds ports and registers with the signaling server. Throws
  /// SignalingError when the signaling server is unreachable.
  void start();
  void stop();

  std::uint16_t media_port() const { return media_port_; }
  std::uint16_t http_port() const;
  Gateway& gateway() { return gateway_; }
  const GatewayServerConfig& config() const { return config_; }
  /// Sessions negotiated over signaling that have not been torn down.
  std::size_t active_links() const;

 private:
  struct Link;

  void bind_ports();
  void accept_next();
  void on_connection(std::shared_ptr<transport::MessageStream> stream);
  void on_data_message(const std::shared_ptr<transport::MessageStream>& stream,
                       std::shared_ptr<Link>& bound, const protocol::DataMessage& message);
  void signaling_loop();
  void handle_offer(const nlohmann::json& message);
  void teardown(const std::string& session_id);
  void schedule_reports();
  void send_reports();
  BackendHandle make_backend() const;

  GatewayServerConfig config_;
  const backends::ProfileRegistry& registry_;
  BackendFactoryOptions backend_options_;
  const Clock& clock_;
  Gateway gateway_;

  transport::IoThread io_;
  std::unique_ptr<transport::MediaReceiver> receiver_;
  std::unique_ptr<boost::asio::ip::tcp::acceptor> acceptor_;
  std::unique_ptr<boost::asio::steady_timer> report_timer_;
  std::unique_ptr<HttpFrontend> http_;
  std::uint16_t media_port_ = 0;

  std::unique_ptr<signaling::SignalingClient> signaling_;
  std::thread signaling_thread_;
  std::atomic<bool> running_{false};

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Link>> links_;
  std::uint16_t next_stream_id_ = 1;
};

}  // namespace vlmedge::gateway
