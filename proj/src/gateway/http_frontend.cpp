#include "vlmedge/gateway/http_frontend.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <future>
#include <mutex>
#include <set>

#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "vlmedge/common/base64.hpp"
#include "vlmedge/common/image.hpp"

namespace vlmedge::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::ip::tcp;
using nlohmann::json;

struct HttpFrontend::Context {
  Context(Gateway& g, HttpFrontendConfig c) : gateway(g), config(std::move(c)) {}

  Gateway& gateway;
  HttpFrontendConfig config;
  std::atomic<std::uint32_t> next_frame_id{1};
  std::atomic<std::uint64_t> next_query_id{1};
  std::mutex bridges_mutex;
  std::vector<std::weak_ptr<BridgeSession>> bridges;

  std::string pick_session(const json& query) const {
    if (auto it = query.find("session_id"); it != query.end() && it->is_string()) return it->get<std::string>();
    auto ids = gateway.sessions();
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
      if (*it == config.infer_session) continue;
      auto cache = gateway.cache(*it);
      if (cache && cache->size() > 0) return *it;
    }
    return config.infer_session;
  }

  std::string next_query_id_string(const char* prefix) {
    return std::string(prefix) + std::to_string(next_query_id++);
  }
};

namespace {

// Fields a client may omit when posting a query.
QueryEnvelope query_with_defaults(json body, const std::string& fallback_id) {
  if (!body.contains("query_id") && !body.contains("id")) body["query_id"] = fallback_id;
  if (!body.contains("text") && body.contains("query")) body["text"] = body["query"];
  body.erase("frame_ref");
  return query_from_json(body);
}

http::status status_for(const AnswerEnvelope& a) {
  if (a.ok()) return http::status::ok;
  if (a.error->code == "MalformedQuery" || a.error->code == "ImageDecodeError") return http::status::bad_request;
  if (a.error->code == "BackendTimeout" || a.error->code == "Timeout") return http::status::gateway_timeout;
  return http::status::bad_gateway;
}

const char* mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

}  // namespace

class HttpFrontend::BridgeSession : public std::enable_shared_from_this<BridgeSession> {
 public:
  static constexpr std::size_t kMaxQueued = 256;

  BridgeSession(tcp::socket&& socket, std::shared_ptr<Context> ctx) : ws_(std::move(socket)), ctx_(std::move(ctx)) {}

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_accept();
    });
  }

  void enqueue(std::string text, bool droppable) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text), droppable]() mutable {
      if (self->closed_) return;
      if (droppable && self->outbox_.size() >= kMaxQueued) return;
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1) self->write_next();
    });
  }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closed_) return;
      self->ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) { self->shutdown(); });
    });
  }

 private:
  void on_accept() {
    std::weak_ptr<BridgeSession> weak = shared_from_this();
    sink_id_ = ctx_->gateway.add_event_sink([weak](const json& event) {
      if (auto self = weak.lock()) self->enqueue(event.dump(), event.value("kind", "") == "frame");
    });
    enqueue(json{{"kind", "session_state"},
                 {"ts", ctx_->gateway.clock().now_us()},
                 {"state", "bridge_open"},
                 {"sessions", ctx_->gateway.sessions()}}
                .dump(),
            false);
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_text(text);
      self->read_next();
    });
  }

  void on_text(const std::string& text) {
    const std::int64_t now = ctx_->gateway.clock().now_us();
    try {
      json body = json::parse(text);
      if (body.value("type", "") != "query") {
        throw GatewayError(GatewayErrc::MalformedQuery, "bridge accepts only {\"type\":\"query\"} messages");
      }
      const std::string session = ctx_->pick_session(body);
      auto query = query_with_defaults(body, ctx_->next_query_id_string("op-"));
      if (query.issued_ts_us == 0) query.issued_ts_us = now;
      ctx_->gateway.submit(session, std::move(query), nullptr);
    } catch (const std::exception& e) {
      enqueue(json{{"kind", "error"}, {"ts", now}, {"message", e.what()}}.dump(), false);
    }
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    outbox_.clear();
    if (sink_id_ != 0) ctx_->gateway.remove_event_sink(sink_id_);
    sink_id_ = 0;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Context> ctx_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  int sink_id_ = 0;
  bool closed_ = false;
};

class HttpFrontend::HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Context> ctx) : stream_(std::move(socket)), ctx_(std::move(ctx)) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read_next(); });
  }

 private:
  void read_next() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->on_request();
    });
  }

  void on_request() {
    const std::string target(request_.target());
    if (websocket::is_upgrade(request_)) {
      if (target != "/v1/bridge") return respond_json(http::status::not_found, {{"error", "no WebSocket at " + target}});
      stream_.expires_never();
      auto bridge = std::make_shared<BridgeSession>(stream_.release_socket(), ctx_);
      {
        std::lock_guard lock(ctx_->bridges_mutex);
        ctx_->bridges.push_back(bridge);
      }
      bridge->run(std::move(request_));
      return;
    }
    if (target == "/healthz" && request_.method() == http::verb::get) {
      return respond_json(http::status::ok, {{"status", "ok"}, {"sessions", ctx_->gateway.sessions()}});
    }
    if (target == "/v1/infer") {
      if (request_.method() != http::verb::post) {
        return respond_json(http::status::method_not_allowed, {{"error", "use POST"}});
      }
      return infer();
    }
    if (request_.method() == http::verb::get && !ctx_->config.static_dir.empty()) return serve_static(target);
    respond_json(http::status::not_found, {{"error", "not found: " + target}});
  }

  void infer() {
    const std::int64_t received = ctx_->gateway.clock().now_us();
    json body;
    try {
      body = json::parse(request_.body());
    } catch (const json::exception& e) {
      return respond_error(http::status::bad_request, "MalformedQuery", e.what());
    }
    if (!body.is_object() || !body.contains("image") || !body["image"].is_string()) {
      return respond_error(http::status::bad_request, "MalformedQuery", "\"image\" (base64) is required");
    }
    auto bytes = base64_decode(body["image"].get<std::string>());
    if (!bytes) return respond_error(http::status::bad_request, "MalformedQuery", "\"image\" is not valid base64");

    QueryEnvelope query;
    protocol::FrameEnvelope frame;
    try {
      query = query_with_defaults(body, ctx_->next_query_id_string("http-"));
      frame = imaging::frame_from_image_bytes(*bytes);
    } catch (const GatewayError& e) {
      return respond_error(http::status::bad_request, std::string(to_string(e.code())), e.what());
    } catch (const imaging::ImageDecodeError& e) {
      return respond_error(http::status::bad_request, "ImageDecodeError", e.what());
    }
    frame.frame_id = ctx_->next_frame_id++;
    frame.capture_ts_us = static_cast<std::uint64_t>(received);
    query.frame_ref = frame.frame_id;
    query.issued_ts_us = received;
    const auto& session = ctx_->config.infer_session;
    ctx_->gateway.on_frame(session, std::move(frame), received);

    auto self = shared_from_this();
    ctx_->gateway.submit(session, std::move(query), [self](const AnswerEnvelope& answer) {
      AnswerEnvelope a = answer;
      a.trace.response_received_ts = std::max(a.trace.decode_done_ts, self->ctx_->gateway.clock().now_us());
      asio::post(self->stream_.get_executor(), [self, a] { self->respond_json(status_for(a), to_json(a)); });
    });
  }

  void serve_static(std::string target) {
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.find("..") != std::string::npos) return respond_json(http::status::bad_request, {{"error", "bad path"}});
    if (target.empty() || target.back() == '/') target += "index.html";
    const auto path = ctx_->config.static_dir / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in) return respond_json(http::status::not_found, {{"error", "not found: " + target}});
    std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    auto response = std::make_shared<http::response<http::string_body>>(http::status::ok, request_.version());
    response->set(http::field::content_type, mime_type(path));
    response->body() = std::move(content);
    send(response);
  }

  void respond_error(http::status status, const std::string& code, const std::string& message) {
    respond_json(status, {{"error", {{"code", code}, {"message", message}}}});
  }

  void respond_json(http::status status, const json& body) {
    auto response = std::make_shared<http::response<http::string_body>>(status, request_.version());
    response->set(http::field::content_type, "application/json");
    response->body() = body.dump();
    send(response);
  }

  void send(const std::shared_ptr<http::response<http::string_body>>& response) {
    response->keep_alive(request_.keep_alive());
    response->prepare_payload();
    http::async_write(stream_, *response, [self = shared_from_this(), response](beast::error_code ec, std::size_t) {
      if (ec || !response->keep_alive()) return self->close();
      self->read_next();
    });
  }

  void close() {
    beast::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    stream_.socket().close(ignored);
  }

  beast::tcp_stream stream_;
  std::shared_ptr<Context> ctx_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

HttpFrontend::HttpFrontend(asio::io_context& io, HttpFrontendConfig config, Gateway& gateway)
    : io_(io), ctx_(std::make_shared<Context>(gateway, std::move(config))), acceptor_(asio::make_strand(io)) {}

HttpFrontend::~HttpFrontend() { stop(); }

void HttpFrontend::start() {
  const tcp::endpoint endpoint(asio::ip::make_address(ctx_->config.bind_address), ctx_->config.port);
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(endpoint);
  acceptor_.listen();
  port_ = acceptor_.local_endpoint().port();
  running_ = true;
  asio::post(acceptor_.get_executor(), [this] { accept_next(); });
}

void HttpFrontend::stop() {
  if (!running_) return;
  running_ = false;
  auto done = std::make_shared<std::promise<void>>();
  auto finished = done->get_future();
  asio::post(acceptor_.get_executor(), [this, done] {
    beast::error_code ignored;
    acceptor_.close(ignored);
    done->set_value();
  });
  if (finished.wait_for(std::chrono::seconds(2)) != std::future_status::ready) {
    beast::error_code ignored;
    acceptor_.close(ignored);
  }
  std::vector<std::weak_ptr<BridgeSession>> bridges;
  {
    std::lock_guard lock(ctx_->bridges_mutex);
    bridges.swap(ctx_->bridges);
  }
  for (auto& weak : bridges) {
    if (auto bridge = weak.lock()) bridge->close();
  }
}

void HttpFrontend::accept_next() {
  acceptor_.async_accept(asio::make_strand(io_), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == asio::error::operation_aborted || !acceptor_.is_open()) return;
      return accept_next();
    }
    std::make_shared<HttpSession>(std::move(socket), ctx_)->run();
    accept_next();
  });
}

}  // namespace vlmedge::gateway
