#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include <boost/asio/ip/tcp.hpp>

#include "vlmedge/backends/profile.hpp"
#include "vlmedge/backends/remote_backend.hpp"
#include "vlmedge/common/clock.hpp"
#include "vlmedge/common/image.hpp"

namespace vlmedge::backends {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

class ClockObserver : public StageObserver {
 public:
  std::int64_t now_us() const override { return steady_clock().now_us(); }
  void mark(gateway::Stage stage, std::int64_t ts) override { marks[static_cast<std::size_t>(stage)] = ts; }
  std::array<std::int64_t, 4> marks{};
};

RemoteOptions options(std::string url, std::chrono::milliseconds timeout) {
  RemoteOptions o;
  o.endpoint_url = std::move(url);
  o.timeout = timeout;
  return o;
}

/// Local HTTP stub standing in for an inference server.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      last_request = json::parse(req.body);
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      res.status = status;
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/generate"; }

  json reply{{"text", "ok"}};
  int status = 200;
  std::chrono::milliseconds delay{0};
  json last_request;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct Call {
  protocol::FrameEnvelope frame;
  PreprocessedImage image;
  gateway::QueryEnvelope query;

  Call() {
    imaging::RgbImage rgb{8, 8, std::vector<std::uint8_t>(192, 50)};
    frame.width = 8;
    frame.height = 8;
    frame.data = imaging::encode_jpeg(rgb, 90);
    query.query_id = "q";
    query.text = "Say ok";
    query.qtype = gateway::QType::MultipleChoice;
    query.choices = {"ok", "no"};
  }
  InferenceOutput run(RemoteBackend& backend, ClockObserver& observer) {
    return backend.infer({frame, image, query}, observer);
  }
};

BackendErrc code_of(const std::function<void()>& action) {
  try {
    action();
  } catch (const BackendError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected BackendError";
  return BackendErrc::InvalidProfile;
}

TEST(RemoteBackend, EchoesStubAnswer) {
  StubServer stub;
  RemoteBackend backend(options(stub.url(), 2s));
  Call call;
  ClockObserver observer;
  const auto out = call.run(backend, observer);
  EXPECT_EQ(out.text, "ok");
  EXPECT_EQ(out.token_count, 1);
  EXPECT_FALSE(out.simulated.has_value());
  EXPECT_EQ(stub.last_request.at("prompt"), "Say ok");
  EXPECT_EQ(stub.last_request.at("choices"), json({"ok", "no"}));
  EXPECT_EQ(stub.last_request.at("params").at("max_new_tokens"), 50);
  EXPECT_FALSE(stub.last_request.at("image").get<std::string>().empty());
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GE(observer.marks[i], observer.marks[i - 1]);
  EXPECT_EQ(backend.id(), "remote:" + stub.url());
}

TEST(RemoteBackend, RemoteTimingsPlaceStageBoundaries) {
  StubServer stub;
  stub.delay = 100ms;
  stub.reply = {{"text", "ok"}, {"timings_ms", {{"generation", 60}, {"text_decode", 10}}}};
  RemoteBackend backend(options(stub.url(), 2s));
  Call call;
  ClockObserver observer;
  call.run(backend, observer);
  const auto& m = observer.marks;
  EXPECT_NEAR(static_cast<double>(m[3] - m[2]), 10'000, 1);
  EXPECT_NEAR(static_cast<double>(m[2] - m[1]), 60'000, 1);
}

TEST(RemoteBackend, UnreachablePort) {
  std::uint16_t port;
  {
    boost::asio::io_context io;
    boost::asio::ip::tcp::acceptor probe(io, {boost::asio::ip::make_address("127.0.0.1"), 0});
    port = probe.local_endpoint().port();
  }
  RemoteBackend backend(options("http://127.0.0.1:" + std::to_string(port) + "/v1/generate", 1s));
  Call call;
  ClockObserver observer;
  EXPECT_EQ(code_of([&] { call.run(backend, observer); }), BackendErrc::RemoteUnreachable);
}

TEST(RemoteBackend, SlowServerTimesOut) {
  StubServer stub;
  stub.delay = 2s;
  RemoteBackend backend(options(stub.url(), 1s));
  Call call;
  ClockObserver observer;
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { call.run(backend, observer); }), BackendErrc::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 1800ms);
}

TEST(RemoteBackend, HttpAndBodyErrors) {
  StubServer stub;
  stub.status = 500;
  RemoteBackend backend(options(stub.url(), 2s));
  Call call;
  ClockObserver observer;
  EXPECT_EQ(code_of([&] { call.run(backend, observer); }), BackendErrc::RemoteError);
  stub.status = 200;
  stub.reply = {{"answer", "ok"}};
  EXPECT_EQ(code_of([&] { call.run(backend, observer); }), BackendErrc::RemoteError);
}

TEST(RemoteBackend, RejectsNonHttpUrl) {
  EXPECT_THROW(RemoteBackend(options("ftp://x", 1s)), std::invalid_argument);
}

}  // namespace
}  // namespace vlmedge::backends
