#include <gtest/gtest.h>

#include <future>
#include <mutex>
#include <random>

#include <boost/asio/strand.hpp>

#include "support/test_support.hpp"
#include "vlmedge/transport/bitrate_controller.hpp"
#include "vlmedge/transport/errors.hpp"
#include "vlmedge/transport/io_thread.hpp"
#include "vlmedge/transport/media_channel.hpp"
#include "vlmedge/transport/message_stream.hpp"

namespace vlmedge::transport {
namespace {

namespace asio = boost::asio;
using asio::ip::tcp;
using protocol::DataMessage;
using protocol::MessageType;

TEST(Bitrate, LossEpochCutsRateMultiplicatively) {
  BitrateController controller({.initial_kbps = 1000});
  EXPECT_DOUBLE_EQ(controller.on_feedback({100, 5, 1000}), 850.0);
}

TEST(Bitrate, LossFreeIncreaseIsCappedAtMax) {
  BitrateController controller({.initial_kbps = 8000});
  EXPECT_DOUBLE_EQ(controller.on_feedback({100, 0, 1000}), 8000.0);
}

TEST(Bitrate, AdditiveIncreaseScalesWithInterval) {
  BitrateController controller({.initial_kbps = 1000});
  EXPECT_DOUBLE_EQ(controller.on_feedback({100, 0, 2000}), 1100.0);
  EXPECT_DOUBLE_EQ(controller.on_feedback({0, 0, 500}), 1125.0);
}

TEST(Bitrate, RepeatedLossStopsAtFloor) {
  BitrateController controller({.initial_kbps = 110});
  controller.on_feedback({10, 1, 1000});
  EXPECT_DOUBLE_EQ(controller.on_feedback({10, 1, 1000}), 100.0);
}

TEST(Bitrate, RejectsInconsistentReports) {
  BitrateController controller;
  try {
    controller.on_feedback({5, 6, 1000});
    FAIL() << "expected InvalidReport";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), TransportErrc::InvalidReport);
  }
  EXPECT_THROW(controller.on_feedback({5, 0, -1}), TransportError);
  EXPECT_DOUBLE_EQ(controller.rate_kbps(), 2000.0);
}

protocol::FrameEnvelope raw_frame(std::uint32_t id, std::mt19937_64& rng) {
  protocol::FrameEnvelope frame;
  frame.frame_id = id;
  frame.capture_ts_us = 1'000'000 + id * 100'000ull;
  frame.width = 64;
  frame.height = 48;
  frame.pixel_format = protocol::PixelFormat::RawRgb8;
  frame.data = test::random_bytes(rng, 64 * 48 * 3);
  return frame;
}

TEST(MediaChannel, RawLoopbackIsByteIdentical) {
  IoThread io;
  MediaReceiver receiver(io.context(), "127.0.0.1", 0);
  std::mutex mutex;
  std::vector<protocol::FrameEnvelope> received;
  receiver.add_stream(7, [&](protocol::FrameEnvelope frame, std::int64_t) {
    std::lock_guard lock(mutex);
    received.push_back(std::move(frame));
  }, JitterConfig{.target_delay_ms = 2000, .reorder_window = 128, .first_frame_id = 1});
  receiver.start();

  MediaSender sender("127.0.0.1", receiver.port(), 7);
  ASSERT_TRUE(sender.probe(std::chrono::milliseconds(1000)));

  std::mt19937_64 rng(11);
  std::vector<protocol::FrameEnvelope> sent;
  for (std::uint32_t id = 1; id <= 100; ++id) {
    sent.push_back(raw_frame(id, rng));
    const auto report = sender.send_frame(sent.back());
    EXPECT_EQ(report.packets, 8u);
    EXPECT_EQ(report.jpeg_quality, 0);
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ASSERT_TRUE(test::eventually([&] {
    std::lock_guard lock(mutex);
    return received.size() == sent.size();
  }));
  {
    std::lock_guard lock(mutex);
    for (std::size_t i = 0; i < sent.size(); ++i) ASSERT_EQ(received[i], sent[i]) << i;
  }
  const auto stats = receiver.stats(7);
  ASSERT_TRUE(stats.has_value());
  EXPECT_EQ(stats->highest_frame_id, 100u);
  EXPECT_EQ(stats->fragments_received, 800u);
  EXPECT_EQ(stats->jitter.frames_dropped, 0u);
  receiver.stop();
}

TEST(MediaChannel, SendAfterCloseFails) {
  MediaSender sender("127.0.0.1", 9, 1);
  sender.close();
  EXPECT_FALSE(sender.is_open());
  std::mt19937_64 rng(1);
  try {
    sender.send_frame(raw_frame(1, rng));
    FAIL() << "expected ChannelClosed";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), TransportErrc::ChannelClosed);
  }
}

TEST(MediaChannel, OversizedRawFrameIsSkipped) {
  MediaSender sender("127.0.0.1", 9, 1, {.bitrate = {.initial_kbps = 100}});
  std::mt19937_64 rng(1);
  try {
    sender.send_frame(raw_frame(1, rng));
    FAIL() << "expected FrameTooLarge";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), TransportErrc::FrameTooLarge);
  }
  EXPECT_EQ(sender.stats().frames_skipped, 1u);
}

TEST(MediaChannel, ReceiverReportDrivesBitrate) {
  ManualClock clock(0);
  MediaSender sender("127.0.0.1", 9, 3, {.bitrate = {.initial_kbps = 1000}}, clock);
  std::mt19937_64 rng(5);
  for (std::uint32_t id = 1; id <= 10; ++id) sender.send_frame(raw_frame(id, rng));
  // 80 fragments sent, all received: first report only establishes the baseline interval.
  sender.on_receiver_report({3, 10, 80, 10, 0});
  clock.advance_ms(1000);
  for (std::uint32_t id = 11; id <= 20; ++id) sender.send_frame(raw_frame(id, rng));
  EXPECT_DOUBLE_EQ(sender.on_receiver_report({3, 20, 155, 20, 0}), 850.0);
}

struct StreamPair {
  std::shared_ptr<MessageStream> client;
  std::shared_ptr<MessageStream> server;
};

StreamPair connect_pair(IoThread& io) {
  tcp::acceptor acceptor(io.context(), tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0));
  const auto port = acceptor.local_endpoint().port();
  auto accepted = std::async(std::launch::async, [&] {
    tcp::socket socket(asio::make_strand(io.context()));
    acceptor.accept(socket);
    return std::make_shared<MessageStream>(std::move(socket));
  });
  auto client = MessageStream::connect(io.context(), "127.0.0.1", port, std::chrono::seconds(2));
  return {client, accepted.get()};
}

TEST(MessageStream, DeliversMessagesInOrder) {
  IoThread io;
  auto [client, server] = connect_pair(io);
  MessageInbox inbox;
  server->start([&](DataMessage m) { inbox.push(std::move(m)); });
  client->start([](DataMessage) {});

  for (int i = 0; i < 3; ++i) {
    client->send(DataMessage::make(MessageType::Query, {{"id", "q" + std::to_string(i)}, {"text", "hi"}}));
  }
  for (int i = 0; i < 3; ++i) {
    auto m = inbox.wait_for([](const DataMessage&) { return true; }, std::chrono::seconds(2));
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->body().at("id"), "q" + std::to_string(i));
  }
  client->close();
  server->close();
}

TEST(MessageStream, SurvivesThousandMessageSoak) {
  IoThread io;
  auto [client, server] = connect_pair(io);
  std::mutex mutex;
  std::vector<int> seen;
  server->start([&](DataMessage m) {
    std::lock_guard lock(mutex);
    seen.push_back(m.body().at("seq").get<int>());
  });
  client->start([](DataMessage) {});
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&, w] {
      for (int i = 0; i < 250; ++i) {
        client->send(DataMessage::make(MessageType::Telemetry, {{"seq", w * 250 + i}}));
      }
    });
  }
  for (auto& t : writers) t.join();
  ASSERT_TRUE(test::eventually([&] {
    std::lock_guard lock(mutex);
    return seen.size() == 1000;
  }));
  std::lock_guard lock(mutex);
  std::vector<int> last(4, -1);
  for (int seq : seen) {
    const int w = seq / 250;
    EXPECT_GT(seq, last[w]);
    last[w] = seq;
  }
  EXPECT_TRUE(client->is_open());
  EXPECT_TRUE(server->is_open());
}

TEST(MessageStream, SendAfterCloseFails) {
  IoThread io;
  auto [client, server] = connect_pair(io);
  std::promise<void> peer_closed;
  server->start([](DataMessage) {}, [&] { peer_closed.set_value(); });
  client->start([](DataMessage) {});
  client->close();
  ASSERT_EQ(peer_closed.get_future().wait_for(std::chrono::seconds(2)), std::future_status::ready);
  EXPECT_FALSE(client->is_open());
  try {
    client->send(DataMessage::make(MessageType::Control, {{"kind", "ping"}}));
    FAIL() << "expected ChannelClosed";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), TransportErrc::ChannelClosed);
  }
}

TEST(MessageStream, ConnectToClosedPortFails) {
  IoThread io;
  tcp::acceptor probe(io.context(), tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0));
  const auto port = probe.local_endpoint().port();
  probe.close();
  try {
    MessageStream::connect(io.context(), "127.0.0.1", port, std::chrono::seconds(1));
    FAIL() << "expected ConnectFailed";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), TransportErrc::ConnectFailed);
  }
}

TEST(MessageInbox, WaitForSkipsNonMatching) {
  MessageInbox inbox;
  inbox.push(DataMessage::make(MessageType::Telemetry, {{"kind", "frame_ack"}}));
  inbox.push(DataMessage::make(MessageType::Answer, {{"query_id", "a"}}));
  auto answer = inbox.wait_for([](const DataMessage& m) { return m.type() == MessageType::Answer; },
                               std::chrono::milliseconds(10));
  ASSERT_TRUE(answer.has_value());
  EXPECT_EQ(answer->body().at("query_id"), "a");
  EXPECT_FALSE(inbox.wait_for([](const DataMessage& m) { return m.type() == MessageType::Answer; },
                              std::chrono::milliseconds(10)));
  inbox.close();
  EXPECT_TRUE(inbox.closed());
}

}  // namespace
}  // namespace vlmedge::transport
