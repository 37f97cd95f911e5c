#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>

#include "vlmedge/protocol/data_message.hpp"

namespace vlmedge::transport {

/// Reliable, ordered DataMessage channel over one TCP connection.
///
/// Reads run on the socket's strand and hand each decoded message to the
/// message handler in arrival order. send() may be called from any thread;
/// writes are queued and issued one at a time. A framing or JSON error from
/// the peer closes the stream.
class MessageStream : public std::enable_shared_from_this<MessageStream> {
 public:
  using MessageHandler = std::function<void(protocol::DataMessage)>;
  using CloseHandler = std::function<void()>;

  /// `socket` must have been created on a strand executor.
  explicit MessageStream(boost::asio::ip::tcp::socket socket);
  ~MessageStream();

  /// Connects with a deadline. The io_context must be running on another
  /// thread. Throws TransportError{ConnectFailed|Timeout}.
  static std::shared_ptr<MessageStream> connect(boost::asio::io_context& io, const std::string& host,
                                                std::uint16_t port,
                                                std::chrono::milliseconds timeout);

  void start(MessageHandler on_message, CloseHandler on_close = {});

  /// Throws TransportError{ChannelClosed} once the stream is closed.
  void send(const protocol::DataMessage& message);

  /// Closes after already-queued writes have been flushed.
  void close();

  bool is_open() const { return open_.load(); }
  std::string remote_address() const { return remote_address_; }

 private:
  void read_header();
  void read_body(std::size_t length);
  void write_next();
  void shutdown_now();

  boost::asio::ip::tcp::socket socket_;
  std::string remote_address_;
  std::atomic<bool> open_{true};
  bool closing_ = false;
  bool close_notified_ = false;
  std::array<std::uint8_t, 4> header_{};
  std::vector<std::uint8_t> body_;
  std::deque<std::vector<std::uint8_t>> outbox_;
  MessageHandler on_message_;
  CloseHandler on_close_;
};

/// Thread-safe mailbox for consumers that wait on specific messages.
class MessageInbox {
 public:
  using Predicate = std::function<bool(const protocol::DataMessage&)>;

  void push(protocol::DataMessage message);
  void close();
  bool closed() const;

  /// Removes and returns the first message matching `pred`, waiting up to
  /// `timeout`. Returns nullopt on timeout or when closed with no match.
  std::optional<protocol::DataMessage> wait_for(const Predicate& pred,
                                                std::chrono::milliseconds timeout);

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<protocol::DataMessage> messages_;
  bool closed_ = false;
};

}  // namespace vlmedge::transport
