#include "vlmedge/transport/message_stream.hpp"

#include <future>

#include <boost/asio/connect.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/write.hpp>

#include "vlmedge/transport/errors.hpp"

namespace vlmedge::transport {

namespace asio = boost::asio;
using asio::ip::tcp;

MessageStream::MessageStream(tcp::socket socket) : socket_(std::move(socket)) {
  boost::system::error_code ec;
  auto endpoint = socket_.remote_endpoint(ec);
  if (!ec) remote_address_ = endpoint.address().to_string() + ":" + std::to_string(endpoint.port());
  socket_.set_option(tcp::no_delay(true), ec);
}

MessageStream::~MessageStream() = default;

std::shared_ptr<MessageStream> MessageStream::connect(asio::io_context& io, const std::string& host,
                                                      std::uint16_t port,
                                                      std::chrono::milliseconds timeout) {
  boost::system::error_code ec;
  const auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) {
    throw TransportError(TransportErrc::ConnectFailed, "invalid address '" + host + "'");
  }
  auto socket = std::make_shared<tcp::socket>(asio::make_strand(io));
  auto timer = std::make_shared<asio::steady_timer>(socket->get_executor(), timeout);
  auto result = std::make_shared<std::promise<boost::system::error_code>>();
  auto future = result->get_future();
  auto done = std::make_shared<bool>(false);

  asio::post(socket->get_executor(), [=] {
    timer->async_wait([=](const boost::system::error_code& wait_ec) {
      if (wait_ec || *done) return;
      *done = true;
      boost::system::error_code ignored;
      socket->close(ignored);
      result->set_value(asio::error::timed_out);
    });
    socket->async_connect(tcp::endpoint(address, port), [=](const boost::system::error_code& cec) {
      if (*done) return;
      *done = true;
      timer->cancel();
      result->set_value(cec);
    });
  });

  const auto outcome = future.get();
  if (outcome == asio::error::timed_out) {
    throw TransportError(TransportErrc::Timeout,
                         "connect to " + host + ":" + std::to_string(port) + " timed out");
  }
  if (outcome) {
    throw TransportError(TransportErrc::ConnectFailed,
                         "connect to " + host + ":" + std::to_string(port) + ": " + outcome.message());
  }
  return std::make_shared<MessageStream>(std::move(*socket));
}

void MessageStream::start(MessageHandler on_message, CloseHandler on_close) {
  on_message_ = std::move(on_message);
  on_close_ = std::move(on_close);
  asio::post(socket_.get_executor(), [self = shared_from_this()] { self->read_header(); });
}

void MessageStream::read_header() {
  asio::async_read(socket_, asio::buffer(header_),
                   [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
                     if (ec) return self->shutdown_now();
                     const std::size_t length = (std::size_t{self->header_[0]} << 24) |
                                                (std::size_t{self->header_[1]} << 16) |
                                                (std::size_t{self->header_[2]} << 8) |
                                                std::size_t{self->header_[3]};
                     if (length > protocol::kMaxMessageBody) return self->shutdown_now();
                     self->read_body(length);
                   });
}

void MessageStream::read_body(std::size_t length) {
  body_.resize(length);
  asio::async_read(socket_, asio::buffer(body_),
                   [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
                     if (ec) return self->shutdown_now();
                     std::optional<protocol::DataMessage> message;
                     try {
                       message.emplace(protocol::parse_data_message_body(self->body_));
                     } catch (const protocol::ProtocolError&) {
                       return self->shutdown_now();
                     }
                     if (self->on_message_) self->on_message_(std::move(*message));
                     self->read_header();
                   });
}

void MessageStream::send(const protocol::DataMessage& message) {
  if (!open_.load()) throw TransportError(TransportErrc::ChannelClosed, "data channel is closed");
  auto bytes = protocol::encode_data_message(message);
  asio::post(socket_.get_executor(), [self = shared_from_this(), bytes = std::move(bytes)]() mutable {
    if (self->close_notified_) return;
    const bool idle = self->outbox_.empty();
    self->outbox_.push_back(std::move(bytes));
    if (idle) self->write_next();
  });
}

void MessageStream::write_next() {
  asio::async_write(socket_, asio::buffer(outbox_.front()),
                    [self = shared_from_this()](const boost::system::error_code& ec, std::size_t) {
                      if (ec) return self->shutdown_now();
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) {
                        self->write_next();
                      } else if (self->closing_) {
                        self->shutdown_now();
                      }
                    });
}

void MessageStream::close() {
  open_.store(false);
  asio::post(socket_.get_executor(), [self = shared_from_this()] {
    self->closing_ = true;
    if (self->outbox_.empty()) self->shutdown_now();
  });
}

void MessageStream::shutdown_now() {
  open_.store(false);
  if (close_notified_) return;
  close_notified_ = true;
  boost::system::error_code ignored;
  socket_.shutdown(tcp::socket::shutdown_both, ignored);
  socket_.close(ignored);
  outbox_.clear();
  if (on_close_) on_close_();
  on_message_ = nullptr;
  on_close_ = nullptr;
}

void MessageInbox::push(protocol::DataMessage message) {
  {
    std::lock_guard lock(mutex_);
    messages_.push_back(std::move(message));
  }
  cv_.notify_all();
}

void MessageInbox::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool MessageInbox::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::optional<protocol::DataMessage> MessageInbox::wait_for(const Predicate& pred,
                                                            std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto take_match = [&]() -> std::optional<protocol::DataMessage> {
    for (auto it = messages_.begin(); it != messages_.end(); ++it) {
      if (pred(*it)) {
        auto message = std::move(*it);
        messages_.erase(it);
        return message;
      }
    }
    return std::nullopt;
  };
  while (true) {
    if (auto match = take_match()) return match;
    if (closed_) return std::nullopt;
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) return take_match();
  }
}

}  // namespace vlmedge::transport
