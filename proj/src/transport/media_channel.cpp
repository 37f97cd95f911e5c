#include "vlmedge/transport/media_channel.hpp"

#include <poll.h>

#include <algorithm>
#include <future>
#include <string_view>

#include <boost/asio/post.hpp>

#include "vlmedge/common/image.hpp"
#include "vlmedge/transport/errors.hpp"

namespace vlmedge::transport {

namespace asio = boost::asio;
using asio::ip::udp;
using protocol::FrameEnvelope;
using protocol::MediaPacket;

namespace {

constexpr std::string_view kProbePayload = "probe";
constexpr std::string_view kProbeAckPayload = "probe-ack";

std::vector<std::uint8_t> bytes_of(std::string_view text) {
  return {text.begin(), text.end()};
}

udp::endpoint make_endpoint(const std::string& host, std::uint16_t port) {
  boost::system::error_code ec;
  auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw TransportError(TransportErrc::ConnectFailed, "invalid address '" + host + "'");
  return {address, port};
}

}  // namespace

nlohmann::json to_json(const ReceiverReport& report) {
  return {{"stream_id", report.stream_id},
          {"highest_frame_id", report.highest_frame_id},
          {"fragments_received", report.fragments_received},
          {"frames_released", report.frames_released},
          {"frames_dropped", report.frames_dropped}};
}

ReceiverReport receiver_report_from_json(const nlohmann::json& body) {
  ReceiverReport report;
  report.stream_id = body.at("stream_id").get<std::uint16_t>();
  report.highest_frame_id = body.at("highest_frame_id").get<std::uint32_t>();
  report.fragments_received = body.at("fragments_received").get<std::uint64_t>();
  report.frames_released = body.value("frames_released", std::uint64_t{0});
  report.frames_dropped = body.value("frames_dropped", std::uint64_t{0});
  return report;
}

MediaSender::MediaSender(const std::string& host, std::uint16_t port, std::uint16_t stream_id,
                         MediaSenderConfig config, const Clock& clock)
    : clock_(clock),
      stream_id_(stream_id),
      config_(std::move(config)),
      socket_(io_),
      remote_(make_endpoint(host, port)),
      bitrate_(config_.bitrate) {
  if (config_.fps <= 0) throw std::invalid_argument("fps must be positive");
  socket_.open(remote_.protocol());
}

MediaSender::~MediaSender() { close(); }

double MediaSender::bitrate_kbps() const {
  std::lock_guard lock(mutex_);
  return bitrate_.rate_kbps();
}

std::size_t MediaSender::frame_budget_bytes() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(bitrate_.rate_kbps() * 1000.0 / 8.0 / config_.fps);
}

SenderStats MediaSender::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

bool MediaSender::is_open() const {
  std::lock_guard lock(mutex_);
  return open_;
}

void MediaSender::close() {
  std::lock_guard lock(mutex_);
  if (!open_) return;
  open_ = false;
  boost::system::error_code ignored;
  socket_.close(ignored);
}

SendReport MediaSender::send_frame(const FrameEnvelope& frame) {
  if (!is_open()) throw TransportError(TransportErrc::ChannelClosed, "media channel is closed");
  const std::size_t budget = frame_budget_bytes();

  SendReport report;
  const FrameEnvelope* outgoing = &frame;
  FrameEnvelope reencoded;
  if (frame.data.size() > budget) {
    bool fitted = false;
    if (frame.pixel_format == protocol::PixelFormat::Jpeg) {
      const imaging::RgbImage image = imaging::decode_frame(frame);
      for (int quality : config_.quality_ladder) {
        auto bytes = imaging::encode_jpeg(image, quality);
        if (bytes.size() <= budget) {
          reencoded = frame;
          reencoded.data = std::move(bytes);
          report.jpeg_quality = quality;
          outgoing = &reencoded;
          fitted = true;
          break;
        }
      }
    }
    if (!fitted) {
      std::lock_guard lock(mutex_);
      ++stats_.frames_skipped;
      throw TransportError(TransportErrc::FrameTooLarge,
                           "frame " + std::to_string(frame.frame_id) + " of " +
                               std::to_string(frame.data.size()) + " bytes exceeds budget of " +
                               std::to_string(budget));
    }
  }

  const auto packets = protocol::fragment_frame(*outgoing, stream_id_, config_.mtu_payload);
  write_packets(packets, report);
  return report;
}

void MediaSender::write_packets(const std::vector<MediaPacket>& packets, SendReport& report) {
  std::lock_guard lock(mutex_);
  if (!open_) throw TransportError(TransportErrc::ChannelClosed, "media channel is closed");
  for (const auto& packet : packets) {
    const auto bytes = protocol::encode_media_packet(packet);
    boost::system::error_code ec;
    socket_.send_to(asio::buffer(bytes), remote_, 0, ec);
    // Datagram loss, including local send failures, is left to the loss reports.
    ++report.packets;
    report.bytes += bytes.size();
  }
  fragments_sent_ += packets.size();
  sent_through_[packets.front().frame_id] = fragments_sent_;
  while (sent_through_.size() > 4096) sent_through_.erase(sent_through_.begin());
  ++stats_.frames_sent;
  stats_.packets += report.packets;
  stats_.bytes += report.bytes;
}

bool MediaSender::probe(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!open_) throw TransportError(TransportErrc::ChannelClosed, "media channel is closed");
  MediaPacket probe;
  probe.stream_id = protocol::kProbeStreamId;
  probe.frame_id = ++probe_nonce_;
  probe.payload = bytes_of(kProbePayload);
  const auto bytes = protocol::encode_media_packet(probe);
  boost::system::error_code ec;
  socket_.send_to(asio::buffer(bytes), remote_, 0, ec);
  if (ec) return false;

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::array<std::uint8_t, 2048> buffer{};
  while (true) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return false;
    pollfd pfd{socket_.native_handle(), POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(remaining.count())) <= 0) return false;
    udp::endpoint from;
    const std::size_t n = socket_.receive_from(asio::buffer(buffer), from, 0, ec);
    if (ec) return false;
    try {
      const auto reply = protocol::decode_media_packet(std::span(buffer.data(), n));
      if (reply.stream_id == protocol::kProbeStreamId && reply.frame_id == probe.frame_id &&
          reply.payload == bytes_of(kProbeAckPayload)) {
        return true;
      }
    } catch (const protocol::ProtocolError&) {
    }
  }
}

double MediaSender::on_receiver_report(const ReceiverReport& report) {
  std::lock_guard lock(mutex_);
  const std::int64_t now = clock_.now_us();
  std::uint64_t sent_cumulative = 0;
  auto it = sent_through_.upper_bound(report.highest_frame_id);
  if (it != sent_through_.begin()) sent_cumulative = std::prev(it)->second;

  const std::uint64_t sent = sent_cumulative > last_sent_reported_
                                 ? sent_cumulative - last_sent_reported_
                                 : 0;
  const std::uint64_t received = report.fragments_received > last_received_reported_
                                     ? report.fragments_received - last_received_reported_
                                     : 0;
  const std::uint64_t lost = sent > received ? sent - received : 0;
  const std::int64_t interval_ms = last_report_us_ ? (now - *last_report_us_) / 1000 : 0;
  last_sent_reported_ = std::max(last_sent_reported_, sent_cumulative);
  last_received_reported_ = std::max(last_received_reported_, report.fragments_received);
  last_report_us_ = now;
  return bitrate_.on_feedback({sent, lost, interval_ms});
}

MediaReceiver::MediaReceiver(asio::io_context& io, const std::string& bind_address,
                             std::uint16_t port, const Clock& clock, JitterConfig jitter)
    : clock_(clock),
      default_jitter_(jitter),
      strand_(asio::make_strand(io)),
      socket_(strand_),
      poll_timer_(strand_) {
  const auto endpoint = make_endpoint(bind_address, port);
  socket_.open(endpoint.protocol());
  socket_.set_option(asio::socket_base::reuse_address(true));
  socket_.set_option(asio::socket_base::receive_buffer_size(4 * 1024 * 1024));
  socket_.bind(endpoint);
  port_ = socket_.local_endpoint().port();
}

MediaReceiver::~MediaReceiver() { stop(); }

void MediaReceiver::add_stream(std::uint16_t stream_id, FrameHandler handler,
                               std::optional<JitterConfig> jitter) {
  auto stream = std::make_shared<Stream>(
      Stream{JitterBuffer(jitter.value_or(default_jitter_)), std::move(handler), {}});
  std::lock_guard lock(mutex_);
  streams_[stream_id] = std::move(stream);
}

void MediaReceiver::remove_stream(std::uint16_t stream_id) {
  std::lock_guard lock(mutex_);
  streams_.erase(stream_id);
}

std::optional<StreamStats> MediaReceiver::stats(std::uint16_t stream_id) const {
  std::lock_guard lock(mutex_);
  auto it = streams_.find(stream_id);
  if (it == streams_.end()) return std::nullopt;
  StreamStats stats = it->second->stats;
  stats.jitter = it->second->buffer.stats();
  return stats;
}

std::uint64_t MediaReceiver::malformed_datagrams() const {
  std::lock_guard lock(mutex_);
  return malformed_;
}

void MediaReceiver::start() {
  std::promise<void> started;
  auto future = started.get_future();
  asio::post(strand_, [this, &started] {
    running_ = true;
    receive_next();
    schedule_poll();
    started.set_value();
  });
  future.wait();
}

void MediaReceiver::stop() {
  std::promise<void> stopped;
  auto future = stopped.get_future();
  bool posted = false;
  try {
    asio::post(strand_, [this, &stopped] {
      running_ = false;
      boost::system::error_code ignored;
      poll_timer_.cancel();
      socket_.close(ignored);
      stopped.set_value();
    });
    posted = true;
  } catch (...) {
  }
  if (posted &&
      future.wait_for(std::chrono::seconds(2)) == std::future_status::timeout) {
    // The io_context is no longer running; close directly.
    boost::system::error_code ignored;
    socket_.close(ignored);
  }
}

void MediaReceiver::receive_next() {
  socket_.async_receive_from(asio::buffer(buffer_), sender_,
                             [this](const boost::system::error_code& ec, std::size_t size) {
                               if (!running_) return;
                               if (!ec) handle_datagram(size);
                               if (ec == asio::error::operation_aborted) return;
                               receive_next();
                             });
}

void MediaReceiver::handle_datagram(std::size_t size) {
  MediaPacket packet;
  try {
    packet = protocol::decode_media_packet(std::span(buffer_.data(), size));
  } catch (const protocol::ProtocolError&) {
    std::lock_guard lock(mutex_);
    ++malformed_;
    return;
  }

  if (packet.stream_id == protocol::kProbeStreamId) {
    if (packet.payload == bytes_of(kProbePayload)) {
      packet.payload = bytes_of(kProbeAckPayload);
      boost::system::error_code ignored;
      socket_.send_to(asio::buffer(protocol::encode_media_packet(packet)), sender_, 0, ignored);
    }
    return;
  }

  const std::int64_t now = clock_.now_us();
  std::shared_ptr<Stream> stream;
  std::vector<FrameEnvelope> released;
  {
    std::lock_guard lock(mutex_);
    auto it = streams_.find(packet.stream_id);
    if (it == streams_.end()) {
      ++malformed_;
      return;
    }
    stream = it->second;
    auto& stats = stream->stats;
    if (!stats.any_packet || packet.frame_id > stats.highest_frame_id) {
      stats.highest_frame_id = packet.frame_id;
    }
    stats.any_packet = true;
    ++stats.fragments_received;
    released = stream->buffer.push(packet, now);
  }
  for (auto& frame : released) stream->handler(std::move(frame), now);
}

void MediaReceiver::schedule_poll() {
  poll_timer_.expires_after(std::chrono::milliseconds(5));
  poll_timer_.async_wait([this](const boost::system::error_code& ec) {
    if (ec || !running_) return;
    const std::int64_t now = clock_.now_us();
    std::vector<std::pair<std::shared_ptr<Stream>, std::vector<FrameEnvelope>>> due;
    {
      std::lock_guard lock(mutex_);
      for (auto& [id, stream] : streams_) {
        auto frames = stream->buffer.poll(now);
        if (!frames.empty()) due.emplace_back(stream, std::move(frames));
      }
    }
    for (auto& [stream, frames] : due) {
      for (auto& frame : frames) stream->handler(std::move(frame), now);
    }
    schedule_poll();
  });
}

}  // namespace vlmedge::transport
