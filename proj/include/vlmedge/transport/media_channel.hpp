#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <nlohmann/json.hpp>

#include "vlmedge/common/clock.hpp"
#include "vlmedge/protocol/frame.hpp"
#include "vlmedge/transport/bitrate_controller.hpp"
#include "vlmedge/transport/jitter_buffer.hpp"

namespace vlmedge::transport {

inline const std::vector<int> kJpegQualityLadder{90, 75, 60, 45, 30};

struct MediaSenderConfig {
  std::size_t mtu_payload = protocol::kMaxPayload;
  /// Frame rate used to turn the bitrate into a per-frame byte budget.
  double fps = 10;
  BitrateConfig bitrate;
  std::vector<int> quality_ladder = kJpegQualityLadder;
};

struct SendReport {
  std::size_t packets = 0;
  std::size_t bytes = 0;
  /// 0 when the frame went out unmodified, else the ladder quality used.
  int jpeg_quality = 0;
};

struct SenderStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_skipped = 0;
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;
};

/// Periodic receiver feedback carried in telemetry messages.
struct ReceiverReport {
  std::uint16_t stream_id = 0;
  std::uint32_t highest_frame_id = 0;
  std::uint64_t fragments_received = 0;
  std::uint64_t frames_released = 0;
  std::uint64_t frames_dropped = 0;
};

nlohmann::json to_json(const ReceiverReport& report);
ReceiverReport receiver_report_from_json(const nlohmann::json& body);

/// Sending half of a media channel: fragments frames onto a UDP socket and
/// adapts the per-frame byte budget from receiver reports.
class MediaSender {
 public:
  MediaSender(const std::string& host, std::uint16_t port, std::uint16_t stream_id,
              MediaSenderConfig config = {}, const Clock& clock = steady_clock());
  ~MediaSender();

  /// Sends one frame, re-encoding JPEG down the quality ladder when it exceeds
  /// the current budget. Throws ChannelClosed, or FrameTooLarge when even the
  /// lowest quality does not fit (the frame is skipped and counted).
  SendReport send_frame(const protocol::FrameEnvelope& frame);

  /// Media-path handshake: true if the receiver echoed a probe in time.
  bool probe(std::chrono::milliseconds timeout);

  /// Converts cumulative receiver counters into an interval loss report and
  /// applies it to the bitrate controller. Returns the new rate.
  double on_receiver_report(const ReceiverReport& report);

  double bitrate_kbps() const;
  std::size_t frame_budget_bytes() const;
  SenderStats stats() const;
  std::uint16_t stream_id() const { return stream_id_; }

  void close();
  bool is_open() const;

 private:
  void write_packets(const std::vector<protocol::MediaPacket>& packets, SendReport& report);

  const Clock& clock_;
  std::uint16_t stream_id_;
  MediaSenderConfig config_;
  boost::asio::io_context io_;
  boost::asio::ip::udp::socket socket_;
  boost::asio::ip::udp::endpoint remote_;

  mutable std::mutex mutex_;
  bool open_ = true;
  BitrateController bitrate_;
  SenderStats stats_;
  // frame_id -> cumulative fragments sent through that frame.
  std::map<std::uint32_t, std::uint64_t> sent_through_;
  std::uint64_t fragments_sent_ = 0;
  std::uint64_t last_sent_reported_ = 0;
  std::uint64_t last_received_reported_ = 0;
  std::optional<std::int64_t> last_report_us_;
  std::uint32_t probe_nonce_ = 0;
};

struct StreamStats {
  JitterStats jitter;
  bool any_packet = false;
  std::uint32_t highest_frame_id = 0;
  std::uint64_t fragments_received = 0;
};

/// Receiving half: one UDP socket demultiplexed by stream_id, each stream with
/// its own jitter buffer. Frame handlers run on the receive strand.
class MediaReceiver {
 public:
  using FrameHandler = std::function<void(protocol::FrameEnvelope frame, std::int64_t release_us)>;

  MediaReceiver(boost::asio::io_context& io, const std::string& bind_address, std::uint16_t port,
                const Clock& clock = steady_clock(), JitterConfig jitter = {});
  ~MediaReceiver();

  std::uint16_t port() const { return port_; }

  void add_stream(std::uint16_t stream_id, FrameHandler handler,
                  std::optional<JitterConfig> jitter = std::nullopt);
  void remove_stream(std::uint16_t stream_id);
  std::optional<StreamStats> stats(std::uint16_t stream_id) const;
  std::uint64_t malformed_datagrams() const;

  void start();
  void stop();

 private:
  struct Stream {
    JitterBuffer buffer;
    FrameHandler handler;
    StreamStats stats;
  };

  void receive_next();
  void schedule_poll();
  void handle_datagram(std::size_t size);

  const Clock& clock_;
  JitterConfig default_jitter_;
  boost::asio::strand<boost::asio::io_context::executor_type> strand_;
  boost::asio::ip::udp::socket socket_;
  boost::asio::steady_timer poll_timer_;
  std::uint16_t port_ = 0;
  std::array<std::uint8_t, 2048> buffer_{};
  boost::asio::ip::udp::endpoint sender_;

  mutable std::mutex mutex_;
  std::map<std::uint16_t, std::shared_ptr<Stream>> streams_;
  std::uint64_t malformed_ = 0;
  bool running_ = false;
};

}  // namespace vlmedge::transport
