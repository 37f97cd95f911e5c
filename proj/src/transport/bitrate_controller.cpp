#include "vlmedge/transport/bitrate_controller.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "vlmedge/transport/errors.hpp"

namespace vlmedge::transport {

std::string_view to_string(TransportErrc code) {
  switch (code) {
    case TransportErrc::ChannelClosed: return "ChannelClosed";
    case TransportErrc::InvalidReport: return "InvalidReport";
    case TransportErrc::FrameTooLarge: return "FrameTooLarge";
    case TransportErrc::ConnectFailed: return "ConnectFailed";
    case TransportErrc::Timeout: return "Timeout";
  }
  return "Unknown";
}

BitrateController::BitrateController(BitrateConfig config) : config_(config) {
  if (config_.min_kbps <= 0 || config_.min_kbps > config_.max_kbps) {
    throw std::invalid_argument("bitrate bounds must satisfy 0 < min <= max");
  }
  rate_kbps_ = std::clamp(config_.initial_kbps, config_.min_kbps, config_.max_kbps);
}

double BitrateController::on_feedback(const IntervalReport& report) {
  if (report.lost > report.sent) {
    throw TransportError(TransportErrc::InvalidReport,
                         "lost " + std::to_string(report.lost) + " exceeds sent " +
                             std::to_string(report.sent));
  }
  if (report.interval_ms < 0) {
    throw TransportError(TransportErrc::InvalidReport, "negative report interval");
  }
  if (report.lost > 0) {
    rate_kbps_ = std::max(config_.min_kbps, rate_kbps_ * config_.decrease_factor);
  } else {
    rate_kbps_ = std::min(config_.max_kbps,
                          rate_kbps_ + config_.additive_kbps_per_s *
                                           (static_cast<double>(report.interval_ms) / 1000.0));
  }
  return rate_kbps_;
}

}  // namespace vlmedge::transport
