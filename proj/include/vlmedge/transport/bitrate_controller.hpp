#pragma once

#include <cstdint>

namespace vlmedge::transport {

struct BitrateConfig {
  double initial_kbps = 2000;
  double min_kbps = 100;
  double max_kbps = 8000;
  /// Additive increase per loss-free second.
  double additive_kbps_per_s = 50;
  /// Multiplicative decrease applied once per loss epoch.
  double decrease_factor = 0.85;
};

struct IntervalReport {
  std::uint64_t sent = 0;
  std::uint64_t lost = 0;
  std::int64_t interval_ms = 0;
};

/// AIMD sender rate control driven by receiver loss reports.
class BitrateController {
 public:
  explicit BitrateController(BitrateConfig config = {});

  /// Throws TransportError{InvalidReport} when lost > sent or the interval is
  /// negative.
  double on_feedback(const IntervalReport& report);

  double rate_kbps() const { return rate_kbps_; }
  const BitrateConfig& config() const { return config_; }

 private:
  BitrateConfig config_;
  double rate_kbps_;
};

}  // namespace vlmedge::transport
