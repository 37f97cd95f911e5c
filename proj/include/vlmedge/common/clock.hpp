#pragma once

#include <atomic>
#include <cstdint>

namespace vlmedge {

/// Source of benchmark timestamps in microseconds.
///
/// Every component that stamps traces or evaluates deadlines takes a Clock so
/// tests can drive time explicitly. The steady clock reads CLOCK_MONOTONIC,
/// which is shared by all processes on one host; that shared origin is the
/// session epoch for single-host runs.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_us() const = 0;
};

class SteadyClock final : public Clock {
 public:
  std::int64_t now_us() const override;
};

/// Process-wide steady clock instance.
const Clock& steady_clock();

class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_us = 0) : now_(start_us) {}

  std::int64_t now_us() const override { return now_.load(); }
  void set(std::int64_t us) { now_.store(us); }
  void advance_us(std::int64_t delta) { now_.fetch_add(delta); }
  void advance_ms(std::int64_t delta) { now_.fetch_add(delta * 1000); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace vlmedge
