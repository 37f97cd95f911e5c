#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support/protocol_fuzz.hpp"
#include "vlmedge/transport/jitter_buffer.hpp"

namespace vlmedge::test {

struct JitterArrival {
  std::int64_t at_us = 0;
  protocol::MediaPacket packet;
};

struct JitterScenario {
  transport::JitterConfig config;
  std::map<std::uint32_t, protocol::FrameEnvelope> frames;
  std::set<std::uint32_t> lossy;
  std::vector<JitterArrival> arrivals;
  /// Frames arrive in id order, intact, each within the target delay.
  bool clean = false;
};

/// Random frames, fragment loss, reordering and delay spread around the
/// target delay. Clean scenarios have neither loss nor cross-frame reordering.
inline JitterScenario random_jitter_scenario(std::mt19937_64& rng) {
  JitterScenario s;
  s.clean = rng() % 4 == 0;
  s.config.target_delay_ms = 5 + static_cast<std::int64_t>(rng() % 60);
  s.config.reorder_window = rng() % 3 == 0 ? static_cast<std::uint32_t>(2 + rng() % 6) : 1000;
  const std::uint32_t first = rng() % 2 == 0 ? 0 : static_cast<std::uint32_t>(rng() % 1000);
  if (rng() % 4 == 0) {
    s.config.first_frame_id.reset();
  } else {
    s.config.first_frame_id = first;
  }

  const std::int64_t delay_us = s.config.target_delay_ms * 1000;
  const std::int64_t spread_us = s.clean ? static_cast<std::int64_t>(rng() % delay_us)
                                         : static_cast<std::int64_t>(rng() % (3 * delay_us));
  const std::int64_t interval_us = s.clean ? spread_us + 1 + static_cast<std::int64_t>(rng() % 20'000)
                                           : static_cast<std::int64_t>(rng() % 40'000);
  const bool lossy = !s.clean && rng() % 3 == 0;
  const std::size_t frame_count = 1 + rng() % 12;
  for (std::uint32_t k = 0; k < frame_count; ++k) {
    auto frame = random_frame(rng, rng() % 3000);
    frame.frame_id = first + k;
    const std::int64_t base = 1'000'000 + static_cast<std::int64_t>(k) * interval_us;
    auto packets = protocol::fragment_frame(frame, 7, 64 + rng() % 400);
    for (auto& packet : packets) {
      if (lossy && rng() % 10 == 0) {
        s.lossy.insert(frame.frame_id);
        continue;
      }
      const std::int64_t offset = spread_us == 0 ? 0 : static_cast<std::int64_t>(rng() % spread_us);
      s.arrivals.push_back({base + offset, std::move(packet)});
    }
    s.frames[frame.frame_id] = std::move(frame);
  }
  std::shuffle(s.arrivals.begin(), s.arrivals.end(), rng);
  std::stable_sort(s.arrivals.begin(), s.arrivals.end(),
                   [](const JitterArrival& a, const JitterArrival& b) { return a.at_us < b.at_us; });
  return s;
}

struct JitterRun {
  std::vector<protocol::FrameEnvelope> released;
  transport::JitterStats stats;
  std::size_t held_at_end = 0;
  /// A poll left the oldest held frame past its deadline.
  bool overdue_head = false;
};

inline JitterRun replay_jitter(const JitterScenario& s, const std::vector<JitterArrival>& arrivals) {
  transport::JitterBuffer buffer(s.config);
  JitterRun run;
  auto take = [&](std::vector<protocol::FrameEnvelope> frames) {
    for (auto& f : frames) run.released.push_back(std::move(f));
  };
  for (const auto& a : arrivals) {
    take(buffer.push(a.packet, a.at_us));
    take(buffer.poll(a.at_us));
    if (auto deadline = buffer.next_deadline_us(); deadline && *deadline <= a.at_us) run.overdue_head = true;
  }
  take(buffer.poll(std::numeric_limits<std::int64_t>::max() / 2));
  run.stats = buffer.stats();
  run.held_at_end = buffer.held_frames();
  return run;
}

/// Checks one scenario. Returns an empty string when every property holds.
inline std::string check_jitter_scenario(const JitterScenario& s, std::mt19937_64& rng) {
  const auto run = replay_jitter(s, s.arrivals);

  std::int64_t last = -1;
  for (const auto& frame : run.released) {
    if (static_cast<std::int64_t>(frame.frame_id) <= last) return "frames released out of order";
    last = frame.frame_id;
    auto it = s.frames.find(frame.frame_id);
    if (it == s.frames.end() || it->second != frame) return "released frame differs from the sent frame";
    if (s.lossy.count(frame.frame_id)) return "frame with a lost fragment was released";
  }
  if (run.overdue_head) return "oldest frame held past its deadline";
  if (run.held_at_end != 0) return "frames still held after the final poll";
  if (run.stats.frames_released != run.released.size()) return "released count mismatch";
  if (s.clean && run.released.size() != s.frames.size()) return "clean stream lost frames";

  std::set<std::uint32_t> seen;
  for (const auto& a : s.arrivals) seen.insert(a.packet.frame_id);
  // Every frame that reached the buffer is finalized once; frames whose
  // fragments all arrived late never enter it.
  const auto finalized = run.stats.frames_released + run.stats.frames_dropped;
  if (finalized > seen.size()) return "frame finalized twice";
  if (run.stats.packets_late == 0 && finalized != seen.size()) return "frame neither released nor dropped";

  // Exact duplicates delivered alongside the original change nothing but
  // the duplicate and late counters.
  std::vector<JitterArrival> doubled;
  std::size_t injected = 0;
  for (const auto& a : s.arrivals) {
    doubled.push_back(a);
    if (rng() % 3 == 0) {
      doubled.push_back(a);
      ++injected;
    }
  }
  const auto dup = replay_jitter(s, doubled);
  if (dup.released != run.released) return "duplicates changed the released frames";
  if (dup.stats.packets_duplicate + dup.stats.packets_late !=
      run.stats.packets_duplicate + run.stats.packets_late + injected) {
    return "duplicates miscounted";
  }
  if (dup.stats.frames_dropped != run.stats.frames_dropped) return "duplicates changed the drop count";
  return {};
}

struct PropertyResult {
  std::size_t cases = 0;
  std::size_t clean_cases = 0;
  std::size_t lossy_cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return cases > 0 && failures == 0; }
};

inline PropertyResult check_jitter_properties(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PropertyResult r;
  for (std::size_t i = 0; i < n; ++i, ++r.cases) {
    const auto scenario = random_jitter_scenario(rng);
    r.clean_cases += scenario.clean;
    r.lossy_cases += !scenario.lossy.empty();
    const auto failure = check_jitter_scenario(scenario, rng);
    if (!failure.empty() && r.failures++ == 0) r.first_failure = "case " + std::to_string(i) + ": " + failure;
  }
  return r;
}

}  // namespace vlmedge::test
