#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/error.hpp"

namespace vlmedge::signaling {

/// Negotiation progress. The registry tracks one shared state per session;
/// OfferSent and OfferReceived are the offerer's and answerer's views of the
/// same pending-offer step.
enum class NegotiationState { New, OfferSent, OfferReceived, Answered, Connected, Closed, Failed };

std::string_view to_string(NegotiationState state);
std::optional<NegotiationState> parse_state(std::string_view text);

/// Transition relation on the registry's session state:
/// New -> OfferSent -> Answered -> Connected -> Closed, and any non-failed
/// state -> Failed.
bool is_allowed_transition(NegotiationState from, NegotiationState to);

enum class SignalingErrc {
  UnknownPeer,
  SelfSession,
  UnknownSession,
  InvalidTransition,
  GlareResolved,
  WrongPeer,
  DuplicatePeer,
  SignalingFailed,
  BadRequest,
};

std::string_view to_string(SignalingErrc code);
std::optional<SignalingErrc> parse_signaling_errc(std::string_view text);

using SignalingError = CodedError<SignalingErrc>;

struct MediaParams {
  std::uint16_t mtu_payload = 1200;
  std::uint32_t initial_bitrate_kbps = 2000;

  bool operator==(const MediaParams&) const = default;
};

/// Prioritized transport address hint standing in for an ICE candidate.
struct CandidateHint {
  std::string address;
  std::uint16_t port = 0;
  std::uint32_t priority = 0;

  bool operator==(const CandidateHint&) const = default;
};

struct SessionDescriptor {
  std::string session_id;
  std::string offer_peer;
  std::string answer_peer;
  MediaParams media;
  std::int64_t created_ts_us = 0;
};

void to_json(nlohmann::json& j, const MediaParams& p);
void from_json(const nlohmann::json& j, MediaParams& p);
void to_json(nlohmann::json& j, const CandidateHint& c);
void from_json(const nlohmann::json& j, CandidateHint& c);
void to_json(nlohmann::json& j, const SessionDescriptor& d);
void from_json(const nlohmann::json& j, SessionDescriptor& d);

/// Orders candidate pairs by the ICE pair-priority formula and returns the
/// first pair for which `reachable(local, remote)` holds.
template <typename Reachable>
std::optional<std::pair<CandidateHint, CandidateHint>> select_candidate_pair(
    const std::vector<CandidateHint>& local, const std::vector<CandidateHint>& remote,
    Reachable&& reachable);

std::uint64_t pair_priority(std::uint32_t controlling, std::uint32_t controlled);

}  // namespace vlmedge::signaling

#include <algorithm>

namespace vlmedge::signaling {

template <typename Reachable>
std::optional<std::pair<CandidateHint, CandidateHint>> select_candidate_pair(
    const std::vector<CandidateHint>& local, const std::vector<CandidateHint>& remote,
    Reachable&& reachable) {
  std::vector<std::pair<std::uint64_t, std::pair<const CandidateHint*, const CandidateHint*>>> pairs;
  for (const auto& l : local) {
    for (const auto& r : remote) pairs.push_back({pair_priority(l.priority, r.priority), {&l, &r}});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [priority, pair] : pairs) {
    if (reachable(*pair.first, *pair.second)) return std::make_pair(*pair.first, *pair.second);
  }
  return std::nullopt;
}

}  // namespace vlmedge::signaling
