#include <array>
#include <string>

#include "vlmedge/signaling/session_registry.hpp"

namespace vlmedge::signaling {

namespace {

constexpr std::array<std::pair<NegotiationState, std::string_view>, 7> kStateNames{{
    {NegotiationState::New, "NEW"},
    {NegotiationState::OfferSent, "OFFER_SENT"},
    {NegotiationState::OfferReceived, "OFFER_RECEIVED"},
    {NegotiationState::Answered, "ANSWERED"},
    {NegotiationState::Connected, "CONNECTED"},
    {NegotiationState::Closed, "CLOSED"},
    {NegotiationState::Failed, "FAILED"},
}};

constexpr std::array<std::pair<SignalingErrc, std::string_view>, 9> kErrcNames{{
    {SignalingErrc::UnknownPeer, "UnknownPeer"},
    {SignalingErrc::SelfSession, "SelfSession"},
    {SignalingErrc::UnknownSession, "UnknownSession"},
    {SignalingErrc::InvalidTransition, "InvalidTransition"},
    {SignalingErrc::GlareResolved, "GlareResolved"},
    {SignalingErrc::WrongPeer, "WrongPeer"},
    {SignalingErrc::DuplicatePeer, "DuplicatePeer"},
    {SignalingErrc::SignalingFailed, "SignalingFailed"},
    {SignalingErrc::BadRequest, "BadRequest"},
}};

}  // namespace

std::string_view to_string(NegotiationState state) {
  for (const auto& [s, name] : kStateNames) {
    if (s == state) return name;
  }
  return "UNKNOWN";
}

std::optional<NegotiationState> parse_state(std::string_view text) {
  for (const auto& [s, name] : kStateNames) {
    if (name == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(SignalingErrc code) {
  for (const auto& [c, name] : kErrcNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<SignalingErrc> parse_signaling_errc(std::string_view text) {
  for (const auto& [c, name] : kErrcNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

bool is_allowed_transition(NegotiationState from, NegotiationState to) {
  using S = NegotiationState;
  if (to == S::Failed) return from != S::Failed;
  switch (from) {
    case S::New: return to == S::OfferSent;
    case S::OfferSent: return to == S::Answered;
    case S::Answered: return to == S::Connected;
    case S::Connected: return to == S::Closed;
    default: return false;
  }
}

std::uint64_t pair_priority(std::uint32_t controlling, std::uint32_t controlled) {
  const std::uint64_t g = controlling;
  const std::uint64_t d = controlled;
  return (std::min(g, d) << 32) + 2 * std::max(g, d) + (g > d ? 1 : 0);
}

void to_json(nlohmann::json& j, const MediaParams& p) {
  j = {{"mtu_payload", p.mtu_payload}, {"initial_bitrate_kbps", p.initial_bitrate_kbps}};
}

void from_json(const nlohmann::json& j, MediaParams& p) {
  p.mtu_payload = j.value("mtu_payload", MediaParams{}.mtu_payload);
  p.initial_bitrate_kbps = j.value("initial_bitrate_kbps", MediaParams{}.initial_bitrate_kbps);
}

void to_json(nlohmann::json& j, const CandidateHint& c) {
  j = {{"address", c.address}, {"port", c.port}, {"priority", c.priority}};
}

void from_json(const nlohmann::json& j, CandidateHint& c) {
  c.address = j.at("address").get<std::string>();
  c.port = j.at("port").get<std::uint16_t>();
  c.priority = j.at("priority").get<std::uint32_t>();
}

void to_json(nlohmann::json& j, const SessionDescriptor& d) {
  j = {{"session_id", d.session_id},
       {"offer_peer", d.offer_peer},
       {"answer_peer", d.answer_peer},
       {"media_params", d.media},
       {"created_ts", d.created_ts_us}};
}

void from_json(const nlohmann::json& j, SessionDescriptor& d) {
  d.session_id = j.at("session_id").get<std::string>();
  d.offer_peer = j.at("offer_peer").get<std::string>();
  d.answer_peer = j.at("answer_peer").get<std::string>();
  d.media = j.value("media_params", MediaParams{});
  d.created_ts_us = j.value("created_ts", std::int64_t{0});
}

void PeerNegotiator::move(std::initializer_list<NegotiationState> from, NegotiationState to) {
  for (auto s : from) {
    if (s == state_) {
      state_ = to;
      return;
    }
  }
  throw SignalingError(SignalingErrc::InvalidTransition,
                       std::string("cannot move from ") + std::string(to_string(state_)) + " to " +
                           std::string(to_string(to)));
}

void PeerNegotiator::local_offer_accepted() { move({NegotiationState::New}, NegotiationState::OfferSent); }

void PeerNegotiator::remote_offer() {
  move({NegotiationState::New, NegotiationState::OfferSent}, NegotiationState::OfferReceived);
}

void PeerNegotiator::local_answer() {
  move({NegotiationState::OfferReceived}, NegotiationState::Answered);
}

void PeerNegotiator::remote_answer() { move({NegotiationState::OfferSent}, NegotiationState::Answered); }

void PeerNegotiator::connected() { move({NegotiationState::Answered}, NegotiationState::Connected); }

void PeerNegotiator::closed() { move({NegotiationState::Connected}, NegotiationState::Closed); }

void PeerNegotiator::failed() {
  if (state_ != NegotiationState::Failed) state_ = NegotiationState::Failed;
}

}  // namespace vlmedge::signaling
