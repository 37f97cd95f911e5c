#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/common/clock.hpp"
#include "vlmedge/signaling/types.hpp"

namespace vlmedge::signaling {

/// A control message the caller must deliver to `to_peer`.
struct Outbound {
  std::string to_peer;
  nlohmann::json body;
};

struct Transition {
  NegotiationState state = NegotiationState::New;
  std::vector<Outbound> outbound;
};

struct SessionSnapshot {
  SessionDescriptor descriptor;
  NegotiationState state = NegotiationState::New;
  std::optional<std::string> offerer;
  /// Per peer, sorted by priority descending.
  std::map<std::string, std::vector<CandidateHint>> candidates;
  std::int64_t last_progress_us = 0;

  /// The state as seen by `peer` (OfferReceived for the non-offerer).
  NegotiationState state_for(const std::string& peer) const;
};

/// Peer registry and per-session negotiation state machine.
///
/// Holds no sockets; every mutation returns the notifications to relay.
/// All methods are serialized by an internal mutex.
class SessionRegistry {
 public:
  explicit SessionRegistry(const Clock& clock = steady_clock(),
                           std::chrono::milliseconds stale_after = std::chrono::seconds(60));

  /// Throws DuplicatePeer if `peer` is already registered.
  void register_peer(const std::string& peer);

  /// Fails every live session of `peer` and returns the notifications for
  /// the remaining participants.
  std::vector<Outbound> unregister_peer(const std::string& peer);

  bool has_peer(const std::string& peer) const;

  /// Creates a session in New. Notifies `peer_b` with "session_created".
  std::pair<SessionDescriptor, std::vector<Outbound>> create_session(const std::string& peer_a,
                                                                     const std::string& peer_b,
                                                                     const MediaParams& media);

  /// New -> OfferSent and relay to the other peer. When both peers offer, the
  /// lexicographically smaller peer id stays offerer: a losing late offer
  /// throws GlareResolved, a winning late offer displaces the earlier one and
  /// the displaced peer is told to answer instead.
  Transition submit_offer(const std::string& session_id, const std::string& from,
                          const nlohmann::json& offer);

  /// OfferSent -> Answered. The offerer may not answer its own offer.
  Transition submit_answer(const std::string& session_id, const std::string& from,
                           const nlohmann::json& answer);

  /// Valid from OfferSent up to Connected.
  Transition add_candidate(const std::string& session_id, const std::string& from,
                           const CandidateHint& hint);

  /// Answered -> Connected after the media/data handshake. Repeats are no-ops.
  Transition mark_connected(const std::string& session_id, const std::string& from);

  /// Connected -> Closed; closing a session that never connected fails it.
  Transition close(const std::string& session_id, const std::string& from);

  Transition fail(const std::string& session_id, const std::string& reason);

  /// Fails and forgets sessions stuck in New/OfferSent past the staleness
  /// limit, and forgets terminal sessions older than the same limit.
  std::vector<Outbound> collect_garbage();

  SessionSnapshot snapshot(const std::string& session_id) const;
  std::size_t session_count() const;

 private:
  struct Session {
    SessionSnapshot data;
    std::string peer_a;
    std::string peer_b;
  };

  Session& find(const std::string& session_id);
  const Session& find(const std::string& session_id) const;
  static const std::string& other_peer(const Session& s, const std::string& peer);
  void require_participant(const Session& s, const std::string& peer) const;
  std::vector<Outbound> notify_state(const Session& s, const std::string& reason = {}) const;
  void set_state(Session& s, NegotiationState next);

  const Clock& clock_;
  std::int64_t stale_after_us_;
  mutable std::mutex mutex_;
  std::set<std::string> peers_;
  std::map<std::string, Session> sessions_;
  std::uint64_t next_session_ = 1;
};

/// One peer's local view of its negotiation, used by clients to validate the
/// notifications they receive.
class PeerNegotiator {
 public:
  NegotiationState state() const { return state_; }

  void local_offer_accepted();  // New -> OfferSent
  void remote_offer();          // New -> OfferReceived; OfferSent -> OfferReceived after losing glare
  void local_answer();          // OfferReceived -> Answered
  void remote_answer();         // OfferSent -> Answered
  void connected();             // Answered -> Connected
  void closed();                // Connected -> Closed
  void failed();                // any -> Failed

 private:
  void move(std::initializer_list<NegotiationState> from, NegotiationState to);

  NegotiationState state_ = NegotiationState::New;
};

}  // namespace vlmedge::signaling
