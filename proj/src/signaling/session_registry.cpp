#include "vlmedge/signaling/session_registry.hpp"

#include <algorithm>
#include <cstdio>

namespace vlmedge::signaling {

using nlohmann::json;

namespace {

std::string state_name(NegotiationState s) { return std::string(to_string(s)); }

[[noreturn]] void invalid(const std::string& what, NegotiationState state) {
  throw SignalingError(SignalingErrc::InvalidTransition, what + " not allowed in " + state_name(state));
}

json control(std::string op, const std::string& session_id) {
  return {{"type", "control"}, {"op", std::move(op)}, {"session_id", session_id}};
}

}  // namespace

NegotiationState SessionSnapshot::state_for(const std::string& peer) const {
  if (state == NegotiationState::OfferSent && offerer && *offerer != peer) {
    return NegotiationState::OfferReceived;
  }
  return state;
}

SessionRegistry::SessionRegistry(const Clock& clock, std::chrono::milliseconds stale_after)
    : clock_(clock), stale_after_us_(stale_after.count() * 1000) {}

void SessionRegistry::register_peer(const std::string& peer) {
  if (peer.empty()) throw SignalingError(SignalingErrc::BadRequest, "peer id must not be empty");
  std::lock_guard lock(mutex_);
  if (!peers_.insert(peer).second) {
    throw SignalingError(SignalingErrc::DuplicatePeer, "peer '" + peer + "' already registered");
  }
}

std::vector<Outbound> SessionRegistry::unregister_peer(const std::string& peer) {
  std::lock_guard lock(mutex_);
  std::vector<Outbound> out;
  if (peers_.erase(peer) == 0) return out;
  for (auto& [id, session] : sessions_) {
    if (session.peer_a != peer && session.peer_b != peer) continue;
    const auto state = session.data.state;
    if (state == NegotiationState::Closed || state == NegotiationState::Failed) continue;
    set_state(session, NegotiationState::Failed);
    auto body = control("state", id);
    body["state"] = state_name(NegotiationState::Failed);
    body["reason"] = "peer_left";
    out.push_back({other_peer(session, peer), std::move(body)});
  }
  return out;
}

bool SessionRegistry::has_peer(const std::string& peer) const {
  std::lock_guard lock(mutex_);
  return peers_.count(peer) != 0;
}

std::pair<SessionDescriptor, std::vector<Outbound>> SessionRegistry::create_session(
    const std::string& peer_a, const std::string& peer_b, const MediaParams& media) {
  std::lock_guard lock(mutex_);
  for (const auto* peer : {&peer_a, &peer_b}) {
    if (peers_.count(*peer) == 0) {
      throw SignalingError(SignalingErrc::UnknownPeer, "peer '" + *peer + "' is not registered");
    }
  }
  if (peer_a == peer_b) {
    throw SignalingError(SignalingErrc::SelfSession, "peer '" + peer_a + "' cannot session with itself");
  }

  char id[32];
  std::snprintf(id, sizeof id, "sess-%06llu", static_cast<unsigned long long>(next_session_++));
  Session session;
  session.peer_a = peer_a;
  session.peer_b = peer_b;
  session.data.descriptor = {id, peer_a, peer_b, media, clock_.now_us()};
  session.data.last_progress_us = session.data.descriptor.created_ts_us;
  const SessionDescriptor descriptor = session.data.descriptor;
  sessions_.emplace(descriptor.session_id, std::move(session));

  auto body = control("session_created", descriptor.session_id);
  body["session"] = descriptor;
  return {descriptor, {{peer_b, std::move(body)}}};
}

Transition SessionRegistry::submit_offer(const std::string& session_id, const std::string& from,
                                         const json& offer) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  require_participant(s, from);
  Transition t;

  auto relay_offer = [&](const std::string& offerer) {
    auto body = control("offer", session_id);
    body["from"] = offerer;
    body["body"] = offer;
    t.outbound.push_back({other_peer(s, offerer), std::move(body)});
  };

  switch (s.data.state) {
    case NegotiationState::New:
      s.data.offerer = from;
      s.data.descriptor.offer_peer = from;
      s.data.descriptor.answer_peer = other_peer(s, from);
      set_state(s, NegotiationState::OfferSent);
      relay_offer(from);
      break;
    case NegotiationState::OfferSent: {
      const std::string current = *s.data.offerer;
      if (current == from) invalid("repeated offer", s.data.state);
      if (current < from) {
        throw SignalingError(SignalingErrc::GlareResolved,
                             "glare: '" + current + "' remains offerer; answer its offer instead");
      }
      s.data.offerer = from;
      s.data.descriptor.offer_peer = from;
      s.data.descriptor.answer_peer = current;
      s.data.last_progress_us = clock_.now_us();
      auto notice = control("glare_resolved", session_id);
      notice["offerer"] = from;
      t.outbound.push_back({current, std::move(notice)});
      relay_offer(from);
      break;
    }
    default:
      invalid("offer", s.data.state);
  }
  t.state = s.data.state;
  return t;
}

Transition SessionRegistry::submit_answer(const std::string& session_id, const std::string& from,
                                          const json& answer) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  require_participant(s, from);
  if (s.data.state != NegotiationState::OfferSent) invalid("answer", s.data.state);
  if (*s.data.offerer == from) {
    throw SignalingError(SignalingErrc::WrongPeer, "offerer '" + from + "' cannot answer its own offer");
  }
  set_state(s, NegotiationState::Answered);
  Transition t;
  t.state = s.data.state;
  auto body = control("answer", session_id);
  body["from"] = from;
  body["body"] = answer;
  t.outbound.push_back({*s.data.offerer, std::move(body)});
  auto more = notify_state(s);
  t.outbound.insert(t.outbound.end(), more.begin(), more.end());
  return t;
}

Transition SessionRegistry::add_candidate(const std::string& session_id, const std::string& from,
                                          const CandidateHint& hint) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  require_participant(s, from);
  const auto state = s.data.state;
  if (state != NegotiationState::OfferSent && state != NegotiationState::Answered &&
      state != NegotiationState::Connected) {
    invalid("candidate", state);
  }
  auto& list = s.data.candidates[from];
  list.push_back(hint);
  std::stable_sort(list.begin(), list.end(),
                   [](const CandidateHint& a, const CandidateHint& b) { return a.priority > b.priority; });
  s.data.last_progress_us = clock_.now_us();

  Transition t;
  t.state = state;
  auto body = control("candidate", session_id);
  body["from"] = from;
  body["candidate"] = hint;
  t.outbound.push_back({other_peer(s, from), std::move(body)});
  return t;
}

Transition SessionRegistry::mark_connected(const std::string& session_id, const std::string& from) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  require_participant(s, from);
  Transition t;
  if (s.data.state == NegotiationState::Connected) {
    t.state = s.data.state;
    return t;
  }
  if (s.data.state != NegotiationState::Answered) invalid("connect", s.data.state);
  set_state(s, NegotiationState::Connected);
  t.state = s.data.state;
  t.outbound = notify_state(s);
  return t;
}

Transition SessionRegistry::close(const std::string& session_id, const std::string& from) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  require_participant(s, from);
  Transition t;
  switch (s.data.state) {
    case NegotiationState::Closed:
    case NegotiationState::Failed:
      t.state = s.data.state;
      return t;
    case NegotiationState::Connected:
      set_state(s, NegotiationState::Closed);
      break;
    default:
      set_state(s, NegotiationState::Failed);
  }
  t.state = s.data.state;
  t.outbound = notify_state(s, "closed_by_" + from);
  return t;
}

Transition SessionRegistry::fail(const std::string& session_id, const std::string& reason) {
  std::lock_guard lock(mutex_);
  Session& s = find(session_id);
  Transition t;
  if (s.data.state != NegotiationState::Failed && s.data.state != NegotiationState::Closed) {
    set_state(s, NegotiationState::Failed);
    t.outbound = notify_state(s, reason);
  }
  t.state = s.data.state;
  return t;
}

std::vector<Outbound> SessionRegistry::collect_garbage() {
  std::lock_guard lock(mutex_);
  const std::int64_t now = clock_.now_us();
  std::vector<Outbound> out;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    Session& s = it->second;
    const bool stale = now - s.data.last_progress_us >= stale_after_us_;
    const auto state = s.data.state;
    if (stale && (state == NegotiationState::New || state == NegotiationState::OfferSent)) {
      set_state(s, NegotiationState::Failed);
      auto more = notify_state(s, "expired");
      out.insert(out.end(), more.begin(), more.end());
      it = sessions_.erase(it);
    } else if (stale && (state == NegotiationState::Closed || state == NegotiationState::Failed)) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

SessionSnapshot SessionRegistry::snapshot(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return find(session_id).data;
}

std::size_t SessionRegistry::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

SessionRegistry::Session& SessionRegistry::find(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw SignalingError(SignalingErrc::UnknownSession, "unknown session '" + session_id + "'");
  }
  return it->second;
}

const SessionRegistry::Session& SessionRegistry::find(const std::string& session_id) const {
  return const_cast<SessionRegistry*>(this)->find(session_id);
}

const std::string& SessionRegistry::other_peer(const Session& s, const std::string& peer) {
  return s.peer_a == peer ? s.peer_b : s.peer_a;
}

void SessionRegistry::require_participant(const Session& s, const std::string& peer) const {
  if (peer != s.peer_a && peer != s.peer_b) {
    throw SignalingError(SignalingErrc::WrongPeer,
                         "peer '" + peer + "' is not part of " + s.data.descriptor.session_id);
  }
}

std::vector<Outbound> SessionRegistry::notify_state(const Session& s, const std::string& reason) const {
  std::vector<Outbound> out;
  for (const auto* peer : {&s.peer_a, &s.peer_b}) {
    auto body = control("state", s.data.descriptor.session_id);
    body["state"] = state_name(s.data.state_for(*peer));
    if (!reason.empty()) body["reason"] = reason;
    out.push_back({*peer, std::move(body)});
  }
  return out;
}

void SessionRegistry::set_state(Session& s, NegotiationState next) {
  s.data.state = next;
  s.data.last_progress_us = clock_.now_us();
}

}  // namespace vlmedge::signaling
