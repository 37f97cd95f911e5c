#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlmedge/signaling/session_registry.hpp"

namespace vlmedge::test {

/// Bounded exhaustive comparison of SessionRegistry against a small
/// reference model of the negotiation state machine.
///
/// Two peers ("a" < "b") and seven operations. Every operation sequence up to
/// `depth` is replayed on a fresh registry; after each step the outcome
/// (success state or error code) must match the model and every observed
/// state change must be an allowed transition.
struct ModelCheckResult {
  std::size_t sequences = 0;
  std::size_t steps = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

enum class ModelOp { OfferA, OfferB, AnswerA, AnswerB, Candidate, Connect, Close };

struct ModelState {
  signaling::NegotiationState state = signaling::NegotiationState::New;
  std::optional<std::string> offerer;
};

struct ModelOutcome {
  signaling::NegotiationState state;
  std::optional<signaling::SignalingErrc> error;
};

inline ModelOutcome model_step(ModelState& m, ModelOp op) {
  using signaling::NegotiationState;
  using signaling::SignalingErrc;
  auto reject = [&](SignalingErrc e) { return ModelOutcome{m.state, e}; };
  auto accept = [&](NegotiationState next) {
    m.state = next;
    return ModelOutcome{next, std::nullopt};
  };
  switch (op) {
    case ModelOp::OfferA:
    case ModelOp::OfferB: {
      const std::string peer = op == ModelOp::OfferA ? "a" : "b";
      if (m.state == NegotiationState::New) {
        m.offerer = peer;
        return accept(NegotiationState::OfferSent);
      }
      if (m.state != NegotiationState::OfferSent || *m.offerer == peer) {
        return reject(SignalingErrc::InvalidTransition);
      }
      if (*m.offerer < peer) return reject(SignalingErrc::GlareResolved);
      m.offerer = peer;
      return accept(NegotiationState::OfferSent);
    }
    case ModelOp::AnswerA:
    case ModelOp::AnswerB: {
      const std::string peer = op == ModelOp::AnswerA ? "a" : "b";
      if (m.state != NegotiationState::OfferSent) return reject(SignalingErrc::InvalidTransition);
      if (*m.offerer == peer) return reject(SignalingErrc::WrongPeer);
      return accept(NegotiationState::Answered);
    }
    case ModelOp::Candidate:
      if (m.state == NegotiationState::OfferSent || m.state == NegotiationState::Answered ||
          m.state == NegotiationState::Connected) {
        return accept(m.state);
      }
      return reject(SignalingErrc::InvalidTransition);
    case ModelOp::Connect:
      if (m.state == NegotiationState::Connected || m.state == NegotiationState::Answered) {
        return accept(NegotiationState::Connected);
      }
      return reject(SignalingErrc::InvalidTransition);
    case ModelOp::Close:
      if (m.state == NegotiationState::Closed || m.state == NegotiationState::Failed) {
        return accept(m.state);
      }
      return accept(m.state == NegotiationState::Connected ? NegotiationState::Closed
                                                           : NegotiationState::Failed);
  }
  return reject(SignalingErrc::BadRequest);
}

inline ModelOutcome registry_step(signaling::SessionRegistry& registry, const std::string& id,
                                  ModelOp op) {
  try {
    signaling::Transition t;
    switch (op) {
      case ModelOp::OfferA: t = registry.submit_offer(id, "a", {{"sdp", "a"}}); break;
      case ModelOp::OfferB: t = registry.submit_offer(id, "b", {{"sdp", "b"}}); break;
      case ModelOp::AnswerA: t = registry.submit_answer(id, "a", {{"sdp", "a"}}); break;
      case ModelOp::AnswerB: t = registry.submit_answer(id, "b", {{"sdp", "b"}}); break;
      case ModelOp::Candidate: t = registry.add_candidate(id, "a", {"127.0.0.1", 5000, 10}); break;
      case ModelOp::Connect: t = registry.mark_connected(id, "b"); break;
      case ModelOp::Close: t = registry.close(id, "a"); break;
    }
    return {t.state, std::nullopt};
  } catch (const signaling::SignalingError& e) {
    return {registry.snapshot(id).state, e.code()};
  }
}

inline ModelCheckResult check_registry_against_model(std::size_t depth) {
  constexpr ModelOp kOps[] = {ModelOp::OfferA, ModelOp::OfferB,  ModelOp::AnswerA, ModelOp::AnswerB,
                              ModelOp::Candidate, ModelOp::Connect, ModelOp::Close};
  constexpr std::size_t kOpCount = std::size(kOps);
  ModelCheckResult result;
  std::vector<std::size_t> seq;
  // Enumerate every sequence of exactly `len` ops for len in 1..depth.
  for (std::size_t len = 1; len <= depth; ++len) {
    seq.assign(len, 0);
    while (true) {
      ++result.sequences;
      signaling::SessionRegistry registry;
      registry.register_peer("a");
      registry.register_peer("b");
      const auto id = registry.create_session("a", "b", {}).first.session_id;
      ModelState model;
      std::string trail;
      for (std::size_t i = 0; i < len; ++i) {
        const ModelOp op = kOps[seq[i]];
        trail += std::to_string(seq[i]);
        const auto before = registry.snapshot(id).state;
        const auto expected = model_step(model, op);
        const auto actual = registry_step(registry, id, op);
        ++result.steps;
        const bool same = expected.state == actual.state && expected.error == actual.error &&
                          registry.snapshot(id).offerer == model.offerer;
        const bool legal = before == actual.state ||
                           signaling::is_allowed_transition(before, actual.state);
        if (!same || !legal) {
          result.mismatches.push_back("ops " + trail + ": expected " +
                                      std::string(to_string(expected.state)) + " got " +
                                      std::string(to_string(actual.state)));
          break;
        }
      }
      std::size_t k = len;
      while (k > 0 && ++seq[k - 1] == kOpCount) seq[--k] = 0;
      if (k == 0) break;
    }
  }
  return result;
}

struct GlareOutcome {
  std::string offerer;
  std::string answerer;
  signaling::NegotiationState state;
  bool loser_rejected = false;
  bool loser_answer_ok = false;
};

/// Both peers offer; `first` reaches the registry before `second`.
inline GlareOutcome run_glare(const std::string& first, const std::string& second) {
  signaling::SessionRegistry registry;
  registry.register_peer(first);
  registry.register_peer(second);
  const auto id = registry.create_session(first, second, {}).first.session_id;
  GlareOutcome out;
  registry.submit_offer(id, first, {{"sdp", first}});
  try {
    registry.submit_offer(id, second, {{"sdp", second}});
  } catch (const signaling::SignalingError& e) {
    out.loser_rejected = e.code() == signaling::SignalingErrc::GlareResolved;
  }
  const auto snap = registry.snapshot(id);
  out.offerer = *snap.offerer;
  out.answerer = snap.descriptor.answer_peer;
  try {
    out.state = registry.submit_answer(id, out.answerer, {{"sdp", out.answerer}}).state;
    out.loser_answer_ok = out.state == signaling::NegotiationState::Answered;
  } catch (const signaling::SignalingError&) {
    out.state = registry.snapshot(id).state;
  }
  return out;
}

}  // namespace vlmedge::test
