#include <gtest/gtest.h>

#include "support/signaling_model.hpp"
#include "vlmedge/signaling/session_registry.hpp"

namespace vlmedge::signaling {
namespace {

using nlohmann::json;

class RegistryTest : public ::testing::Test {
 protected:
  void SetUp() override {
    registry.register_peer("gw1");
    registry.register_peer("robot1");
    id = registry.create_session("robot1", "gw1", {}).first.session_id;
  }

  void connect() {
    registry.submit_offer(id, "robot1", {{"fps", 10}});
    registry.submit_answer(id, "gw1", {{"media_port", 5000}});
    registry.mark_connected(id, "robot1");
  }

  SignalingErrc error_of(const std::function<void()>& action) {
    try {
      action();
    } catch (const SignalingError& e) {
      return e.code();
    }
    ADD_FAILURE() << "expected a SignalingError";
    return SignalingErrc::BadRequest;
  }

  ManualClock clock{1'000'000};
  SessionRegistry registry{clock, std::chrono::seconds(10)};
  std::string id;
};

TEST_F(RegistryTest, HappyPathReachesClosed) {
  const auto offer = registry.submit_offer(id, "robot1", {{"fps", 10}});
  EXPECT_EQ(offer.state, NegotiationState::OfferSent);
  ASSERT_EQ(offer.outbound.size(), 1u);
  EXPECT_EQ(offer.outbound[0].to_peer, "gw1");
  EXPECT_EQ(offer.outbound[0].body.at("op"), "offer");
  EXPECT_EQ(offer.outbound[0].body.at("body").at("fps"), 10);
  EXPECT_EQ(registry.snapshot(id).state_for("gw1"), NegotiationState::OfferReceived);
  EXPECT_EQ(registry.snapshot(id).state_for("robot1"), NegotiationState::OfferSent);

  const auto answer = registry.submit_answer(id, "gw1", {{"media_port", 5000}});
  EXPECT_EQ(answer.state, NegotiationState::Answered);
  EXPECT_EQ(answer.outbound.front().to_peer, "robot1");
  EXPECT_EQ(registry.mark_connected(id, "robot1").state, NegotiationState::Connected);
  EXPECT_EQ(registry.mark_connected(id, "gw1").state, NegotiationState::Connected);
  EXPECT_EQ(registry.close(id, "robot1").state, NegotiationState::Closed);
}

TEST_F(RegistryTest, CandidatesSortedByPriority) {
  registry.submit_offer(id, "robot1", {});
  registry.add_candidate(id, "gw1", {"127.0.0.1", 5000, 10});
  registry.add_candidate(id, "gw1", {"127.0.0.1", 5001, 50});
  const auto list = registry.snapshot(id).candidates.at("gw1");
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].priority, 50u);
  EXPECT_EQ(list[1].priority, 10u);
}

TEST_F(RegistryTest, CandidateAfterCloseRejected) {
  connect();
  registry.close(id, "gw1");
  EXPECT_EQ(error_of([&] { registry.add_candidate(id, "gw1", {"127.0.0.1", 5000, 1}); }),
            SignalingErrc::InvalidTransition);
}

TEST_F(RegistryTest, CandidateBeforeOfferRejected) {
  EXPECT_EQ(error_of([&] { registry.add_candidate(id, "gw1", {"127.0.0.1", 5000, 1}); }),
            SignalingErrc::InvalidTransition);
}

TEST_F(RegistryTest, OfferWhenConnectedRejected) {
  connect();
  EXPECT_EQ(error_of([&] { registry.submit_offer(id, "gw1", {}); }),
            SignalingErrc::InvalidTransition);
  EXPECT_EQ(registry.snapshot(id).state, NegotiationState::Connected);
}

TEST_F(RegistryTest, OffererCannotAnswer) {
  registry.submit_offer(id, "robot1", {});
  EXPECT_EQ(error_of([&] { registry.submit_answer(id, "robot1", {}); }), SignalingErrc::WrongPeer);
}

TEST_F(RegistryTest, AnswerWithoutOfferRejected) {
  EXPECT_EQ(error_of([&] { registry.submit_answer(id, "gw1", {}); }),
            SignalingErrc::InvalidTransition);
}

TEST_F(RegistryTest, RepeatedOfferRejected) {
  registry.submit_offer(id, "robot1", {});
  EXPECT_EQ(error_of([&] { registry.submit_offer(id, "robot1", {}); }),
            SignalingErrc::InvalidTransition);
}

TEST_F(RegistryTest, ConnectBeforeAnswerRejected) {
  registry.submit_offer(id, "robot1", {});
  EXPECT_EQ(error_of([&] { registry.mark_connected(id, "gw1"); }), SignalingErrc::InvalidTransition);
}

TEST_F(RegistryTest, CloseBeforeConnectFails) {
  registry.submit_offer(id, "robot1", {});
  const auto t = registry.close(id, "gw1");
  EXPECT_EQ(t.state, NegotiationState::Failed);
  EXPECT_EQ(t.outbound.size(), 2u);
  EXPECT_EQ(t.outbound[0].body.at("reason"), "closed_by_gw1");
}

TEST_F(RegistryTest, OutsiderAndUnknownSession) {
  registry.register_peer("intruder");
  EXPECT_EQ(error_of([&] { registry.submit_offer(id, "intruder", {}); }), SignalingErrc::WrongPeer);
  EXPECT_EQ(error_of([&] { registry.submit_offer("sess-999999", "gw1", {}); }),
            SignalingErrc::UnknownSession);
}

TEST_F(RegistryTest, PeerValidation) {
  EXPECT_EQ(error_of([&] { registry.register_peer("gw1"); }), SignalingErrc::DuplicatePeer);
  EXPECT_EQ(error_of([&] { registry.register_peer(""); }), SignalingErrc::BadRequest);
  EXPECT_EQ(error_of([&] { registry.create_session("robot1", "nobody", {}); }),
            SignalingErrc::UnknownPeer);
  EXPECT_EQ(error_of([&] { registry.create_session("gw1", "gw1", {}); }),
            SignalingErrc::SelfSession);
}

TEST_F(RegistryTest, SessionIdsAreSequential) {
  const auto second = registry.create_session("robot1", "gw1", {}).first.session_id;
  EXPECT_EQ(id, "sess-000001");
  EXPECT_EQ(second, "sess-000002");
}

TEST_F(RegistryTest, UnregisterFailsLiveSessions) {
  registry.submit_offer(id, "robot1", {});
  const auto out = registry.unregister_peer("robot1");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].to_peer, "gw1");
  EXPECT_EQ(out[0].body.at("state"), "FAILED");
  EXPECT_EQ(out[0].body.at("reason"), "peer_left");
  EXPECT_FALSE(registry.has_peer("robot1"));
}

TEST_F(RegistryTest, GarbageCollectionExpiresStalledSessions) {
  registry.submit_offer(id, "robot1", {});
  clock.advance_ms(9'000);
  EXPECT_TRUE(registry.collect_garbage().empty());
  clock.advance_ms(1'000);
  const auto out = registry.collect_garbage();
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].body.at("reason"), "expired");
  EXPECT_EQ(registry.session_count(), 0u);
}

TEST_F(RegistryTest, GarbageCollectionKeepsConnectedSessions) {
  connect();
  clock.advance_ms(60'000);
  EXPECT_TRUE(registry.collect_garbage().empty());
  EXPECT_EQ(registry.session_count(), 1u);
}

TEST(Registry, MatchesReferenceModelExhaustively) {
  const auto result = test::check_registry_against_model(6);
  EXPECT_TRUE(result.ok()) << result.mismatches.front();
  EXPECT_EQ(result.sequences, 7u + 49u + 343u + 2401u + 16807u + 117649u);
}

TEST(Registry, GlareResolutionIndependentOfArrivalOrder) {
  const auto forward = test::run_glare("alpha", "beta");
  const auto swapped = test::run_glare("beta", "alpha");
  EXPECT_EQ(forward.offerer, "alpha");
  EXPECT_EQ(swapped.offerer, "alpha");
  EXPECT_EQ(forward.answerer, "beta");
  EXPECT_EQ(swapped.answerer, "beta");
  EXPECT_TRUE(forward.loser_rejected);
  EXPECT_FALSE(swapped.loser_rejected);
  EXPECT_TRUE(forward.loser_answer_ok);
  EXPECT_TRUE(swapped.loser_answer_ok);
}

TEST(Registry, GlareNotifiesDisplacedOfferer) {
  SessionRegistry registry;
  registry.register_peer("alpha");
  registry.register_peer("beta");
  const auto id = registry.create_session("alpha", "beta", {}).first.session_id;
  registry.submit_offer(id, "beta", {});
  const auto t = registry.submit_offer(id, "alpha", {});
  ASSERT_EQ(t.outbound.size(), 2u);
  EXPECT_EQ(t.outbound[0].to_peer, "beta");
  EXPECT_EQ(t.outbound[0].body.at("op"), "glare_resolved");
  EXPECT_EQ(t.outbound[1].body.at("op"), "offer");
  EXPECT_EQ(t.outbound[1].body.at("from"), "alpha");
}

TEST(Transitions, AllowedRelation) {
  using S = NegotiationState;
  EXPECT_TRUE(is_allowed_transition(S::New, S::OfferSent));
  EXPECT_TRUE(is_allowed_transition(S::OfferSent, S::Answered));
  EXPECT_TRUE(is_allowed_transition(S::Answered, S::Connected));
  EXPECT_TRUE(is_allowed_transition(S::Connected, S::Closed));
  EXPECT_TRUE(is_allowed_transition(S::New, S::Failed));
  EXPECT_FALSE(is_allowed_transition(S::New, S::Connected));
  EXPECT_FALSE(is_allowed_transition(S::Failed, S::Failed));
  EXPECT_FALSE(is_allowed_transition(S::Connected, S::OfferSent));
}

TEST(Transitions, StateNamesRoundTrip) {
  for (auto s : {NegotiationState::New, NegotiationState::OfferSent, NegotiationState::OfferReceived,
                 NegotiationState::Answered, NegotiationState::Connected, NegotiationState::Closed,
                 NegotiationState::Failed}) {
    EXPECT_EQ(parse_state(to_string(s)), s);
  }
  EXPECT_EQ(to_string(NegotiationState::OfferSent), "OFFER_SENT");
  EXPECT_FALSE(parse_state("bogus").has_value());
}

TEST(PeerNegotiator, OffererAndAnswererPaths) {
  PeerNegotiator offerer;
  offerer.local_offer_accepted();
  offerer.remote_answer();
  offerer.connected();
  offerer.closed();
  EXPECT_EQ(offerer.state(), NegotiationState::Closed);

  PeerNegotiator answerer;
  answerer.remote_offer();
  answerer.local_answer();
  EXPECT_EQ(answerer.state(), NegotiationState::Answered);
  answerer.failed();
  EXPECT_EQ(answerer.state(), NegotiationState::Failed);
}

TEST(PeerNegotiator, GlareLoserBecomesAnswerer) {
  PeerNegotiator peer;
  peer.local_offer_accepted();
  peer.remote_offer();
  EXPECT_EQ(peer.state(), NegotiationState::OfferReceived);
}

TEST(PeerNegotiator, RejectsOutOfOrderSteps) {
  PeerNegotiator peer;
  EXPECT_THROW(peer.connected(), SignalingError);
  EXPECT_THROW(peer.local_answer(), SignalingError);
  EXPECT_EQ(peer.state(), NegotiationState::New);
}

TEST(Candidates, PairPriorityFormula) {
  EXPECT_EQ(pair_priority(100, 10), (10ull << 32) + 200 + 1);
  EXPECT_EQ(pair_priority(10, 100), (10ull << 32) + 200);
}

TEST(Candidates, SelectsHighestReachablePair) {
  const std::vector<CandidateHint> local{{"10.0.0.1", 1, 10}, {"127.0.0.1", 2, 100}};
  const std::vector<CandidateHint> remote{{"10.0.0.2", 3, 50}, {"127.0.0.1", 4, 100}};
  const auto best = select_candidate_pair(local, remote, [](auto&, auto&) { return true; });
  ASSERT_TRUE(best.has_value());
  EXPECT_EQ(best->first.port, 2);
  EXPECT_EQ(best->second.port, 4);

  const auto loopback = select_candidate_pair(
      local, remote, [](const CandidateHint& l, const CandidateHint& r) {
        return l.address == "10.0.0.1" && r.address == "10.0.0.2";
      });
  ASSERT_TRUE(loopback.has_value());
  EXPECT_EQ(loopback->first.port, 1);
  EXPECT_FALSE(select_candidate_pair(local, remote, [](auto&, auto&) { return false; }));
}

TEST(Candidates, JsonRoundTrip) {
  const CandidateHint hint{"127.0.0.1", 5000, 42};
  EXPECT_EQ(json(hint).get<CandidateHint>(), hint);
  const MediaParams media{1000, 500};
  EXPECT_EQ(json(media).get<MediaParams>(), media);
}

}  // namespace
}  // namespace vlmedge::signaling
