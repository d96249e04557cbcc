#include <gtest/gtest.h>

#include "irrigation/protocol.hpp"
#include "irrigation/random.hpp"
#include "irrigation/session.hpp"

using namespace irrigation;
using namespace irrigation::telemetry;

namespace {

const control::CycleConfig kCfg;

template <typename T>
bool is(const Event& e) {
  return std::holds_alternative<T>(e.body);
}

ControlSession rule_session() { return ControlSession(control::RuleOnlyMode{}, kCfg, std::nullopt, 0); }

}  // namespace

TEST(Session, StartsWithModeEvent) {
  const auto s = rule_session();
  ASSERT_EQ(s.events().size(), 1u);
  EXPECT_EQ(s.events()[0].body, (EventBody{ModeChanged{control::RuleOnlyMode{}, "startup"}}));
  EXPECT_EQ(s.status().mode, (control::ControllerMode{control::RuleOnlyMode{}}));
  EXPECT_THROW(ControlSession(control::AutoMode{}, kCfg, std::nullopt, 0), control::ConfigurationError);
}

TEST(Session, DryReadingPumpsFull) {
  auto s = rule_session();
  const auto out = s.handle_reading({20, 30, 5, 1}, 1000);
  ASSERT_TRUE(out.accepted());
  ASSERT_EQ(out.events.size(), 3u);
  EXPECT_EQ(out.events[0].body, (EventBody{ReadingRecorded{{20, 30, 5, 1}}}));
  EXPECT_EQ(out.events[1].body, (EventBody{DecisionMade{PumpDuty::Full, 10000, control::RuleOnlyMode{}}}));
  EXPECT_EQ(out.events[2].body, (EventBody{PumpStateChanged{true, PumpDuty::Full, 10000}}));
  ASSERT_TRUE(out.broadcast);
  EXPECT_TRUE(out.broadcast->pumping);
  EXPECT_EQ(out.broadcast->remaining_ms, 10000);
  EXPECT_EQ(out.broadcast->pump_deadline_ms, 11000);
}

TEST(Session, WetReadingRecordsOffDecision) {
  auto s = rule_session();
  const auto out = s.handle_reading({40, 80, 25, 1}, 1000);
  ASSERT_EQ(out.events.size(), 2u);
  EXPECT_TRUE(is<ReadingRecorded>(out.events[0]));
  EXPECT_EQ(out.events[1].body, (EventBody{DecisionMade{PumpDuty::Off, 0, control::RuleOnlyMode{}}}));
  EXPECT_TRUE(out.broadcast);
}

TEST(Session, InvalidReadingRejectedWithoutEvents) {
  auto s = rule_session();
  const auto out = s.handle_reading({20, 140, 5, 1}, 1000);
  EXPECT_FALSE(out.accepted());
  EXPECT_TRUE(out.events.empty());
  EXPECT_FALSE(out.broadcast);
  EXPECT_EQ(s.events().size(), 1u);
}

TEST(Session, OverrideExamples) {
  auto s = rule_session();
  auto on = s.handle_override(PumpDuty::Full, "test", 500);
  ASSERT_EQ(on.events.size(), 3u);
  EXPECT_EQ(on.events[0].body, (EventBody{OverrideReceived{PumpDuty::Full, "test"}}));
  EXPECT_TRUE(is<DecisionMade>(on.events[1]));
  EXPECT_EQ(on.events[2].body, (EventBody{PumpStateChanged{true, PumpDuty::Full, 10000}}));
  EXPECT_TRUE(on.broadcast->pumping);

  auto off = s.handle_override(PumpDuty::Off, "test", 3500);
  ASSERT_EQ(off.events.size(), 3u);
  EXPECT_TRUE(is<OverrideReceived>(off.events[0]));
  EXPECT_EQ(off.events[1].body, (EventBody{PumpStateChanged{false, PumpDuty::Off, 0}}));
  EXPECT_TRUE(is<DecisionMade>(off.events[2]));
  EXPECT_FALSE(off.broadcast->pumping);
  EXPECT_EQ(off.broadcast->mode, (control::ControllerMode{control::ManualMode{PumpDuty::Off}}));

  // revert to rule mode, wait out the gap, the loop runs again
  auto mode = s.handle_mode(control::RuleOnlyMode{}, "test", 4000);
  ASSERT_TRUE(mode.accepted());
  auto again = s.handle_reading({20, 30, 5, 9000}, 9000);
  EXPECT_TRUE(again.broadcast->pumping);
}

TEST(Session, ModeValidation) {
  auto s = rule_session();
  EXPECT_FALSE(s.handle_mode(control::AutoMode{}, "x", 10).accepted());
  EXPECT_FALSE(s.handle_mode(control::ManualMode{PumpDuty::Full}, "x", 10).accepted());
  EXPECT_EQ(s.events().size(), 1u);
}

TEST(Session, TickStopsPumpAtDeadline) {
  auto s = rule_session();
  (void)s.handle_reading({20, 30, 5, 0}, 0);
  EXPECT_TRUE(s.tick(9999).events.empty());
  EXPECT_FALSE(s.tick(9999).broadcast);
  const auto stop = s.tick(10000);
  ASSERT_EQ(stop.events.size(), 1u);
  EXPECT_EQ(stop.events[0].body, (EventBody{PumpStateChanged{false, PumpDuty::Off, 0}}));
  EXPECT_TRUE(stop.broadcast);
}

TEST(Session, ClockGoingBackwardsIsClamped) {
  auto s = rule_session();
  (void)s.handle_reading({40, 80, 25, 0}, 5000);
  const auto out = s.handle_reading({40, 80, 25, 0}, 4000);
  ASSERT_TRUE(out.accepted());
  EXPECT_EQ(out.events.front().at_ms, 5000);
}

TEST(Replay, EmptyLogIsInitialStatus) {
  EXPECT_EQ(replay({}), ServerStatus{});
}

TEST(Replay, DetectsGaps) {
  auto s = rule_session();
  (void)s.handle_reading({20, 30, 5, 0}, 0);
  std::vector<Event> log = s.events();
  log.erase(log.begin() + 2);
  EXPECT_THROW((void)replay(log), SequenceGap);
  std::vector<Event> late(s.events().begin() + 1, s.events().end());
  EXPECT_THROW((void)replay(late), SequenceGap);
}

namespace {

// Random session: readings, overrides, mode switches and ticks.
void drive(ControlSession& s, Rng& rng, std::int64_t& t, int steps, std::vector<ServerStatus>* after,
           std::vector<std::size_t>* sizes) {
  for (int i = 0; i < steps; ++i) {
    t += static_cast<std::int64_t>(rng.below(3000));
    Outcome out;
    switch (rng.below(10)) {
      case 0:
        out = s.handle_override(static_cast<PumpDuty>(rng.below(3)), "prop", t);
        EXPECT_TRUE(out.broadcast);
        break;
      case 1:
        out = s.handle_mode(control::RuleOnlyMode{}, "prop", t);
        break;
      case 2:
      case 3:
        out = s.tick(t);
        break;
      default: {
        const bool bad = rng.below(15) == 0;
        out = s.handle_reading({rng.uniform(0, 40), bad ? 150.0 : rng.uniform(0, 100), rng.uniform(0, 30), t}, t);
        EXPECT_EQ(out.accepted(), out.broadcast.has_value());
      }
    }
    if (after) {
      after->push_back(s.status());
      sizes->push_back(s.events().size());
    }
  }
}

}  // namespace

TEST(ReplayProperty, EveryPrefixMatchesLiveStatus) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    auto s = rule_session();
    std::int64_t t = 0;
    std::vector<ServerStatus> live;
    std::vector<std::size_t> sizes;
    drive(s, rng, t, 300, &live, &sizes);
    const auto& log = s.events();
    for (std::size_t i = 0; i < live.size(); ++i) {
      ASSERT_EQ(replay(std::span(log).first(sizes[i])), live[i]) << "seed " << seed << " step " << i;
    }
    // and through the wire format
    ASSERT_EQ(replay(parse_ndjson(to_ndjson(log))), s.status());
    ASSERT_EQ(replay(log), replay(log));
  }
}

TEST(ReplayProperty, ResumedSessionBehavesLikeOriginal) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    auto original = rule_session();
    std::int64_t t = 0;
    drive(original, rng, t, 150, nullptr, nullptr);

    auto resumed = ControlSession::resume(original.events(), kCfg, std::nullopt);
    ASSERT_EQ(resumed.status(), original.status());

    Rng a(seed * 7919), b(seed * 7919);
    std::int64_t ta = t, tb = t;
    drive(original, a, ta, 150, nullptr, nullptr);
    drive(resumed, b, tb, 150, nullptr, nullptr);
    ASSERT_EQ(to_ndjson(resumed.events()), to_ndjson(original.events())) << "seed " << seed;
  }
}

TEST(Session, EventsFrom) {
  auto s = rule_session();
  (void)s.handle_reading({20, 30, 5, 0}, 0);
  EXPECT_EQ(s.events_from(0).size(), 4u);
  EXPECT_EQ(s.events_from(1).size(), 4u);
  EXPECT_EQ(s.events_from(3).size(), 2u);
  EXPECT_EQ(s.events_from(3).front().seq, 3u);
  EXPECT_TRUE(s.events_from(5).empty());
  EXPECT_TRUE(s.events_from(1000).empty());
}
