#include <gtest/gtest.h>

#include "irrigation/protocol.hpp"
#include "irrigation/random.hpp"

using namespace irrigation;
using namespace irrigation::telemetry;

namespace {

DecodeErrorKind kind_of(std::string_view line) {
  try {
    (void)decode_message(line);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decoded: " << line;
  return DecodeErrorKind::MalformedFrame;
}

ServerStatus rich_status() {
  ServerStatus s;
  s.latest_reading = SensorReading{21.25, 33.5, 7.125, 1700000000123};
  s.pumping = true;
  s.pump_duty = PumpDuty::Half;
  s.remaining_ms = 4200;
  s.pump_deadline_ms = 1700000004323;
  s.last_pump_stop_ms = 1699999990000;
  s.mode = control::ManualMode{PumpDuty::Half};
  s.last_decision = control::Decision{PumpDuty::Half, 5000};
  s.event_count = 42;
  s.last_seq = 42;
  s.as_of_ms = 1700000000123;
  return s;
}

std::vector<Message> sample_messages() {
  std::vector<Message> out;
  out.push_back(ReadingMessage{{20.0, 30.0, 5.0, 1700000000000}});
  out.push_back(ReadingMessage{{-19.999999999, 0.1 + 0.2, 99.99999999999, -5}});
  out.push_back(OverrideMessage{PumpDuty::Full, "dashboard"});
  out.push_back(OverrideMessage{PumpDuty::Off, ""});
  out.push_back(ModeMessage{control::AutoMode{}});
  out.push_back(ModeMessage{control::RuleOnlyMode{}});
  out.push_back(StatusMessage{ServerStatus{}});
  out.push_back(StatusMessage{rich_status()});
  const EventBody bodies[] = {
      ReadingRecorded{{20, 30, 5, 7}},
      DecisionMade{PumpDuty::Full, 10000, control::RuleOnlyMode{}},
      DecisionMade{PumpDuty::Off, 0, control::AutoMode{}},
      DecisionMade{PumpDuty::Half, 5000, control::ManualMode{PumpDuty::Half}},
      PumpStateChanged{true, PumpDuty::Half, 5000},
      PumpStateChanged{false, PumpDuty::Off, 0},
      OverrideReceived{PumpDuty::Full, "http"},
      ModeChanged{control::RuleOnlyMode{}, "startup"},
      ModeChanged{control::ManualMode{PumpDuty::Off}, "override"},
  };
  std::uint64_t seq = 1;
  for (const auto& b : bodies) out.push_back(EventMessage{Event{seq++, 1000 * static_cast<std::int64_t>(seq), b}});
  out.push_back(ErrorMessage{"malformed_frame", "bad \"quote\" and \\ backslash"});
  return out;
}

}  // namespace

TEST(Protocol, RoundTripEveryMessageType) {
  for (const auto& m : sample_messages()) {
    const std::string line = encode_message(m);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(decode_message(line), m) << line;
  }
}

TEST(Protocol, EventAndStatusHelpers) {
  const Event e{3, 99, PumpStateChanged{true, PumpDuty::Full, 10000}};
  EXPECT_EQ(decode_event(encode_event(e)), e);
  EXPECT_EQ(std::get<StatusMessage>(decode_message(encode_status(rich_status()))).status, rich_status());
}

TEST(Protocol, DecodeOverrideExample) {
  const auto m = decode_message(R"({"type":"override","duty":"full"})");
  ASSERT_TRUE(std::holds_alternative<OverrideMessage>(m));
  EXPECT_EQ(std::get<OverrideMessage>(m).duty, PumpDuty::Full);
}

TEST(Protocol, DecodeReadingExample) {
  const auto m = decode_message(R"({"type":"reading","t_c":20.0,"h_pct":30.0,"m_pct":5.0,"ts_ms":1700000000000})");
  EXPECT_EQ(std::get<ReadingMessage>(m).reading, (SensorReading{20, 30, 5, 1700000000000}));
}

TEST(Protocol, TypedErrors) {
  EXPECT_EQ(kind_of(R"({"type":"reading","t_c":20.0,"h_pc)"), DecodeErrorKind::MalformedFrame);
  EXPECT_EQ(kind_of(""), DecodeErrorKind::MalformedFrame);
  EXPECT_EQ(kind_of("[1,2]"), DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(R"({"duty":"full"})"), DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(R"({"type":"sprinkle"})"), DecodeErrorKind::UnknownType);
  EXPECT_EQ(kind_of(R"({"type":"override","duty":"max"})"), DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(R"({"type":"override","duty":"full","v":2})"), DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(R"({"type":"reading","t_c":"20","h_pct":30,"m_pct":5,"ts_ms":0})"),
            DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(R"({"type":"mode","mode":"manual"})"), DecodeErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of(std::string(kMaxLineBytes + 1, ' ')), DecodeErrorKind::MalformedFrame);
}

TEST(Protocol, NdjsonRoundTripAndGaps) {
  std::vector<Event> log;
  append_event(log, Event{1, 0, ModeChanged{control::RuleOnlyMode{}, "startup"}});
  append_event(log, Event{2, 10, ReadingRecorded{{20, 30, 5, 10}}});
  append_event(log, Event{3, 10, DecisionMade{PumpDuty::Full, 10000, control::RuleOnlyMode{}}});
  ASSERT_EQ(log.back().seq, 3u);
  EXPECT_THROW(append_event(log, Event{5, 10, ReadingRecorded{}}), SequenceGap);
  const std::string text = to_ndjson(log);
  EXPECT_EQ(parse_ndjson(text), log);
  EXPECT_EQ(parse_ndjson(text + "\n\n"), log);
  EXPECT_TRUE(parse_ndjson("").empty());

  std::vector<Event> gap = log;
  gap.erase(gap.begin() + 1);
  EXPECT_THROW((void)parse_ndjson(to_ndjson(gap)), SequenceGap);
}

// 10^5 mutated lines: the decoder either returns a message or throws
// DecodeError. Anything it accepts must survive a re-encode.
TEST(ProtocolProperty, FuzzedLinesNeverCrash) {
  const auto samples = sample_messages();
  std::vector<std::string> seeds;
  for (const auto& m : samples) seeds.push_back(encode_message(m));
  const std::string alphabet = "{}[]\":,0123456789.-+eEtruefalsn \\u\t";

  Rng rng(20240601);
  int accepted = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string line = seeds[rng.below(seeds.size())];
    switch (rng.below(6)) {
      case 0:  // truncate
        line.resize(rng.below(line.size() + 1));
        break;
      case 1:  // flip bytes
        for (int k = 0, n = 1 + static_cast<int>(rng.below(4)); k < n && !line.empty(); ++k)
          line[rng.below(line.size())] = static_cast<char>(rng.below(256));
        break;
      case 2:  // splice structural characters
        for (int k = 0, n = 1 + static_cast<int>(rng.below(4)); k < n; ++k)
          line.insert(rng.below(line.size() + 1), 1, alphabet[rng.below(alphabet.size())]);
        break;
      case 3: {  // delete a span
        const std::size_t at = rng.below(line.size() + 1);
        line.erase(at, rng.below(8));
        break;
      }
      case 4: {  // pure noise
        line.assign(rng.below(200), '\0');
        for (char& c : line) c = static_cast<char>(rng.below(256));
        break;
      }
      default:  // swap a value for a wrong-typed one
        if (auto p = line.find(':'); p != std::string::npos) {
          const char* junk[] = {"null", "[]", "{}", "\"x\"", "1e999", "-0", "true", "18446744073709551616"};
          line.insert(p + 1, junk[rng.below(8)]);
        }
    }
    try {
      const Message m = decode_message(line);
      ++accepted;
      ASSERT_EQ(decode_message(encode_message(m)), m) << line;
    } catch (const DecodeError&) {
      ++rejected;
    } catch (const std::exception& e) {
      FAIL() << "untyped exception " << e.what() << " for line: " << line;
    }
  }
  EXPECT_EQ(accepted + rejected, 100000);
  EXPECT_GT(rejected, 0);
}
