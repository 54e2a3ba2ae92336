#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "passlab/ingest.hpp"
#include "passlab/synth.hpp"
#include "test_util.hpp"

using namespace passlab;

namespace {

std::string tracking_line(long frame, double time, int n_players, const std::string& extra = "") {
  std::string players;
  for (int i = 0; i < n_players; ++i) {
    if (i > 0) players += ",";
    players += fmt::format(R"({{"id":"p{}","team":"{}","x":{},"y":{},"vx":0.5,"vy":-0.25}})", i, i < 11 ? "H" : "V",
                           -40.0 + 3.0 * i, i % 2 ? 5.0 : -5.0);
  }
  return fmt::format(R"({{"frame":{},"time":{},"period":1,"ball":{{"x":1.5,"y":-2,"vx":0,"vy":0}},"players":[{}]{}}})",
                     frame, time, players, extra) +
         "\n";
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(ReadTracking, MinimalTwoFrames) {
  std::istringstream in(tracking_line(0, 0.0, 22) + tracking_line(1, 0.1, 22));
  LoadReport report;
  const auto frames = read_tracking(in, "t.jsonl", &report);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_TRUE(report.warnings.empty());
  EXPECT_EQ(frames[1].frame_index, 1);
  EXPECT_DOUBLE_EQ(frames[1].time, 0.1);
  EXPECT_EQ(frames[0].players.size(), 22u);
  EXPECT_EQ(frames[0].ball.pos, (Point2{1.5, -2.0}));
  EXPECT_EQ(frames[0].players[3].vel, (Vec2{0.5, -0.25}));
}

TEST(ReadTracking, MissingPlayerWarns) {
  std::istringstream in(tracking_line(0, 0.0, 21));
  LoadReport report;
  const auto frames = read_tracking(in, "t.jsonl", &report);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].players.size(), 21u);
  EXPECT_TRUE(any_contains(report.warnings, "missing player"));
}

TEST(ReadTracking, NonMonotoneFrameIndexNamesBoth) {
  std::istringstream in(tracking_line(7, 0.0, 22) + tracking_line(5, 0.1, 22));
  try {
    read_tracking(in, "t.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    EXPECT_NE(msg.find('5'), std::string::npos) << msg;
    EXPECT_NE(msg.find("t.jsonl:2"), std::string::npos) << msg;
  }
}

TEST(ReadTracking, MalformedRecordHasLocation) {
  std::istringstream in(tracking_line(0, 0.0, 22) + "{\"frame\": 1, \"time\": \n");
  try {
    read_tracking(in, "t.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("t.jsonl:2"), std::string::npos);
  }
  std::istringstream missing(R"({"frame":0,"time":0,"players":[]})" "\n");
  EXPECT_THROW(read_tracking(missing, "t.jsonl"), DataError);
}

TEST(ReadTracking, MissingVelocityIsWarning) {
  std::istringstream in(R"({"frame":0,"time":0,"ball":{"x":0,"y":0},"players":[]})" "\n");
  LoadReport report;
  const auto frames = read_tracking(in, "t.jsonl", &report);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].ball.vel, (Vec2{0.0, 0.0}));
  EXPECT_TRUE(any_contains(report.warnings, "ball.vx"));
}

TEST(ReadEvents, OutcomeAndReceiver) {
  std::istringstream in(
      R"({"event_id":"e1","type":"pass","frame":10,"team":"H","player":"p1","receiver":"p2","outcome":"success","x":1,"y":2})"
      "\n"
      R"({"event_id":"e2","type":"shot","frame":12,"team":"H","player":"p2","x":30,"y":0})"
      "\n");
  const auto ev = read_events(in, "e.jsonl");
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_TRUE(ev[0].is_pass());
  EXPECT_EQ(*ev[0].receiver, "p2");
  EXPECT_EQ(*ev[0].outcome, PassOutcome::success);
  EXPECT_FALSE(ev[1].receiver.has_value());
  EXPECT_FALSE(ev[1].outcome.has_value());

  std::istringstream bad(R"({"event_id":"e1","type":"pass","frame":10,"team":"H","player":"p1","outcome":"maybe","x":1,"y":2})"
                         "\n");
  EXPECT_THROW(read_events(bad, "e.jsonl"), DataError);
}

TEST(RoundTrip, UnknownKeysPreserved) {
  const std::string text = tracking_line(3, 0.3, 22, R"(,"vendor_tag":{"a":[1,2]})");
  std::istringstream in(text);
  const auto frames = read_tracking(in, "t.jsonl");
  std::ostringstream out;
  write_tracking(out, frames);
  std::istringstream again(out.str());
  const auto frames2 = read_tracking(again, "t.jsonl");
  std::ostringstream out2;
  write_tracking(out2, frames2);
  EXPECT_EQ(out.str(), out2.str());
  EXPECT_EQ(frames2[0].extra.at("vendor_tag"), R"({"a":[1,2]})");
}

TEST(RoundTrip, SynthesizedMatchIsIdentity) {
  SynthConfig cfg;
  cfg.passes = 40;
  const auto m = synthesize_match(cfg, 17).match;
  const auto dir = passlab::testing::temp_dir("ingest_roundtrip");
  save_match(m, dir / "tracking.jsonl", dir / "events.jsonl");
  const auto loaded = load_match(dir / "tracking.jsonl", dir / "events.jsonl");
  ASSERT_EQ(loaded.frames.size(), m.frames.size());
  ASSERT_EQ(loaded.events.size(), m.events.size());
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const auto& a = m.frames[i];
    const auto& b = loaded.frames[i];
    ASSERT_EQ(a.frame_index, b.frame_index);
    ASSERT_EQ(a.time, b.time);
    ASSERT_EQ(a.ball.pos, b.ball.pos);
    ASSERT_EQ(a.players.size(), b.players.size());
    for (std::size_t j = 0; j < a.players.size(); ++j) {
      ASSERT_EQ(a.players[j].id, b.players[j].id);
      ASSERT_EQ(a.players[j].pos, b.players[j].pos);
      ASSERT_EQ(a.players[j].vel, b.players[j].vel);
    }
  }
  for (std::size_t i = 0; i < m.events.size(); ++i) {
    EXPECT_EQ(m.events[i].event_id, loaded.events[i].event_id);
    EXPECT_EQ(m.events[i].frame, loaded.events[i].frame);
    EXPECT_EQ(m.events[i].outcome, loaded.events[i].outcome);
    EXPECT_EQ(m.events[i].receiver, loaded.events[i].receiver);
  }
  // Second save is byte-identical to the first.
  const auto dir2 = passlab::testing::temp_dir("ingest_roundtrip2");
  save_match(loaded, dir2 / "tracking.jsonl", dir2 / "events.jsonl");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir / "tracking.jsonl"), slurp(dir2 / "tracking.jsonl"));
  EXPECT_EQ(slurp(dir / "events.jsonl"), slurp(dir2 / "events.jsonl"));
}

TEST(LoadMatch, MissingFileIsDataError) {
  EXPECT_THROW(load_match("/nonexistent/t.jsonl", "/nonexistent/e.jsonl"), DataError);
  const auto empty = passlab::testing::temp_dir("ingest_empty");
  EXPECT_THROW(load_match_dir(empty), DataError);
}
