#include "passlab/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

namespace passlab {

using nlohmann::json;

namespace {

struct Cursor {
  const std::string& source;
  std::size_t line;
  LoadReport* report;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
  }
  void warn(const std::string& what) const {
    if (report != nullptr) report->warnings.push_back(source + ":" + std::to_string(line) + ": " + what);
  }
};

const json& require(const json& obj, const char* key, const Cursor& at) {
  auto it = obj.find(key);
  if (it == obj.end()) at.fail(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key, const Cursor& at) {
  const json& v = require(obj, key, at);
  if (!v.is_number()) at.fail(std::string("key '") + key + "' is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) at.fail(std::string("key '") + key + "' is not finite");
  return d;
}

double optional_number(const json& obj, const char* key, const Cursor& at, const std::string& what) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    at.warn("missing " + what + "." + key + ", assuming 0");
    return 0.0;
  }
  if (!it->is_number()) at.fail(std::string("key '") + key + "' is not a number");
  return it->get<double>();
}

// Identifiers may arrive as JSON strings or integers.
std::string identifier(const json& v, const char* key, const Cursor& at) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  at.fail(std::string("key '") + key + "' must be a string or integer");
}

ExtraFields extras(const json& obj, std::initializer_list<const char*> known) {
  ExtraFields out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }) == known.end()) {
      out.emplace(it.key(), it.value().dump());
    }
  }
  return out;
}

void put_extras(json& obj, const ExtraFields& extra) {
  for (const auto& [k, v] : extra) {
    if (!obj.contains(k)) obj[k] = json::parse(v);
  }
}

template <typename Fn>
void for_each_record(std::istream& in, const std::string& source, LoadReport* report, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Cursor at{source, line, report};
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      at.fail(std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) at.fail("record is not an object");
    fn(rec, at);
  }
}

}  // namespace

std::vector<TrackedFrame> read_tracking(std::istream& in, const std::string& source, LoadReport* report) {
  std::vector<TrackedFrame> frames;
  for_each_record(in, source, report, [&](const json& rec, const Cursor& at) {
    TrackedFrame f;
    const json& idx = require(rec, "frame", at);
    if (!idx.is_number_integer()) at.fail("key 'frame' must be an integer");
    f.frame_index = idx.get<long>();
    f.time = number(rec, "time", at);
    if (!frames.empty() && f.frame_index <= frames.back().frame_index) {
      at.fail("frame index not increasing: " + std::to_string(frames.back().frame_index) + " then " +
              std::to_string(f.frame_index));
    }
    if (auto it = rec.find("period"); it != rec.end()) {
      if (!it->is_number_integer()) at.fail("key 'period' must be an integer");
      f.meta.period = it->get<int>();
    }
    if (auto it = rec.find("attack_right"); it != rec.end() && !it->is_null()) {
      f.meta.attack_right_team = identifier(*it, "attack_right", at);
    }

    const json& ball = require(rec, "ball", at);
    if (!ball.is_object()) at.fail("key 'ball' must be an object");
    f.ball.pos = {number(ball, "x", at), number(ball, "y", at)};
    f.ball.vel = {optional_number(ball, "vx", at, "ball"), optional_number(ball, "vy", at, "ball")};

    const json& players = require(rec, "players", at);
    if (!players.is_array()) at.fail("key 'players' must be an array");
    std::set<PlayerId> seen;
    for (const json& pj : players) {
      if (!pj.is_object()) at.fail("player entry is not an object");
      PlayerState p;
      p.id = identifier(require(pj, "id", at), "id", at);
      p.team = identifier(require(pj, "team", at), "team", at);
      p.pos = {number(pj, "x", at), number(pj, "y", at)};
      p.vel = {optional_number(pj, "vx", at, "player " + p.id), optional_number(pj, "vy", at, "player " + p.id)};
      if (p.vel.norm() > kMaxPlayerSpeed) {
        at.warn("player " + p.id + " speed above " + std::to_string(kMaxPlayerSpeed) + " m/s");
      }
      if (!seen.insert(p.id).second) at.fail("duplicate player id " + p.id);
      p.extra = extras(pj, {"id", "team", "x", "y", "vx", "vy"});
      f.players.push_back(std::move(p));
    }
    if (f.players.size() > 22) at.fail("more than 22 players");
    if (f.players.size() < 22) {
      const std::string msg = "missing player: " + std::to_string(f.players.size()) + " of 22 present";
      at.warn(msg);
      f.meta.warnings.push_back(msg);
    }
    f.extra = extras(rec, {"frame", "time", "period", "attack_right", "ball", "players"});
    frames.push_back(std::move(f));
  });
  return frames;
}

std::vector<Event> read_events(std::istream& in, const std::string& source, LoadReport* report) {
  std::vector<Event> events;
  std::set<std::string> ids;
  for_each_record(in, source, report, [&](const json& rec, const Cursor& at) {
    Event e;
    e.event_id = identifier(require(rec, "event_id", at), "event_id", at);
    if (!ids.insert(e.event_id).second) at.fail("duplicate event_id " + e.event_id);
    const json& type = require(rec, "type", at);
    if (!type.is_string()) at.fail("key 'type' must be a string");
    e.type = type.get<std::string>();
    const json& frame = require(rec, "frame", at);
    if (!frame.is_number_integer()) at.fail("key 'frame' must be an integer");
    e.frame = frame.get<long>();
    e.team = identifier(require(rec, "team", at), "team", at);
    e.player = identifier(require(rec, "player", at), "player", at);
    if (auto it = rec.find("receiver"); it != rec.end() && !it->is_null()) {
      e.receiver = identifier(*it, "receiver", at);
    }
    if (auto it = rec.find("outcome"); it != rec.end() && !it->is_null()) {
      const std::string o = it->is_string() ? it->get<std::string>() : "";
      if (o == "success") {
        e.outcome = PassOutcome::success;
      } else if (o == "failure") {
        e.outcome = PassOutcome::failure;
      } else {
        at.fail("outcome must be \"success\" or \"failure\"");
      }
    } else if (e.is_pass()) {
      at.fail("pass event " + e.event_id + " has no outcome");
    }
    e.pos = {number(rec, "x", at), number(rec, "y", at)};
    e.extra = extras(rec, {"event_id", "type", "frame", "team", "player", "receiver", "outcome", "x", "y"});
    events.push_back(std::move(e));
  });
  return events;
}

void write_tracking(std::ostream& out, const std::vector<TrackedFrame>& frames) {
  for (const auto& f : frames) {
    json rec = json::object();
    rec["frame"] = f.frame_index;
    rec["time"] = f.time;
    rec["period"] = f.meta.period;
    if (f.meta.attack_right_team) rec["attack_right"] = *f.meta.attack_right_team;
    rec["ball"] = {{"x", f.ball.pos.x}, {"y", f.ball.pos.y}, {"vx", f.ball.vel.x}, {"vy", f.ball.vel.y}};
    json players = json::array();
    for (const auto& p : f.players) {
      json pj = {{"id", p.id}, {"team", p.team}, {"x", p.pos.x}, {"y", p.pos.y}, {"vx", p.vel.x}, {"vy", p.vel.y}};
      put_extras(pj, p.extra);
      players.push_back(std::move(pj));
    }
    rec["players"] = std::move(players);
    put_extras(rec, f.extra);
    out << rec.dump() << '\n';
  }
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) {
    json rec = json::object();
    rec["event_id"] = e.event_id;
    rec["type"] = e.type;
    rec["frame"] = e.frame;
    rec["team"] = e.team;
    rec["player"] = e.player;
    if (e.receiver) rec["receiver"] = *e.receiver;
    if (e.outcome) rec["outcome"] = *e.outcome == PassOutcome::success ? "success" : "failure";
    rec["x"] = e.pos.x;
    rec["y"] = e.pos.y;
    put_extras(rec, e.extra);
    out << rec.dump() << '\n';
  }
}

Match load_match(const std::filesystem::path& tracking_path, const std::filesystem::path& events_path,
                 LoadReport* report) {
  std::ifstream tin(tracking_path);
  if (!tin) throw DataError("cannot open " + tracking_path.string());
  std::ifstream ein(events_path);
  if (!ein) throw DataError("cannot open " + events_path.string());
  Match m;
  m.frames = read_tracking(tin, tracking_path.filename().string(), report);
  m.events = read_events(ein, events_path.filename().string(), report);
  std::stable_sort(m.events.begin(), m.events.end(), [](const Event& a, const Event& b) { return a.frame < b.frame; });
  return m;
}

void save_match(const Match& match, const std::filesystem::path& tracking_path,
                const std::filesystem::path& events_path) {
  std::ofstream tout(tracking_path, std::ios::binary);
  if (!tout) throw DataError("cannot write " + tracking_path.string());
  write_tracking(tout, match.frames);
  std::ofstream eout(events_path, std::ios::binary);
  if (!eout) throw DataError("cannot write " + events_path.string());
  write_events(eout, match.events);
}

std::vector<Match> load_match_dir(const std::filesystem::path& dir, LoadReport* report) {
  namespace fs = std::filesystem;
  auto has_match = [](const fs::path& d) {
    return fs::exists(d / "tracking.jsonl") && fs::exists(d / "events.jsonl");
  };
  std::vector<fs::path> dirs;
  if (has_match(dir)) {
    dirs.push_back(dir);
  } else if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && has_match(entry.path())) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw DataError("no tracking.jsonl/events.jsonl pair under " + dir.string());
  std::vector<Match> out;
  for (const auto& d : dirs) out.push_back(load_match(d / "tracking.jsonl", d / "events.jsonl", report));
  return out;
}

}  // namespace passlab
