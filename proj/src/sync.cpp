#include "passlab/sync.hpp"

#include <algorithm>
#include <array>
#include <optional>

#include "passlab/errors.hpp"

namespace passlab {

namespace {

// Second derivative of the ball position through three samples with
// possibly uneven spacing.
double second_difference(const TrackedFrame& a, const TrackedFrame& b, const TrackedFrame& c) {
  const double dt1 = b.time - a.time;
  const double dt2 = c.time - b.time;
  if (!(dt1 > 0.0) || !(dt2 > 0.0)) throw DataError("tracking timestamps not increasing near frame " +
                                                     std::to_string(b.frame_index));
  const Point2 v1 = (b.ball.pos - a.ball.pos) * (1.0 / dt1);
  const Point2 v2 = (c.ball.pos - b.ball.pos) * (1.0 / dt2);
  return ((v2 - v1) * (2.0 / (dt1 + dt2))).norm();
}

// Below this the ball is treated as unaccelerated; absorbs rounding in
// constant-velocity traces.
constexpr double kAccelerationFloor = 1e-6;

}  // namespace

KickoffDetection detect_kickoff_frame(const std::vector<TrackedFrame>& frames, long hint) {
  KickoffDetection out;
  if (frames.size() < 3) throw DataError("kickoff detection needs at least 3 frames");
  const long want_lo = hint - kKickoffHalfWindow;
  const long want_hi = hint + kKickoffHalfWindow;

  auto first = std::lower_bound(frames.begin(), frames.end(), want_lo,
                                [](const TrackedFrame& f, long idx) { return f.frame_index < idx; });
  auto last = std::upper_bound(frames.begin(), frames.end(), want_hi,
                               [](long idx, const TrackedFrame& f) { return idx < f.frame_index; });
  const auto lo = static_cast<std::size_t>(first - frames.begin());
  const auto hi = static_cast<std::size_t>(last - frames.begin());  // exclusive
  if (hi <= lo || hi - lo < 3) throw DataError("kickoff window around frame " + std::to_string(hint) +
                                               " holds fewer than 3 frames");
  out.window_begin = frames[lo].frame_index;
  out.window_end = frames[hi - 1].frame_index;
  if (out.window_begin > want_lo || out.window_end < want_hi) {
    out.warnings.push_back("kickoff window clipped to [" + std::to_string(out.window_begin) + ", " +
                           std::to_string(out.window_end) + "]");
  }

  std::vector<double> accel(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    std::size_t mid = i;
    if (i == 0) mid = 1;
    if (i + 1 == frames.size()) mid = frames.size() - 2;
    accel[i - lo] = second_difference(frames[mid - 1], frames[mid], frames[mid + 1]);
  }

  const double peak = *std::max_element(accel.begin(), accel.end());
  std::size_t best = 0;
  if (peak <= kAccelerationFloor) {
    out.warnings.push_back("degenerate acceleration: ball never accelerates in the kickoff window");
  } else {
    while (accel[best] < peak * (1.0 - 1e-9)) ++best;
  }
  out.peak_acceleration = peak;
  out.impulse_frame = frames[lo + best].frame_index;
  out.frame_index = out.impulse_frame - kKickoffLead;
  if (out.frame_index < frames.front().frame_index) {
    out.warnings.push_back("detected kickoff precedes the first tracking frame; clamped");
    out.frame_index = frames.front().frame_index;
  }
  return out;
}

SyncResult synchronize_events(const Match& match, std::vector<std::string>* warnings) {
  SyncResult result;
  result.events = match.events;
  if (match.frames.empty()) throw DataError("cannot synchronize without tracking frames");

  auto period_of = [&](long frame) {
    auto it = std::upper_bound(match.frames.begin(), match.frames.end(), frame,
                               [](long idx, const TrackedFrame& f) { return idx < f.frame_index; });
    if (it == match.frames.begin()) return match.frames.front().meta.period;
    return std::prev(it)->meta.period;
  };

  // Event index -> shift slot, by the latest preceding kickoff.
  std::vector<int> slot(match.events.size(), -1);
  int current = -1;
  for (std::size_t i = 0; i < match.events.size(); ++i) {
    const Event& e = match.events[i];
    if (e.type == "kickoff") {
      const int period = period_of(e.frame);
      const bool seen = std::any_of(result.shifts.begin(), result.shifts.end(),
                                    [&](const PeriodShift& s) { return s.period == period; });
      if (!seen) {
        PeriodShift ps{.period = period, .event_kickoff = e.frame};
        ps.detection = detect_kickoff_frame(match.frames, e.frame);
        result.shifts.push_back(std::move(ps));
        current = static_cast<int>(result.shifts.size()) - 1;
      }
    }
    slot[i] = current;
  }
  if (result.shifts.empty()) {
    if (warnings != nullptr) warnings->push_back("no kickoff events; events left unshifted");
    return result;
  }
  for (std::size_t i = 0; i < result.events.size(); ++i) {
    const int s = slot[i] < 0 ? 0 : slot[i];
    result.events[i].frame += result.shifts[s].shift();
  }
  return result;
}

bool is_set_play(const std::string& t) {
  static constexpr std::array<const char*, 7> kSetPlays = {"kickoff",   "throw_in", "free_kick", "corner",
                                                           "goal_kick", "penalty",  "set_play"};
  return std::any_of(kSetPlays.begin(), kSetPlays.end(), [&](const char* s) { return t == s; });
}

Segmentation segment_attack_sequences(const std::vector<Event>& events, const std::vector<TrackedFrame>& frames) {
  Segmentation out;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].frame < events[i - 1].frame) throw DataError("segment_attack_sequences: events not sorted by frame");
  }

  auto frame_time = [&](long idx) -> std::optional<double> {
    auto it = std::lower_bound(frames.begin(), frames.end(), idx,
                               [](const TrackedFrame& f, long i) { return f.frame_index < i; });
    if (it == frames.end() || it->frame_index != idx) return std::nullopt;
    return it->time;
  };

  struct Open {
    TeamId team;
    std::vector<const Event*> members;
  };
  std::optional<Open> open;
  std::vector<const Event*> pending;  // opponent events since the last own event
  int next_id = 1;

  auto close = [&](std::vector<const Event*> members, const TeamId& team) {
    if (members.empty()) return;
    std::vector<std::string> ids;
    for (auto* e : members) ids.push_back(e->event_id);
    for (auto* e : members) {
      if (!frame_time(e->frame)) {
        out.warnings.push_back("sequence of team " + team + " dropped: event " + e->event_id +
                               " has no tracking frame " + std::to_string(e->frame));
        out.dropped.push_back({"missing tracking frame", std::move(ids)});
        return;
      }
    }
    const long start = members.front()->frame;
    const long end = members.back()->frame;
    if (*frame_time(end) - *frame_time(start) < kMinSequenceSeconds) {
      out.warnings.push_back("sequence of team " + team + " at frame " + std::to_string(start) +
                             " dropped: shorter than 1 s");
      out.dropped.push_back({"shorter than 1 s", std::move(ids)});
      return;
    }
    out.sequences.push_back({next_id++, team, start, end, std::move(ids)});
  };

  auto flush_all = [&] {
    if (!open) return;
    open->members.insert(open->members.end(), pending.begin(), pending.end());
    close(std::move(open->members), open->team);
    pending.clear();
    open.reset();
  };

  for (const Event& e : events) {
    if (is_set_play(e.type)) {
      flush_all();
      open = Open{e.team, {&e}};
      continue;
    }
    if (!open) {
      open = Open{e.team, {&e}};
      continue;
    }
    if (e.team == open->team) {
      open->members.insert(open->members.end(), pending.begin(), pending.end());
      pending.clear();
      open->members.push_back(&e);
      continue;
    }
    pending.push_back(&e);
    if (static_cast<int>(pending.size()) >= kPossessionChangeRun) {
      close(std::move(open->members), open->team);
      open = Open{e.team, std::move(pending)};
      pending.clear();
    }
  }
  flush_all();
  return out;
}

}  // namespace passlab
