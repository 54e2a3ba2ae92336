#pragma once

#include <string>
#include <vector>

#include "passlab/frame.hpp"

namespace passlab {

struct KickoffDetection {
  long frame_index = 0;      // detected kickoff frame
  long impulse_frame = 0;    // frame of maximum ball acceleration
  long window_begin = 0;
  long window_end = 0;
  double peak_acceleration = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr long kKickoffHalfWindow = 50;
inline constexpr long kKickoffLead = 4;

/// Searches hint +/- 50 frames for the largest ball acceleration and returns
/// the frame four before it. Accelerations are second differences of the
/// ball position using frame timestamps; central where both neighbours
/// exist, one-sided at the ends of the data. Ties resolve to the earliest
/// frame. A window truncated by the data shrinks with a warning.
/// Throws DataError when fewer than three frames fall in the window.
KickoffDetection detect_kickoff_frame(const std::vector<TrackedFrame>& frames, long event_kickoff_frame_hint);

/// Per-period offset (tracking kickoff minus event kickoff) applied to the
/// event frames of that period.
struct PeriodShift {
  int period = 1;
  long event_kickoff = 0;
  KickoffDetection detection;
  long shift() const { return detection.frame_index - event_kickoff; }
};

struct SyncResult {
  std::vector<Event> events;  // frame indices moved into the tracking clock
  std::vector<PeriodShift> shifts;
};

/// Uses each period's first "kickoff" event as the hint; periods come from
/// the nearest tracking frame at or before the event. Events of periods
/// without a kickoff event are left unshifted with a warning.
SyncResult synchronize_events(const Match& match, std::vector<std::string>* warnings = nullptr);

struct AttackSequence {
  int sequence_id = 0;
  TeamId team;
  long start_frame = 0;
  long end_frame = 0;
  std::vector<std::string> event_ids;
};

struct DroppedEvents {
  std::string reason;
  std::vector<std::string> event_ids;
};

struct Segmentation {
  std::vector<AttackSequence> sequences;
  std::vector<DroppedEvents> dropped;
  std::vector<std::string> warnings;
};

inline constexpr double kMinSequenceSeconds = 1.0;
inline constexpr int kPossessionChangeRun = 2;

bool is_set_play(const std::string& event_type);

/// Splits the event stream into possession spans. A span opens on a set
/// play or when a team gains the ball and survives a single opponent
/// touch; it closes when the opponent strings together two consecutive
/// on-ball events (the span then ends at its last own event) or when a set
/// play restarts the game. Spans shorter than one second or touching
/// events without a tracking frame are dropped with their events listed.
Segmentation segment_attack_sequences(const std::vector<Event>& events, const std::vector<TrackedFrame>& frames);

}  // namespace passlab
