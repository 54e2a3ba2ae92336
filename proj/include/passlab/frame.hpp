#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "passlab/pitch.hpp"

namespace passlab {

/// Player identifiers are opaque strings. Wherever a deterministic
/// tie-break is needed the lexicographic order of the identifier is used.
using PlayerId = std::string;
using TeamId = std::string;

/// Role of a player relative to the team in possession of the frame.
enum class Side { attacking, defending };

/// Unknown keys of an input record, kept as serialized JSON text so that a
/// load/save cycle reproduces them.
using ExtraFields = std::map<std::string, std::string>;

inline constexpr double kMaxPlayerSpeed = 13.0;

struct PlayerState {
  PlayerId id;
  TeamId team;
  Side side = Side::defending;
  Point2 pos;
  Vec2 vel;
  ExtraFields extra;
};

struct BallState {
  Point2 pos;
  Vec2 vel;
};

struct FrameMeta {
  int period = 1;
  /// Team in possession; sides of PlayerState are relative to it.
  std::optional<TeamId> attacking_team;
  /// Team attacking toward +x in the raw tracking coordinates, if recorded.
  std::optional<TeamId> attack_right_team;
  bool out_of_bounds = false;
  std::vector<std::string> warnings;
};

struct TrackedFrame {
  long frame_index = 0;
  double time = 0.0;
  BallState ball;
  std::vector<PlayerState> players;
  FrameMeta meta;
  ExtraFields extra;

  const PlayerState* find(const PlayerId& id) const;
};

enum class PassOutcome { success, failure };

/// One record of the event file. Only passes carry an outcome.
struct Event {
  std::string event_id;
  std::string type;
  long frame = 0;
  TeamId team;
  PlayerId player;
  std::optional<PlayerId> receiver;
  std::optional<PassOutcome> outcome;
  Point2 pos;
  ExtraFields extra;

  bool is_pass() const { return type == "pass"; }
};

struct Match {
  std::vector<TrackedFrame> frames;
  std::vector<Event> events;

  /// Binary search by frame_index; nullptr when absent.
  const TrackedFrame* frame_at(long frame_index) const;
};

/// Mirrors x positions and x velocities when the attack runs toward -x so
/// that the attacking team always plays to the right. Positions further
/// than 5 m outside the pitch are left as they are and flagged in the
/// frame metadata.
TrackedFrame normalize_attack_direction(const TrackedFrame& frame, bool attacking_team_attacks_right,
                                        const PitchSpec& pitch = {});

/// Labels every player attacking or defending relative to `attacking_team`.
TrackedFrame assign_sides(const TrackedFrame& frame, const TeamId& attacking_team);

/// Whether `team` attacks toward +x in the raw coordinates of `frame`. Uses
/// the recorded attack_right_team when present, otherwise the team whose
/// players sit deeper (lower mean x) is taken to attack right.
bool team_attacks_right(const TrackedFrame& frame, const TeamId& team);

/// assign_sides followed by normalize_attack_direction: the frame as seen
/// by `attacking_team` playing left to right.
TrackedFrame orient_for(const TrackedFrame& frame, const TeamId& attacking_team, const PitchSpec& pitch = {});

}  // namespace passlab
