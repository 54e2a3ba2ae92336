#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "passlab/frame.hpp"
#include "passlab/pitch.hpp"

namespace passlab {

/// Constant-velocity drift for reaction_time, then straight-line travel at
/// max_speed.
struct MotionParams {
  double reaction_time = 0.2;
  double max_speed = 7.8;
  void validate() const;
};

inline Point2 predicted_position(Point2 pos, Vec2 vel, const MotionParams& mp) { return pos + vel * mp.reaction_time; }

/// Arrival time from an already-drifted position. Every arrival time in the
/// library goes through this expression so that grid and probe results agree
/// bit for bit.
inline double arrival_from(Point2 drifted, Point2 target, const MotionParams& mp) {
  const double dx = target.x - drifted.x;
  const double dy = target.y - drifted.y;
  return mp.reaction_time + std::sqrt(dx * dx + dy * dy) / mp.max_speed;
}

double arrival_time(const PlayerState& ps, Point2 target, const MotionParams& mp);

using PlayerSet = std::set<PlayerId>;

inline constexpr std::uint16_t kNoOwner = std::numeric_limits<std::uint16_t>::max();

/// Cell-center assignment of the pitch to the player who arrives first.
/// Cells are stored row-major with rows along y (row 0 at y = -width/2) and
/// columns along x.
struct DominanceField {
  PitchSpec pitch;
  std::size_t cols = 0;
  std::size_t rows = 0;
  /// Eligible players in ascending id order; owner values index into this.
  std::vector<PlayerId> players;
  std::vector<std::uint16_t> owner;
  std::vector<double> arrival;
  /// Second-fastest player per cell (kNoOwner when only one is eligible).
  std::vector<std::uint16_t> runner_up;
  std::vector<double> runner_up_arrival;

  std::size_t size() const { return owner.size(); }
  Point2 cell_center(std::size_t cell) const;
  double cell_area(std::size_t cell) const;
  const PlayerId& owner_id(std::size_t cell) const { return players[owner[cell]]; }
  /// Index into `players`, or -1.
  int index_of(const PlayerId& id) const;
  /// Owned cell count per entry of `players`.
  std::vector<std::size_t> owned_counts() const;
};

/// Throws std::invalid_argument when no player is eligible.
DominanceField compute_dominance_grid(const TrackedFrame& frame, const PitchSpec& pitch, const MotionParams& mp,
                                      const PlayerSet& excluded = {});

struct SpaceScore {
  PlayerId id;
  Side side = Side::attacking;
  double score = 0.0;
  /// Score change for a 1 m move toward k * 45 degrees, k = 0 is +x.
  std::array<double, 8> deltas{};
  bool excluded_offside = false;
};

struct SpaceScoreTable {
  std::vector<SpaceScore> entries;  // frame player order
  const SpaceScore* find(const PlayerId& id) const;
};

/// Weighted owned area per player. Attackers use the weight increasing
/// toward +x, defenders the mirrored weight. Players absent from the field
/// are reported with score 0 and flagged excluded. Deltas are left at zero.
SpaceScoreTable space_scores(const DominanceField& field, const TrackedFrame& frame, const WeightParams& w);

/// Unit vectors at k * 45 degrees counterclockwise from +x (k = 0 is forward).
std::array<Vec2, 8> probe_directions();

/// Re-scores one player at a displaced position against a fixed field. The
/// field's runner-up data makes this a single pass over the cells instead of
/// a full recompute; the ownership decision per cell is identical to what
/// compute_dominance_grid would make with the displaced player.
class DominanceProbe {
 public:
  DominanceProbe(const DominanceField& field, const TrackedFrame& frame, const MotionParams& mp,
                 const WeightParams& w);

  /// Weighted area `id` would own standing at `pos` with its current velocity.
  double score_at(const PlayerId& id, Point2 pos) const;
  /// Weighted area currently owned by `id`.
  double base_score(const PlayerId& id) const;
  /// The eight 1 m probe deltas; displaced positions are clamped to the pitch.
  std::array<double, 8> deltas(const PlayerId& id) const;

 private:
  const DominanceField& field_;
  const TrackedFrame& frame_;
  MotionParams mp_;
  std::vector<double> attack_mass_;  // cell area * attacking weight
  std::vector<double> defend_mass_;  // cell area * mirrored weight
  std::vector<Point2> centers_;
};

/// Recomputes the dominance grid with `player_id` moved 1 m in each of the
/// eight directions and reports new score minus base score.
/// Throws std::invalid_argument for unknown or excluded players.
std::array<double, 8> directional_space_deltas(const TrackedFrame& frame, const PlayerId& player_id,
                                               const PitchSpec& pitch, const MotionParams& mp,
                                               const WeightParams& w, const PlayerSet& excluded = {});

/// Static positional offside: attackers in the opponent half, ahead of the
/// ball and strictly ahead of the second-rearmost defender. Expects the
/// attack normalized toward +x and sides assigned.
PlayerSet offside_positions(const TrackedFrame& frame);

}  // namespace passlab
