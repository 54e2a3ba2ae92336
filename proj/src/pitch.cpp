#include <algorithm>
#include <stdexcept>

#include "passlab/frame.hpp"
#include "passlab/pitch.hpp"

namespace passlab {

void PitchSpec::validate() const {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("pitch length and width must be positive");
  }
  if (!(grid_cell > 0.0) || grid_cell > std::min(length, width) / 10.0) {
    throw std::invalid_argument("grid_cell must lie in (0, min(length, width) / 10]");
  }
}

Point2 PitchSpec::clamp(Point2 p) const {
  return {std::clamp(p.x, -half_length(), half_length()), std::clamp(p.y, -half_width(), half_width())};
}

void WeightParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("weight beta must lie in [0, 1]");
}

double field_weight(Point2 p, const PitchSpec& pitch, const WeightParams& w, bool attacking_right) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !pitch.contains(p)) {
    throw std::domain_error("field_weight: point outside the pitch");
  }
  double x_norm = (p.x + pitch.half_length()) / pitch.length;
  if (!attacking_right) x_norm = 1.0 - x_norm;
  const double y_norm = std::abs(p.y) / pitch.half_width();
  return x_norm * (1.0 - w.beta * y_norm);
}

GoalGeometry goal_distance_angle(Point2 p, const PitchSpec& pitch) {
  const Point2 to_goal = pitch.opponent_goal() - p;
  const double dist = to_goal.norm();
  if (dist == 0.0) return {0.0, 0.0};
  return {dist, std::abs(std::atan2(to_goal.y, to_goal.x))};
}

// --- frames ---------------------------------------------------------------

const PlayerState* TrackedFrame::find(const PlayerId& id) const {
  for (const auto& p : players) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const TrackedFrame* Match::frame_at(long frame_index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                             [](const TrackedFrame& f, long idx) { return f.frame_index < idx; });
  if (it == frames.end() || it->frame_index != frame_index) return nullptr;
  return &*it;
}

TrackedFrame normalize_attack_direction(const TrackedFrame& frame, bool attacking_team_attacks_right,
                                        const PitchSpec& pitch) {
  constexpr double kSlack = 5.0;
  TrackedFrame out = frame;
  bool oob = !pitch.contains(frame.ball.pos, kSlack);
  for (const auto& p : frame.players) oob = oob || !pitch.contains(p.pos, kSlack);
  if (oob && !out.meta.out_of_bounds) {
    out.meta.out_of_bounds = true;
    out.meta.warnings.push_back("position outside pitch bounds");
  }
  if (attacking_team_attacks_right) return out;

  auto mirror = [](Point2& v) { v.x = -v.x; };
  mirror(out.ball.pos);
  mirror(out.ball.vel);
  for (auto& p : out.players) {
    mirror(p.pos);
    mirror(p.vel);
  }
  return out;
}

TrackedFrame assign_sides(const TrackedFrame& frame, const TeamId& attacking_team) {
  TrackedFrame out = frame;
  out.meta.attacking_team = attacking_team;
  for (auto& p : out.players) p.side = p.team == attacking_team ? Side::attacking : Side::defending;
  return out;
}

bool team_attacks_right(const TrackedFrame& frame, const TeamId& team) {
  if (frame.meta.attack_right_team) return *frame.meta.attack_right_team == team;
  double own = 0.0, other = 0.0;
  int n_own = 0, n_other = 0;
  for (const auto& p : frame.players) {
    if (p.team == team) {
      own += p.pos.x;
      ++n_own;
    } else {
      other += p.pos.x;
      ++n_other;
    }
  }
  if (n_own == 0 || n_other == 0) return n_own == 0 ? other > 0.0 : own < 0.0;
  return own / n_own <= other / n_other;
}

TrackedFrame orient_for(const TrackedFrame& frame, const TeamId& attacking_team, const PitchSpec& pitch) {
  return normalize_attack_direction(assign_sides(frame, attacking_team), team_attacks_right(frame, attacking_team),
                                    pitch);
}

}  // namespace passlab
