#include "passlab/dominance.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace passlab {

void MotionParams::validate() const {
  if (!(reaction_time >= 0.0)) throw std::invalid_argument("reaction_time must be >= 0");
  if (!(max_speed > 0.0)) throw std::invalid_argument("max_speed must be > 0");
}

double arrival_time(const PlayerState& ps, Point2 target, const MotionParams& mp) {
  return arrival_from(predicted_position(ps.pos, ps.vel, mp), target, mp);
}

namespace {

// Lower edge and extent of a column (or row) of cells. The last one is
// clipped to the pitch when the cell size does not divide the extent.
std::pair<double, double> cell_span(std::size_t i, double extent, double cell) {
  const double lo = -extent / 2.0 + static_cast<double>(i) * cell;
  const double hi = std::min(lo + cell, extent / 2.0);
  return {lo, hi - lo};
}

}  // namespace

Point2 DominanceField::cell_center(std::size_t cell) const {
  const auto [x0, dx] = cell_span(cell % cols, pitch.length, pitch.grid_cell);
  const auto [y0, dy] = cell_span(cell / cols, pitch.width, pitch.grid_cell);
  return {x0 + dx / 2.0, y0 + dy / 2.0};
}

double DominanceField::cell_area(std::size_t cell) const {
  return cell_span(cell % cols, pitch.length, pitch.grid_cell).second *
         cell_span(cell / cols, pitch.width, pitch.grid_cell).second;
}

int DominanceField::index_of(const PlayerId& id) const {
  auto it = std::lower_bound(players.begin(), players.end(), id);
  if (it == players.end() || *it != id) return -1;
  return static_cast<int>(it - players.begin());
}

std::vector<std::size_t> DominanceField::owned_counts() const {
  std::vector<std::size_t> counts(players.size(), 0);
  for (auto o : owner) ++counts[o];
  return counts;
}

DominanceField compute_dominance_grid(const TrackedFrame& frame, const PitchSpec& pitch, const MotionParams& mp,
                                      const PlayerSet& excluded) {
  pitch.validate();
  mp.validate();

  std::vector<const PlayerState*> eligible;
  for (const auto& p : frame.players) {
    if (!excluded.contains(p.id)) eligible.push_back(&p);
  }
  if (eligible.empty()) throw std::invalid_argument("compute_dominance_grid: no eligible players");
  if (eligible.size() >= kNoOwner) throw std::invalid_argument("compute_dominance_grid: too many players");
  std::sort(eligible.begin(), eligible.end(), [](auto* a, auto* b) { return a->id < b->id; });

  DominanceField field;
  field.pitch = pitch;
  field.cols = pitch.cols();
  field.rows = pitch.rows();
  const std::size_t n_cells = field.cols * field.rows;
  field.owner.assign(n_cells, kNoOwner);
  field.arrival.assign(n_cells, std::numeric_limits<double>::infinity());
  field.runner_up.assign(n_cells, kNoOwner);
  field.runner_up_arrival.assign(n_cells, std::numeric_limits<double>::infinity());

  std::vector<Point2> drifted;
  for (auto* p : eligible) {
    field.players.push_back(p->id);
    drifted.push_back(predicted_position(p->pos, p->vel, mp));
  }

  // Players are visited in id order with strict comparisons, so ties go to
  // the smaller id without ever comparing identifiers per cell.
  for (std::size_t c = 0; c < n_cells; ++c) {
    const Point2 center = field.cell_center(c);
    double best = std::numeric_limits<double>::infinity(), second = best;
    std::uint16_t best_i = kNoOwner, second_i = kNoOwner;
    for (std::uint16_t i = 0; i < drifted.size(); ++i) {
      const double t = arrival_from(drifted[i], center, mp);
      if (t < best) {
        second = best;
        second_i = best_i;
        best = t;
        best_i = i;
      } else if (t < second) {
        second = t;
        second_i = i;
      }
    }
    field.owner[c] = best_i;
    field.arrival[c] = best;
    field.runner_up[c] = second_i;
    field.runner_up_arrival[c] = second;
  }
  return field;
}

const SpaceScore* SpaceScoreTable::find(const PlayerId& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

SpaceScoreTable space_scores(const DominanceField& field, const TrackedFrame& frame, const WeightParams& w) {
  w.validate();
  std::vector<double> per_index(field.players.size(), 0.0);
  std::vector<Side> side_of(field.players.size(), Side::attacking);
  for (const auto& p : frame.players) {
    if (int idx = field.index_of(p.id); idx >= 0) side_of[idx] = p.side;
  }
  for (std::size_t c = 0; c < field.size(); ++c) {
    const auto o = field.owner[c];
    per_index[o] += field.cell_area(c) *
                    field_weight(field.cell_center(c), field.pitch, w, side_of[o] == Side::attacking);
  }

  SpaceScoreTable table;
  for (const auto& p : frame.players) {
    SpaceScore s{.id = p.id, .side = p.side};
    if (int idx = field.index_of(p.id); idx >= 0) {
      s.score = per_index[idx];
    } else {
      s.excluded_offside = true;
    }
    table.entries.push_back(std::move(s));
  }
  return table;
}

std::array<Vec2, 8> probe_directions() {
  constexpr double d = std::numbers::sqrt2 / 2.0;
  return {{{1, 0}, {d, d}, {0, 1}, {-d, d}, {-1, 0}, {-d, -d}, {0, -1}, {d, -d}}};
}

DominanceProbe::DominanceProbe(const DominanceField& field, const TrackedFrame& frame, const MotionParams& mp,
                               const WeightParams& w)
    : field_(field), frame_(frame), mp_(mp) {
  w.validate();
  const std::size_t n = field.size();
  attack_mass_.resize(n);
  defend_mass_.resize(n);
  centers_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    centers_[c] = field.cell_center(c);
    const double area = field.cell_area(c);
    attack_mass_[c] = area * field_weight(centers_[c], field.pitch, w, true);
    defend_mass_[c] = area * field_weight(centers_[c], field.pitch, w, false);
  }
}

double DominanceProbe::base_score(const PlayerId& id) const {
  const int idx = field_.index_of(id);
  const PlayerState* ps = frame_.find(id);
  if (idx < 0 || ps == nullptr) throw std::invalid_argument("DominanceProbe: player not in field: " + id);
  const auto& mass = ps->side == Side::attacking ? attack_mass_ : defend_mass_;
  double total = 0.0;
  for (std::size_t c = 0; c < field_.size(); ++c) {
    if (field_.owner[c] == idx) total += mass[c];
  }
  return total;
}

double DominanceProbe::score_at(const PlayerId& id, Point2 pos) const {
  const int idx = field_.index_of(id);
  const PlayerState* ps = frame_.find(id);
  if (idx < 0 || ps == nullptr) throw std::invalid_argument("DominanceProbe: player not in field: " + id);
  const auto& mass = ps->side == Side::attacking ? attack_mass_ : defend_mass_;
  const Point2 drifted = predicted_position(pos, ps->vel, mp_);
  const auto me = static_cast<std::uint16_t>(idx);

  double total = 0.0;
  for (std::size_t c = 0; c < field_.size(); ++c) {
    // Fastest competitor other than this player.
    double other_t;
    std::uint16_t other_i;
    if (field_.owner[c] == me) {
      other_t = field_.runner_up_arrival[c];
      other_i = field_.runner_up[c];
    } else {
      other_t = field_.arrival[c];
      other_i = field_.owner[c];
    }
    const double t = arrival_from(drifted, centers_[c], mp_);
    if (t < other_t || (t == other_t && me < other_i)) total += mass[c];
  }
  return total;
}

std::array<double, 8> DominanceProbe::deltas(const PlayerId& id) const {
  const int idx = field_.index_of(id);
  const PlayerState* ps = frame_.find(id);
  if (idx < 0 || ps == nullptr) throw std::invalid_argument("DominanceProbe: player not in field: " + id);
  const auto& mass = ps->side == Side::attacking ? attack_mass_ : defend_mass_;
  const auto me = static_cast<std::uint16_t>(idx);
  const Point2 drifted = predicted_position(ps->pos, ps->vel, mp_);

  // A move of length d changes this player's arrival time by at most
  // d / max_speed. Cells outside that margin keep their decision in every
  // direction; only the rest are re-scored per direction. Clamping can
  // stretch a move for players standing off the pitch, hence the max.
  const auto dirs = probe_directions();
  std::array<Point2, 8> moved;
  double reach = 0.0;
  for (int k = 0; k < 8; ++k) {
    const Point2 target = field_.pitch.clamp(ps->pos + dirs[k]);
    reach = std::max(reach, distance(target, ps->pos));
    moved[k] = predicted_position(target, ps->vel, mp_);
  }
  const double margin = reach / mp_.max_speed + 1e-9;
  double base = 0.0, sure = 0.0;
  std::vector<std::size_t> open;
  std::vector<double> open_other_t;
  std::vector<std::uint16_t> open_other_i;
  for (std::size_t c = 0; c < field_.size(); ++c) {
    const bool owned = field_.owner[c] == me;
    if (owned) base += mass[c];
    const double other_t = owned ? field_.runner_up_arrival[c] : field_.arrival[c];
    const double t = arrival_from(drifted, centers_[c], mp_);
    if (t + margin < other_t) {
      sure += mass[c];
    } else if (t - margin <= other_t) {
      open.push_back(c);
      open_other_t.push_back(other_t);
      open_other_i.push_back(owned ? field_.runner_up[c] : field_.owner[c]);
    }
  }

  std::array<double, 8> out{};
  for (int k = 0; k < 8; ++k) {
    double total = sure;
    for (std::size_t j = 0; j < open.size(); ++j) {
      const double t = arrival_from(moved[k], centers_[open[j]], mp_);
      if (t < open_other_t[j] || (t == open_other_t[j] && me < open_other_i[j])) total += mass[open[j]];
    }
    out[k] = total - base;
  }
  return out;
}

std::array<double, 8> directional_space_deltas(const TrackedFrame& frame, const PlayerId& player_id,
                                               const PitchSpec& pitch, const MotionParams& mp,
                                               const WeightParams& w, const PlayerSet& excluded) {
  if (frame.find(player_id) == nullptr) {
    throw std::invalid_argument("directional_space_deltas: unknown player " + player_id);
  }
  if (excluded.contains(player_id)) {
    throw std::invalid_argument("directional_space_deltas: player is excluded: " + player_id);
  }
  const DominanceField field = compute_dominance_grid(frame, pitch, mp, excluded);
  return DominanceProbe(field, frame, mp, w).deltas(player_id);
}

PlayerSet offside_positions(const TrackedFrame& frame) {
  std::vector<double> defender_x;
  for (const auto& p : frame.players) {
    if (p.side == Side::defending) defender_x.push_back(p.pos.x);
  }
  std::sort(defender_x.begin(), defender_x.end(), std::greater<>());
  const bool has_line = defender_x.size() >= 2;
  const double line = has_line ? defender_x[1] : 0.0;

  PlayerSet out;
  for (const auto& p : frame.players) {
    if (p.side != Side::attacking) continue;
    if (p.pos.x > 0.0 && p.pos.x > frame.ball.pos.x && (!has_line || p.pos.x > line)) out.insert(p.id);
  }
  return out;
}

}  // namespace passlab
