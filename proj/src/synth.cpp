#include "passlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "passlab/rng.hpp"

namespace passlab {

void SynthConfig::validate() const {
  if (passes < 0) throw std::invalid_argument("synth: passes must be >= 0");
  if (attackers < 2 || attackers > 11) throw std::invalid_argument("synth: attackers must lie in [2, 11]");
  if (defenders < 0 || defenders > 11) throw std::invalid_argument("synth: defenders must lie in [0, 11]");
  if (defenders == 0 && rule.uses_interception()) {
    throw std::invalid_argument("synth: interception terms in the success rule need at least one defender");
  }
  if (!(fps > 0.0) || !(pass_interval > 0.0)) throw std::invalid_argument("synth: fps and pass_interval must be > 0");
  if (!(receiver_scale > 0.0)) throw std::invalid_argument("synth: receiver_scale must be > 0");
  if (!(empty_defence_rate >= 0.0 && empty_defence_rate <= 1.0)) {
    throw std::invalid_argument("synth: empty_defence_rate must lie in [0, 1]");
  }
  if (possession_min < 1 || possession_max < possession_min) {
    throw std::invalid_argument("synth: possession run bounds invalid");
  }
  if (event_clock_offset < -45 || event_clock_offset > 45) {
    throw std::invalid_argument("synth: event_clock_offset must lie in [-45, 45] frames");
  }
  if (position_noise < 0.0 || velocity_sd < 0.0) throw std::invalid_argument("synth: noise levels must be >= 0");
  features.pitch.validate();
  features.motion.validate();
  features.weight.validate();
}

namespace {

const TeamId kHome = "home";
const TeamId kAway = "away";

std::string player_id(const TeamId& team, int i) { return fmt::format("{}_{:02d}", team, i + 1); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vec2 draw_velocity(Rng& rng, double sd) {
  Vec2 v{rng.normal(0.0, sd), rng.normal(0.0, sd)};
  const double s = v.norm();
  constexpr double kCap = 9.0;
  return s > kCap ? v * (kCap / s) : v;
}

// Rejection-samples a position at least 1 m from everything placed so far.
template <typename Draw>
Point2 place(const std::vector<Point2>& taken, Draw&& draw) {
  Point2 p = draw();
  for (int attempt = 0; attempt < 20; ++attempt) {
    const bool clear = std::all_of(taken.begin(), taken.end(), [&](Point2 q) { return distance(p, q) >= 1.0; });
    if (clear) break;
    p = draw();
  }
  return p;
}

// One pass situation in coordinates where `attacking` plays toward +x.
struct Scene {
  TrackedFrame frame;  // sides assigned, normalized
  PlayerId passer;
};

Scene draw_scene(const SynthConfig& cfg, Rng& rng, const TeamId& attacking, const TeamId& defending) {
  const PitchSpec& pitch = cfg.features.pitch;
  const double hl = pitch.half_length(), hw = pitch.half_width();
  auto clampx = [&](double x) { return std::clamp(x, -hl + 1.0, hl - 0.5); };
  auto clampy = [&](double y) { return std::clamp(y, -hw + 0.5, hw - 0.5); };

  Scene s;
  std::vector<Point2> taken;
  const Point2 ball{rng.uniform(-0.33, 0.36) * pitch.length, rng.uniform(-0.44, 0.44) * pitch.width};

  for (int i = 0; i < cfg.attackers; ++i) {
    PlayerState p{.id = player_id(attacking, i), .team = attacking, .side = Side::attacking};
    if (i == 0) {
      p.pos = {-hl + 2.5, clampy(rng.normal(0.0, 2.0))};
    } else if (i == 1) {
      p.pos = ball;
      s.passer = p.id;
    } else {
      p.pos = place(taken, [&] { return Point2{clampx(ball.x + rng.normal(0.0, 16.0)), rng.uniform(-hw, hw) * 0.95}; });
    }
    p.vel = draw_velocity(rng, cfg.velocity_sd);
    taken.push_back(p.pos);
    s.frame.players.push_back(std::move(p));
  }
  for (int i = 0; i < cfg.defenders; ++i) {
    PlayerState p{.id = player_id(defending, i), .team = defending, .side = Side::defending};
    if (i == 0) {
      p.pos = {hl - rng.uniform(0.5, 3.0), clampy(rng.normal(0.0, 2.0))};
    } else {
      p.pos = place(taken, [&] { return Point2{clampx(ball.x + rng.uniform(-8.0, 30.0)), rng.uniform(-hw, hw) * 0.95}; });
    }
    p.vel = draw_velocity(rng, cfg.velocity_sd);
    taken.push_back(p.pos);
    s.frame.players.push_back(std::move(p));
  }
  s.frame.ball.pos = ball;
  s.frame.meta.attacking_team = attacking;
  return s;
}

std::vector<PlayerState> kickoff_formation(const TeamId& right_team, const TeamId& left_team, int n_right,
                                           int n_left) {
  std::vector<PlayerState> out;
  auto line_up = [&](const TeamId& team, int n, double sign) {
    for (int i = 0; i < n; ++i) {
      const double depth = i == 0 ? 50.0 : 8.0 + 10.0 * ((i - 1) / 4);
      const double lateral = i == 0 ? 0.0 : -24.0 + 16.0 * ((i - 1) % 4);
      out.push_back({.id = player_id(team, i), .team = team, .pos = {sign * depth, lateral}});
    }
  };
  line_up(right_team, n_right, -1.0);
  line_up(left_team, n_left, 1.0);
  return out;
}

}  // namespace

std::vector<TrackedFrame> synthesize_kickoff_trace(long n_frames, long impulse_frame, double fps, double speed,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  const double heading = rng.uniform(-1.0, 1.0);
  const Vec2 dir{-std::cos(heading), std::sin(heading)};
  std::vector<TrackedFrame> frames;
  for (long i = 0; i < n_frames; ++i) {
    TrackedFrame f;
    f.frame_index = i;
    f.time = static_cast<double>(i) / fps;
    if (i > impulse_frame) {
      const double dt = static_cast<double>(i - impulse_frame) / fps;
      f.ball.pos = dir * (speed * dt);
      f.ball.vel = dir * speed;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

SynthMatch synthesize_match(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SynthMatch out;
  const PitchSpec& pitch = cfg.features.pitch;
  const long step = std::max<long>(1, std::lround(cfg.pass_interval * cfg.fps));
  // Long enough that a kickoff window around a shifted event stays inside
  // the trace, away from the sparse pass frames.
  constexpr long kImpulseAt = 110;
  constexpr long kTraceFrames = 220;

  long next_frame = 0;
  int pass_no = 0;
  for (int period = 1; period <= 2; ++period) {
    const TeamId right_team = period == 1 ? kHome : kAway;
    const TeamId left_team = period == 1 ? kAway : kHome;
    const int period_passes = period == 1 ? cfg.passes - cfg.passes / 2 : cfg.passes / 2;

    // Dense kickoff trace; the kicking team attacks right.
    const long base = next_frame;
    const auto formation = kickoff_formation(right_team, left_team, cfg.attackers, cfg.defenders);
    const auto trace = synthesize_kickoff_trace(kTraceFrames, kImpulseAt, cfg.fps, 3.0, rng.bits());
    for (const auto& t : trace) {
      TrackedFrame f = t;
      f.frame_index = base + t.frame_index;
      f.time = static_cast<double>(f.frame_index) / cfg.fps;
      f.meta.period = period;
      f.meta.attack_right_team = right_team;
      f.players = formation;
      out.match.frames.push_back(std::move(f));
    }
    out.match.events.push_back({.event_id = fmt::format("k{}", period),
                                .type = "kickoff",
                                .frame = base + kImpulseAt - 4 + cfg.event_clock_offset,
                                .team = right_team,
                                .player = player_id(right_team, 10 % cfg.attackers)});
    next_frame = base + kTraceFrames;

    TeamId in_possession = right_team;
    int run_left = cfg.possession_min + static_cast<int>(rng.index(cfg.possession_max - cfg.possession_min + 1));
    for (int k = 0; k < period_passes; ++k) {
      if (run_left == 0) {
        in_possession = in_possession == kHome ? kAway : kHome;
        run_left = cfg.possession_min + static_cast<int>(rng.index(cfg.possession_max - cfg.possession_min + 1));
      }
      --run_left;
      const TeamId defending = in_possession == kHome ? kAway : kHome;
      Scene scene = draw_scene(cfg, rng, in_possession, defending);
      if (cfg.defenders > 0 && rng.bernoulli(cfg.empty_defence_rate)) {
        std::erase_if(scene.frame.players, [](const PlayerState& p) { return p.side == Side::defending; });
      }
      TrackedFrame& truth = scene.frame;

      // Intended receiver: onside teammates, nearer ones more likely.
      const PlayerSet offside = offside_positions(truth);
      std::vector<const PlayerState*> options;
      for (const auto& p : truth.players) {
        if (p.side == Side::attacking && p.id != scene.passer && !offside.contains(p.id)) options.push_back(&p);
      }
      if (options.empty()) {
        for (const auto& p : truth.players) {
          if (p.side == Side::attacking && p.id != scene.passer) options.push_back(&p);
        }
      }
      std::vector<double> weights;
      double total = 0.0;
      for (auto* p : options) {
        weights.push_back(std::exp(-distance(p->pos, truth.ball.pos) / cfg.receiver_scale));
        total += weights.back();
      }
      double u = rng.uniform() * total;
      std::size_t pick = 0;
      while (pick + 1 < options.size() && u >= weights[pick]) u -= weights[pick++];
      const PlayerState& receiver = *options[pick];

      OffBallFeatures rf;
      rf.player_id = receiver.id;
      rf.dist_ball = distance(receiver.pos, truth.ball.pos);
      rf.time_to_player = time_to_point(truth, receiver.pos, cfg.features.motion);
      rf.time_to_passline = time_to_segment(truth, truth.ball.pos, receiver.pos, cfg.features.motion);
      if (cfg.rule.fast_space_vel != 0.0) {
        PlayerSet excluded = offside;
        excluded.erase(receiver.id);
        const auto field = compute_dominance_grid(truth, pitch, cfg.features.motion, excluded);
        rf.fast_space_vel = DominanceProbe(field, truth, cfg.features.motion, cfg.features.weight).base_score(receiver.id);
      }
      const SuccessRule& r = cfg.rule;
      const double z = r.intercept + r.fast_space_vel * rf.fast_space_vel + r.dist_ball * rf.dist_ball +
                       r.time_to_player * std::min(rf.time_to_player, r.time_cap) +
                       r.time_to_passline * std::min(rf.time_to_passline, r.time_cap);
      const double p = sigmoid(z);
      const bool success = rng.bernoulli(p);

      // Record: noisy positions, raw coordinates.
      TrackedFrame rec = truth;
      rec.frame_index = next_frame;
      rec.time = static_cast<double>(next_frame) / cfg.fps;
      rec.meta = FrameMeta{.period = period, .attack_right_team = right_team};
      for (auto& pl : rec.players) {
        if (cfg.position_noise > 0.0) {
          pl.pos = pl.pos + Point2{rng.normal(0.0, cfg.position_noise), rng.normal(0.0, cfg.position_noise)};
        }
      }
      const bool mirror = in_possession != right_team;
      rec = normalize_attack_direction(rec, !mirror, pitch);
      rec.meta.warnings.clear();
      rec.meta.out_of_bounds = false;
      for (auto& pl : rec.players) pl.side = Side::defending;
      out.match.frames.push_back(rec);

      const std::string event_id = fmt::format("p{:05d}", ++pass_no);
      out.match.events.push_back({.event_id = event_id,
                                  .type = "pass",
                                  .frame = next_frame + cfg.event_clock_offset,
                                  .team = in_possession,
                                  .player = scene.passer,
                                  .receiver = receiver.id,
                                  .outcome = success ? PassOutcome::success : PassOutcome::failure,
                                  .pos = rec.ball.pos});
      out.ground_truth[event_id] = p;
      out.receiver_truth[event_id] = rf;
      next_frame += step;
    }
    next_frame += 1000;
  }
  return out;
}

void write_ground_truth(std::ostream& out, const std::map<std::string, double>& truth) {
  for (const auto& [id, p] : truth) {
    nlohmann::ordered_json j;
    j["event_id"] = id;
    j["p"] = p;
    out << j.dump() << '\n';
  }
}

}  // namespace passlab
