#include <algorithm>
#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "passlab/dominance.hpp"
#include "test_util.hpp"

using namespace passlab;
using passlab::testing::frame_of;
using passlab::testing::player;
using passlab::testing::random_frame;

namespace {

const PitchSpec kPitch;
const MotionParams kMotion;
const WeightParams kW;

// Independent re-implementation used as the oracle: the attacking-side
// weight written out from its definition, and per-cell argmin over players
// sorted by id.
double oracle_weight(Point2 c, const PitchSpec& pitch, double beta, bool attacking) {
  double xn = (c.x + pitch.length / 2) / pitch.length;
  if (!attacking) xn = 1 - xn;
  return xn * (1 - beta * std::abs(c.y) / (pitch.width / 2));
}

// Score of `id` after a full recompute with that player placed at `pos`.
double oracle_score(TrackedFrame f, const PlayerId& id, Point2 pos, const PitchSpec& pitch, const MotionParams& mp,
                    const PlayerSet& excluded = {}) {
  for (auto& p : f.players) {
    if (p.id == id) p.pos = pos;
  }
  std::vector<const PlayerState*> ps;
  for (const auto& p : f.players) {
    if (!excluded.contains(p.id)) ps.push_back(&p);
  }
  std::sort(ps.begin(), ps.end(), [](auto* a, auto* b) { return a->id < b->id; });
  const PlayerState* me = f.find(id);
  double total = 0.0;
  const std::size_t cols = pitch.cols(), rows = pitch.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double x0 = -pitch.length / 2 + static_cast<double>(c) * pitch.grid_cell;
      const double y0 = -pitch.width / 2 + static_cast<double>(r) * pitch.grid_cell;
      const double x1 = std::min(x0 + pitch.grid_cell, pitch.length / 2);
      const double y1 = std::min(y0 + pitch.grid_cell, pitch.width / 2);
      const Point2 center{x0 + pitch.grid_cell / 2, y0 + pitch.grid_cell / 2};
      const PlayerState* best = nullptr;
      double best_t = INFINITY;
      for (auto* p : ps) {
        const double t = arrival_time(*p, center, mp);
        if (t < best_t) {
          best_t = t;
          best = p;
        }
      }
      if (best == me) {
        total += (x1 - x0) * (y1 - y0) * oracle_weight(center, pitch, 0.5, me->side == Side::attacking);
      }
    }
  }
  return total;
}

}  // namespace

TEST(ArrivalTime, Examples) {
  const auto still = player("p", Side::attacking, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(arrival_time(still, {7.8, 0.0}, kMotion), 1.2);
  EXPECT_DOUBLE_EQ(arrival_time(still, {0.0, 0.0}, kMotion), 0.2);
  const auto moving = player("p", Side::attacking, {0.0, 0.0}, {5.0, 0.0});
  EXPECT_DOUBLE_EQ(arrival_time(moving, {1.0, 0.0}, kMotion), 0.2);
}

TEST(ArrivalTime, TranslationEquivariance) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    // Multiples of 1/8 keep every sum exact, so equality is exact.
    auto q = [&] { return std::round(rng.uniform(-400.0, 400.0)) / 8.0; };
    const auto p = player("p", Side::attacking, {q(), q()});
    const Point2 target{q(), q()};
    const Vec2 shift{q(), q()};
    auto moved = p;
    moved.pos = p.pos + shift;
    EXPECT_EQ(arrival_time(p, target, kMotion), arrival_time(moved, target + shift, kMotion));
    // With velocity the reaction drift rounds, so only near-equality holds.
    auto fast = p;
    fast.vel = {q() / 8, q() / 8};
    auto fast_moved = fast;
    fast_moved.pos = fast.pos + shift;
    EXPECT_NEAR(arrival_time(fast, target, kMotion), arrival_time(fast_moved, target + shift, kMotion), 1e-12);
  }
}

TEST(ArrivalTime, NeverBelowReactionTime) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto p = player("p", Side::attacking, {rng.uniform(-50, 50), rng.uniform(-30, 30)},
                          {rng.normal(0, 3), rng.normal(0, 3)});
    EXPECT_GE(arrival_time(p, {rng.uniform(-50, 50), rng.uniform(-30, 30)}, kMotion), kMotion.reaction_time);
  }
}

TEST(MotionParams, Validation) {
  EXPECT_THROW((MotionParams{-0.1, 7.8}.validate()), std::invalid_argument);
  EXPECT_THROW((MotionParams{0.2, 0.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((MotionParams{0.0, 7.8}.validate()));
}

TEST(DominanceGrid, SinglePlayerOwnsEverything) {
  const auto f = frame_of({player("solo", Side::attacking, {3.0, 4.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion);
  EXPECT_EQ(field.size(), kPitch.cell_count());
  EXPECT_TRUE(std::all_of(field.owner.begin(), field.owner.end(), [](auto o) { return o == 0; }));
  EXPECT_EQ(field.owned_counts()[0], kPitch.cell_count());
}

TEST(DominanceGrid, NoEligiblePlayerIsError) {
  const auto f = frame_of({player("solo", Side::attacking, {3.0, 4.0})});
  EXPECT_THROW(compute_dominance_grid(f, kPitch, kMotion, {"solo"}), std::invalid_argument);
  EXPECT_THROW(compute_dominance_grid(frame_of({}), kPitch, kMotion), std::invalid_argument);
}

TEST(DominanceGrid, SymmetricPairSplitsEvenly) {
  const auto f = frame_of({player("a", Side::attacking, {-10.0, 0.0}), player("b", Side::attacking, {10.0, 0.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion);
  const auto counts = field.owned_counts();
  EXPECT_EQ(counts[0], kPitch.cell_count() / 2);
  EXPECT_EQ(counts[1], kPitch.cell_count() / 2);
}

TEST(DominanceGrid, TiesGoToSmallerId) {
  // Same spot: every cell is a tie.
  const auto f = frame_of({player("zed", Side::attacking, {0.0, 0.0}), player("amy", Side::defending, {0.0, 0.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion);
  EXPECT_EQ(field.players.front(), "amy");
  for (std::size_t c = 0; c < field.size(); ++c) ASSERT_EQ(field.owner_id(c), "amy");
}

TEST(DominanceGrid, PartitionAndArrivalBounds) {
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    const auto field = compute_dominance_grid(f, kPitch, kMotion);
    const auto counts = field.owned_counts();
    std::size_t total = 0;
    for (auto c : counts) total += c;
    EXPECT_EQ(total, field.size());
    for (std::size_t c = 0; c < field.size(); ++c) {
      ASSERT_NE(field.owner[c], kNoOwner);
      ASSERT_GE(field.arrival[c], kMotion.reaction_time);
      ASSERT_LE(field.arrival[c], field.runner_up_arrival[c]);
    }
  }
}

TEST(DominanceGrid, MatchesNearestNeighbourWithoutReactionOrVelocity) {
  const MotionParams mp{0.0, 7.8};
  Rng rng(22);
  for (int k = 0; k < 10; ++k) {
    const auto f = random_frame(rng);
    const auto field = compute_dominance_grid(f, kPitch, mp);
    std::size_t mismatches = 0;
    for (std::size_t c = 0; c < field.size(); ++c) {
      const Point2 p = field.cell_center(c);
      const PlayerState* best = nullptr;
      double best_d2 = INFINITY;
      for (const auto& pl : f.players) {
        const double d2 = (pl.pos.x - p.x) * (pl.pos.x - p.x) + (pl.pos.y - p.y) * (pl.pos.y - p.y);
        if (d2 < best_d2 || (d2 == best_d2 && pl.id < best->id)) {
          best_d2 = d2;
          best = &pl;
        }
      }
      if (field.owner_id(c) != best->id) ++mismatches;
    }
    EXPECT_EQ(mismatches, 0u);
  }
}

TEST(DominanceGrid, CellGeometry) {
  const PitchSpec odd{105.0, 68.0, 0.7};  // neither side divides evenly
  const auto f = frame_of({player("solo", Side::attacking, {0.0, 0.0})});
  const auto field = compute_dominance_grid(f, odd, kMotion);
  double area = 0.0;
  for (std::size_t c = 0; c < field.size(); ++c) area += field.cell_area(c);
  EXPECT_NEAR(area, 105.0 * 68.0, 1e-8);
  const Point2 first = field.cell_center(0);
  EXPECT_DOUBLE_EQ(first.x, -52.5 + 0.35);
  EXPECT_DOUBLE_EQ(first.y, -34.0 + 0.35);
  EXPECT_DOUBLE_EQ(field.cell_center(1).x, -52.5 + 1.05);
  EXPECT_DOUBLE_EQ(field.cell_center(field.cols).y, -34.0 + 1.05);
}

TEST(SpaceScores, SingleAttackerClosedForm) {
  const auto f = frame_of({player("a", Side::attacking, {0.0, 0.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion);
  const auto table = space_scores(field, f, kW);
  // 105 * 68 * mean(x_norm) * mean(1 - 0.5 y_norm) = 105 * 68 * 0.5 * 0.75
  EXPECT_NEAR(table.entries[0].score, 2677.5, 2677.5 * 1e-9);
}

TEST(SpaceScores, SingleDefenderMatchesByMirrorSymmetry) {
  const auto f = frame_of({player("a", Side::attacking, {40.0, 0.0}), player("d", Side::defending, {0.0, 0.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion, {"a"});
  const auto table = space_scores(field, f, kW);
  EXPECT_NEAR(table.find("d")->score, 2677.5, 2677.5 * 1e-9);
  EXPECT_TRUE(table.find("a")->excluded_offside);
  EXPECT_EQ(table.find("a")->score, 0.0);
  for (double d : table.find("a")->deltas) EXPECT_EQ(d, 0.0);
}

TEST(SpaceScores, RightPlayerOutscoresLeftMirror) {
  const auto f = frame_of({player("l", Side::attacking, {-10.0, 0.0}), player("r", Side::attacking, {10.0, 0.0})});
  const auto field = compute_dominance_grid(f, kPitch, kMotion);
  const auto table = space_scores(field, f, kW);
  EXPECT_LT(table.find("l")->score, table.find("r")->score);
  EXPECT_NEAR(table.find("l")->score + table.find("r")->score, 2677.5, 1e-6);
}

TEST(SpaceScores, MatchIndependentOracle) {
  Rng rng(31);
  for (int k = 0; k < 3; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    const auto table = space_scores(compute_dominance_grid(f, kPitch, kMotion), f, kW);
    for (const auto& p : f.players) {
      EXPECT_NEAR(table.find(p.id)->score, oracle_score(f, p.id, p.pos, kPitch, kMotion), 1e-8);
    }
  }
}

TEST(SpaceScores, MirrorAcrossLongAxisLeavesScoresUnchanged) {
  Rng rng(32);
  for (int k = 0; k < 5; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    auto m = f;
    for (auto& p : m.players) {
      p.pos.y = -p.pos.y;
      p.vel.y = -p.vel.y;
    }
    const auto a = space_scores(compute_dominance_grid(f, kPitch, kMotion), f, kW);
    const auto b = space_scores(compute_dominance_grid(m, kPitch, kMotion), m, kW);
    for (const auto& e : a.entries) EXPECT_NEAR(e.score, b.find(e.id)->score, 1e-9 * (1 + e.score));
  }
}

TEST(SpaceScores, GridRefinementChangesScoresLittle) {
  Rng rng(33);
  const PitchSpec fine{105.0, 68.0, 0.25};
  int violations = 0, checked = 0;
  double worst = 0.0, worst_score = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    const auto a = space_scores(compute_dominance_grid(f, kPitch, kMotion), f, kW);
    const auto b = space_scores(compute_dominance_grid(f, fine, kMotion), f, kW);
    for (const auto& e : a.entries) {
      const double ref = b.find(e.id)->score;
      const double rel = std::abs(e.score - ref) / std::max(ref, 1e-12);
      ++checked;
      if (rel >= 0.02) ++violations;
      if (rel > worst) {
        worst = rel;
        worst_score = ref;
      }
    }
  }
  EXPECT_EQ(violations, 0) << violations << " of " << checked << " players moved by >= 2%; worst " << worst
                           << " on a score of " << worst_score;
}

TEST(Deltas, SinglePlayerAllZero) {
  const auto f = frame_of({player("solo", Side::attacking, {3.0, 4.0})});
  const auto d = directional_space_deltas(f, "solo", kPitch, kMotion, kW);
  for (double v : d) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Deltas, UnknownOrExcludedPlayerIsError) {
  const auto f = frame_of({player("a", Side::attacking, {3.0, 4.0}), player("b", Side::attacking, {0.0, 0.0})});
  EXPECT_THROW(directional_space_deltas(f, "nobody", kPitch, kMotion, kW), std::invalid_argument);
  EXPECT_THROW(directional_space_deltas(f, "a", kPitch, kMotion, kW, {"a"}), std::invalid_argument);
}

TEST(Deltas, ForwardMoveShiftsBisectorByHalfMetre) {
  const auto f = frame_of({player("l", Side::attacking, {-10.0, 0.0}), player("r", Side::attacking, {10.0, 0.0})});
  const auto d = directional_space_deltas(f, "r", kPitch, kMotion, kW);
  // Strip 0 <= x <= 0.5 changes hands: area 0.5 * 68, mean x_norm 52.75/105,
  // mean lateral factor 0.75.
  EXPECT_NEAR(d[0], -0.5 * 68.0 * (52.75 / 105.0) * 0.75, 1e-9);
  // Backward the gained strip is -0.5 <= x <= 0.
  EXPECT_NEAR(d[4], +0.5 * 68.0 * (52.25 / 105.0) * 0.75, 1e-9);
}

TEST(Deltas, ProbeEqualsFullRecompute) {
  Rng rng(41);
  const auto dirs = probe_directions();
  for (int k = 0; k < 3; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    for (const char* id : {"a03", "d07"}) {
      const auto d = directional_space_deltas(f, id, kPitch, kMotion, kW);
      const double base = oracle_score(f, id, f.find(id)->pos, kPitch, kMotion);
      for (int j = 0; j < 8; ++j) {
        const Point2 moved = kPitch.clamp(f.find(id)->pos + dirs[j]);
        EXPECT_NEAR(d[j], oracle_score(f, id, moved, kPitch, kMotion) - base, 1e-8) << id << " dir " << j;
      }
    }
  }
}

TEST(Deltas, ClampedAtBoundary) {
  // Off the pitch the clamp may stretch a probe beyond 1 m; deltas must still
  // agree with a full recompute.
  const auto f = frame_of({player("a", Side::attacking, {54.0, 35.0}), player("b", Side::attacking, {40.0, 20.0})});
  const auto d = directional_space_deltas(f, "a", kPitch, kMotion, kW);
  const auto dirs = probe_directions();
  const double base = oracle_score(f, "a", f.find("a")->pos, kPitch, kMotion);
  for (int j = 0; j < 8; ++j) {
    EXPECT_NEAR(d[j], oracle_score(f, "a", kPitch.clamp(f.find("a")->pos + dirs[j]), kPitch, kMotion) - base, 1e-8);
  }
}

TEST(Deltas, MirrorSwapsLeftAndRight) {
  Rng rng(42);
  const auto f = random_frame(rng, 11, 11, 2.0);
  auto m = f;
  for (auto& p : m.players) {
    p.pos.y = -p.pos.y;
    p.vel.y = -p.vel.y;
  }
  const auto a = directional_space_deltas(f, "a05", kPitch, kMotion, kW);
  const auto b = directional_space_deltas(m, "a05", kPitch, kMotion, kW);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(a[k], b[(8 - k) % 8], 1e-9);
}

TEST(Deltas, ProbeDirectionsAreUnitAndCounterclockwise) {
  const auto dirs = probe_directions();
  for (int k = 0; k < 8; ++k) {
    EXPECT_NEAR(dirs[k].norm(), 1.0, 1e-15);
    const double ang = k * M_PI / 4;
    EXPECT_NEAR(dirs[k].x, std::cos(ang), 1e-15);
    EXPECT_NEAR(dirs[k].y, std::sin(ang), 1e-15);
  }
}

TEST(Offside, Examples) {
  auto f = frame_of({player("att", Side::attacking, {40.0, 0.0}), player("d1", Side::defending, {50.0, 0.0}),
                     player("d2", Side::defending, {30.0, 0.0})},
                    {20.0, 0.0});
  EXPECT_TRUE(offside_positions(f).contains("att"));

  f.players[0].pos.x = -5.0;
  f.ball.pos.x = -20.0;
  EXPECT_FALSE(offside_positions(f).contains("att"));

  f.players[0].pos.x = 30.0;  // level with the second-last defender
  f.ball.pos.x = 20.0;
  EXPECT_FALSE(offside_positions(f).contains("att"));

  f.players[0].pos.x = 35.0;
  f.ball.pos.x = 36.0;  // behind the ball
  EXPECT_FALSE(offside_positions(f).contains("att"));
}

TEST(Offside, FewDefendersUseBallAndHalfwayOnly) {
  auto f = frame_of({player("att", Side::attacking, {10.0, 0.0}), player("d1", Side::defending, {50.0, 0.0})}, {5.0, 0.0});
  EXPECT_TRUE(offside_positions(f).contains("att"));
}

TEST(Offside, NeverExcludesDefenders) {
  Rng rng(51);
  for (int k = 0; k < 200; ++k) {
    const auto f = random_frame(rng);
    for (const auto& id : offside_positions(f)) EXPECT_EQ(f.find(id)->side, Side::attacking);
  }
}
