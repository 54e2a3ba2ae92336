#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "passlab/errors.hpp"
#include "passlab/features.hpp"
#include "test_util.hpp"

using namespace passlab;
using passlab::testing::frame_of;
using passlab::testing::player;
using passlab::testing::random_frame;

namespace {

const FeatureParams kParams;

// Sampled minimum of the defenders' arrival time over the segment.
double sampled_segment_time(const TrackedFrame& f, Point2 a, Point2 b, int samples = 10000) {
  double best = kInf;
  for (const auto& d : f.players) {
    if (d.side != Side::defending) continue;
    for (int i = 0; i <= samples; ++i) {
      const double t = static_cast<double>(i) / samples;
      best = std::min(best, arrival_time(d, a + (b - a) * t, kParams.motion));
    }
  }
  return best;
}

OffBallFeatures cand(const std::string& id, double dist, double space = 0.0, double ttp = 1.0, double ttl = 1.0) {
  OffBallFeatures f;
  f.player_id = id;
  f.dist_ball = dist;
  f.fast_space_vel = space;
  f.variation_space_vel = space / 10;
  f.time_to_player = ttp;
  f.time_to_passline = ttl;
  return f;
}

}  // namespace

TEST(Segment, ClosestPoint) {
  EXPECT_EQ(closest_point_on_segment({-10, 0}, {10, 0}, {0, 10}), (Point2{0, 0}));
  EXPECT_EQ(closest_point_on_segment({-10, 0}, {10, 0}, {20, 5}), (Point2{10, 0}));
  EXPECT_EQ(closest_point_on_segment({-10, 0}, {10, 0}, {-30, -5}), (Point2{-10, 0}));
  EXPECT_EQ(closest_point_on_segment({3, 3}, {3, 3}, {0, 0}), (Point2{3, 3}));
}

TEST(Interception, PerpendicularDefender) {
  const auto f = frame_of({player("att", Side::attacking, {10, 0}), player("def", Side::defending, {0, 10})}, {-10, 0});
  const double t = time_to_segment(f, {-10, 0}, {10, 0}, kParams.motion);
  EXPECT_NEAR(t, 0.2 + 10.0 / 7.8, 1e-12);
  EXPECT_NEAR(t, 1.482, 5e-4);
  EXPECT_NEAR(t, sampled_segment_time(f, {-10, 0}, {10, 0}), 1e-3);
}

TEST(Interception, DefenderOnTheLine) {
  const auto f = frame_of({player("att", Side::attacking, {10, 0}), player("def", Side::defending, {2, 0})}, {-10, 0});
  EXPECT_DOUBLE_EQ(time_to_segment(f, {-10, 0}, {10, 0}, kParams.motion), 0.2);
}

TEST(Interception, NoDefendersIsInfinite) {
  // Behind the ball so that nobody is offside.
  const auto f = frame_of({player("att", Side::attacking, {-10, 0}), player("att2", Side::attacking, {-20, 0})});
  EXPECT_TRUE(std::isinf(time_to_segment(f, {-10, 0}, {10, 0}, kParams.motion)));
  EXPECT_TRUE(std::isinf(time_to_point(f, {10, 0}, kParams.motion)));
  const auto feats = offball_features(f, "att2", kParams);
  ASSERT_EQ(feats.size(), 1u);
  EXPECT_TRUE(std::isinf(feats[0].time_to_player));
  EXPECT_TRUE(std::isinf(feats[0].time_to_passline));
}

TEST(Interception, AnalyticMatchesSampledOnRandomConfigurations) {
  Rng rng(61);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Point2 a{rng.uniform(-50, 50), rng.uniform(-32, 32)};
    const Point2 b{rng.uniform(-50, 50), rng.uniform(-32, 32)};
    const auto f = frame_of({player("d", Side::defending, {rng.uniform(-50, 50), rng.uniform(-32, 32)},
                                    {rng.normal(0, 3), rng.normal(0, 3)})});
    worst = std::max(worst, std::abs(time_to_segment(f, a, b, kParams.motion) - sampled_segment_time(f, a, b)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(OffBall, PasserMissingIsError) {
  const auto f = frame_of({player("att", Side::attacking, {10, 0})});
  EXPECT_THROW(offball_features(f, "ghost", kParams), DataError);
}

TEST(OffBall, ExcludesPasserAndOffside) {
  auto f = frame_of({player("pass", Side::attacking, {0, 0}), player("ok", Side::attacking, {10, 5}),
                     player("off", Side::attacking, {45, 0}), player("d1", Side::defending, {30, 0}),
                     player("d2", Side::defending, {50, 0})},
                    {0, 0});
  const auto feats = offball_features(f, "pass", kParams);
  ASSERT_EQ(feats.size(), 1u);
  EXPECT_EQ(feats[0].player_id, "ok");
  EXPECT_NEAR(feats[0].dist_ball, std::hypot(10.0, 5.0), 1e-12);
}

TEST(OffBall, Invariants) {
  Rng rng(62);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_frame(rng, 11, 11, 2.0);
    const auto feats = offball_features(f, "a00", kParams);
    for (const auto& o : feats) {
      EXPECT_NE(o.player_id, "a00");
      EXPECT_GE(o.dist_ball, 0.0);
      EXPECT_GE(o.time_to_player, kParams.motion.reaction_time);
      EXPECT_GE(o.time_to_passline, kParams.motion.reaction_time);
      // The receiver's own position lies on the pass line.
      EXPECT_LE(o.time_to_passline, o.time_to_player);
      EXPECT_GE(o.fast_space_vel, 0.0);
    }
  }
}

TEST(OffBall, VariationIsSignedMaxMagnitudeDelta) {
  Rng rng(63);
  const auto f = random_frame(rng, 11, 11, 2.0);
  const auto offside = offside_positions(f);
  const auto feats = offball_features(f, "a00", kParams);
  for (const auto& o : feats) {
    const auto d = directional_space_deltas(f, o.player_id, kParams.pitch, kParams.motion, kParams.weight, offside);
    double best = 0.0;
    for (double v : d) {
      if (std::abs(v) > std::abs(best)) best = v;
    }
    EXPECT_NEAR(o.variation_space_vel, best, 1e-9) << o.player_id;
  }
}

TEST(OffBall, InvariantUnderRelabelling) {
  Rng rng(64);
  const auto f = random_frame(rng, 11, 11, 2.0);
  auto g = f;
  std::map<std::string, std::string> rename;
  for (auto& p : g.players) {
    // Reverse the id order while keeping sides.
    const std::string fresh = (p.side == Side::attacking ? "x" : "y") + std::to_string(99 - std::stoi(p.id.substr(1)));
    rename[p.id] = fresh;
    p.id = fresh;
  }
  const auto a = offball_features(f, "a00", kParams);
  const auto b = offball_features(g, rename["a00"], kParams);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& fa : a) {
    const auto it = std::find_if(b.begin(), b.end(), [&](auto& x) { return x.player_id == rename[fa.player_id]; });
    ASSERT_NE(it, b.end());
    EXPECT_NEAR(fa.fast_space_vel, it->fast_space_vel, 1e-9);
    EXPECT_NEAR(fa.variation_space_vel, it->variation_space_vel, 1e-9);
    EXPECT_EQ(fa.dist_ball, it->dist_ball);
    EXPECT_EQ(fa.time_to_player, it->time_to_player);
    EXPECT_EQ(fa.time_to_passline, it->time_to_passline);
  }
}

TEST(OnBall, HolderAtPenaltySpot) {
  const auto f = frame_of({player("h", Side::attacking, {41.5, 0}), player("d", Side::defending, {41.5, 7.8})});
  const auto ob = onball_features(f, PlayerId("h"), kParams);
  const auto& s = std::get<HolderState>(ob.state);
  EXPECT_NEAR(s.dist_goal, 11.0, 1e-12);
  EXPECT_NEAR(s.angle_goal, 0.0, 1e-12);
  EXPECT_NEAR(s.nearest_defender_time, 1.2, 1e-12);
}

TEST(OnBall, HolderAloneHasZeroDeltas) {
  const auto f = frame_of({player("h", Side::attacking, {10, 3})});
  const auto& s = std::get<HolderState>(onball_features(f, PlayerId("h"), kParams).state);
  for (double d : s.holder_deltas) EXPECT_NEAR(d, 0.0, 1e-9);
  EXPECT_TRUE(std::isinf(s.nearest_defender_time));
}

TEST(OnBall, LooseBall) {
  auto f = frame_of({player("a1", Side::attacking, {41.5, 0}), player("a2", Side::attacking, {0, 0}),
                     player("d1", Side::defending, {-52.5, 34}), player("d2", Side::defending, {-41.5, 0})},
                    {-45, 25});
  f.ball.vel = {3, 4};
  const auto& s = std::get<LooseBallState>(onball_features(f, std::nullopt, kParams).state);
  EXPECT_DOUBLE_EQ(s.ball_speed, 5.0);
  EXPECT_EQ(s.attacking.player_id, "a2");
  EXPECT_NEAR(s.attacking.dist_goal, 52.5, 1e-12);
  // Defenders are measured against the goal at -x, which they attack.
  EXPECT_EQ(s.defending.player_id, "d1");
  EXPECT_NEAR(s.defending.dist_goal, 34.0, 1e-12);
  EXPECT_NEAR(s.defending.angle_goal, M_PI / 2, 1e-12);
}

TEST(OnBall, Errors) {
  const auto f = frame_of({player("a1", Side::attacking, {0, 0})});
  EXPECT_THROW(onball_features(f, PlayerId("nobody"), kParams), std::invalid_argument);
  EXPECT_THROW(onball_features(f, std::nullopt, kParams), std::invalid_argument);
}

TEST(SelectTopN, DistanceAscending) {
  const std::vector<OffBallFeatures> c = {cand("p1", 12), cand("p2", 4), cand("p3", 9), cand("p4", 20), cand("p5", 7)};
  EXPECT_EQ(select_top_n(c, 3, RankingVariable::dist_ball), (std::vector<PlayerId>{"p2", "p5", "p3"}));
}

TEST(SelectTopN, ArgmaxAndTies) {
  const std::vector<OffBallFeatures> c = {cand("b", 5, 10), cand("a", 5, 30), cand("c", 1, 20)};
  EXPECT_EQ(select_top_n(c, 1, RankingVariable::fast_space_vel), (std::vector<PlayerId>{"a"}));
  const std::vector<OffBallFeatures> tie = {cand("b", 5), cand("a", 5)};
  EXPECT_EQ(select_top_n(tie, 2, RankingVariable::dist_ball), (std::vector<PlayerId>{"a", "b"}));
  EXPECT_EQ(select_top_n(tie, 5, RankingVariable::dist_ball).size(), 2u);
  EXPECT_THROW(select_top_n(tie, 0, RankingVariable::dist_ball), std::invalid_argument);
}

TEST(SelectTopN, InfinityPlacement) {
  const std::vector<OffBallFeatures> c = {cand("a", 1, 0, 2.0), cand("b", 1, 0, kInf), cand("c", 1, 0, 3.0)};
  EXPECT_EQ(select_top_n(c, 3, RankingVariable::time_to_player, InfRanking::first),
            (std::vector<PlayerId>{"b", "c", "a"}));
  EXPECT_EQ(select_top_n(c, 3, RankingVariable::time_to_player, InfRanking::last),
            (std::vector<PlayerId>{"c", "a", "b"}));
}

TEST(SelectTopN, InvariantUnderMonotoneTransform) {
  Rng rng(65);
  for (int k = 0; k < 200; ++k) {
    std::vector<OffBallFeatures> c;
    for (int i = 0; i < 10; ++i) {
      c.push_back(cand(fmt::format("p{}", i), rng.uniform(0, 60), rng.uniform(0, 500), rng.uniform(0.2, 4),
                       rng.uniform(0.2, 4)));
    }
    for (auto var : kRankingVariables) {
      auto t = c;
      for (auto& f : t) {
        f.dist_ball = std::exp(f.dist_ball / 10) + 3;
        f.fast_space_vel = std::cbrt(f.fast_space_vel) * 7 - 1;
        f.time_to_player = f.time_to_player * f.time_to_player * f.time_to_player;
        f.time_to_passline = std::log(f.time_to_passline);
      }
      ASSERT_EQ(select_top_n(c, 4, var), select_top_n(t, 4, var)) << to_string(var);
    }
  }
}

TEST(RankingVariable, NamesRoundTrip) {
  for (auto v : kRankingVariables) EXPECT_EQ(parse_ranking_variable(to_string(v)), v);
  EXPECT_THROW(parse_ranking_variable("speed"), std::invalid_argument);
}

TEST(Table, ColumnNames) {
  const auto cols = feature_columns(2);
  ASSERT_EQ(cols.size(), 10u);
  EXPECT_EQ(cols[0], "fast_space_vel_1");
  EXPECT_EQ(cols[4], "time_to_passline_1");
  EXPECT_EQ(cols[5], "fast_space_vel_2");
  EXPECT_EQ(cols[7], "dist_ball_2");
}

TEST(Table, MedianImputation) {
  std::vector<PassCandidates> passes = {{"e1", 1, {cand("p", 1, 1, 1.0)}},
                                        {"e2", 0, {cand("p", 2, 2, kInf)}},
                                        {"e3", 1, {cand("p", 3, 3, 3.0)}}};
  const auto d = build_dataset(passes, 1, RankingVariable::dist_ball);
  const auto col = static_cast<std::size_t>(std::find(d.table.columns.begin(), d.table.columns.end(), "time_to_player_1") -
                                            d.table.columns.begin());
  EXPECT_DOUBLE_EQ(d.medians.values[col], 2.0);
  EXPECT_EQ(d.table.rows[0].values[col], 1.0);
  EXPECT_EQ(d.table.rows[1].values[col], 2.0);
  EXPECT_EQ(d.table.rows[2].values[col], 3.0);
  EXPECT_TRUE(d.table.rows[1].imputed[col]);
  EXPECT_FALSE(d.table.rows[0].imputed[col]);
  EXPECT_TRUE(std::isinf(d.table.rows[1].raw[col]));
}

TEST(Table, EvenCountMedianAveragesMiddlePair) {
  std::vector<PassCandidates> passes = {{"e1", 1, {cand("p", 1)}}, {"e2", 0, {cand("p", 4)}}};
  const auto d = build_dataset(passes, 1, RankingVariable::dist_ball);
  EXPECT_DOUBLE_EQ(d.medians.values[2], 2.5);
}

TEST(Table, PaddingWhenTooFewCandidates) {
  std::vector<PassCandidates> passes = {
      {"e1", 1, {cand("a", 1), cand("b", 2), cand("c", 3)}},
      {"e2", 0, {cand("a", 5), cand("b", 6)}},
  };
  const auto d = build_dataset(passes, 3, RankingVariable::dist_ball);
  ASSERT_EQ(d.table.width(), 15u);
  const auto& row = d.table.rows[1];
  EXPECT_EQ(row.selected.size(), 2u);
  for (std::size_t c = 10; c < 15; ++c) {
    EXPECT_TRUE(row.imputed[c]);
    EXPECT_TRUE(std::isnan(row.raw[c]));
    EXPECT_EQ(row.values[c], d.medians.values[c]);
  }
  for (std::size_t c = 0; c < 10; ++c) EXPECT_FALSE(row.imputed[c]);
}

TEST(Table, ColumnWithoutFiniteValuesIsError) {
  std::vector<PassCandidates> passes = {{"e1", 1, {cand("p", 1, 1, kInf)}}, {"e2", 0, {cand("p", 2, 2, kInf)}}};
  try {
    build_dataset(passes, 1, RankingVariable::dist_ball);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("time_to_player_1"), std::string::npos);
  }
}

TEST(Table, NoNonFiniteValuesAfterImputation) {
  Rng rng(66);
  std::vector<PassCandidates> passes;
  for (int i = 0; i < 300; ++i) {
    PassCandidates p{fmt::format("e{}", i), i % 3 == 0 ? 0 : 1, {}};
    const int k = static_cast<int>(rng.index(6));
    for (int j = 0; j < k; ++j) {
      p.candidates.push_back(cand(fmt::format("p{}", j), rng.uniform(1, 50), rng.uniform(0, 300),
                                  rng.uniform() < 0.2 ? kInf : rng.uniform(0.2, 3),
                                  rng.uniform() < 0.2 ? kInf : rng.uniform(0.2, 3)));
    }
    passes.push_back(std::move(p));
  }
  for (auto var : kRankingVariables) {
    const auto d = build_dataset(passes, 3, var);
    EXPECT_EQ(d.table.width(), 15u);
    for (const auto& r : d.table.rows) {
      for (double v : r.values) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Table, CsvAndMediansRoundTrip) {
  std::vector<PassCandidates> passes = {{"e1", 1, {cand("a", 1.25, 3.5, 0.75, kInf), cand("b", 2)}},
                                        {"e2", 0, {cand("a", 1.0 / 3.0, 7, 2, 1)}}};
  const auto d = build_dataset(passes, 2, RankingVariable::dist_ball);
  std::stringstream csv;
  write_feature_csv(csv, d.table);
  const auto back = read_feature_csv(csv, "f.csv");
  EXPECT_EQ(back.columns, d.table.columns);
  ASSERT_EQ(back.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back.rows[r].event_id, d.table.rows[r].event_id);
    EXPECT_EQ(back.rows[r].label, d.table.rows[r].label);
    EXPECT_EQ(back.rows[r].values, d.table.rows[r].values);
    EXPECT_EQ(back.rows[r].imputed, d.table.rows[r].imputed);
  }
  std::stringstream js;
  write_medians_json(js, d.medians);
  const auto m = read_medians_json(js);
  EXPECT_EQ(m.columns, d.medians.columns);
  EXPECT_EQ(m.values, d.medians.values);

  std::istringstream bad("event_id,label,x\n");
  EXPECT_THROW(read_feature_csv(bad, "bad.csv"), DataError);
}
