#include "passlab/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "passlab/errors.hpp"

namespace passlab {

std::string_view to_string(RankingVariable v) {
  switch (v) {
    case RankingVariable::fast_space_vel: return "fast_space_vel";
    case RankingVariable::dist_ball: return "dist_ball";
    case RankingVariable::time_to_player: return "time_to_player";
    case RankingVariable::time_to_passline: return "time_to_passline";
  }
  return "?";
}

RankingVariable parse_ranking_variable(std::string_view name) {
  for (auto v : kRankingVariables) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument(fmt::format("unknown ranking variable '{}'", name));
}

double OffBallFeatures::value(RankingVariable v) const {
  switch (v) {
    case RankingVariable::fast_space_vel: return fast_space_vel;
    case RankingVariable::dist_ball: return dist_ball;
    case RankingVariable::time_to_player: return time_to_player;
    case RankingVariable::time_to_passline: return time_to_passline;
  }
  return 0.0;
}

Point2 closest_point_on_segment(Point2 a, Point2 b, Point2 q) {
  const Point2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

double time_to_point(const TrackedFrame& frame, Point2 target, const MotionParams& mp) {
  double best = kInf;
  for (const auto& p : frame.players) {
    if (p.side == Side::defending) best = std::min(best, arrival_time(p, target, mp));
  }
  return best;
}

double time_to_segment(const TrackedFrame& frame, Point2 from, Point2 to, const MotionParams& mp) {
  double best = kInf;
  for (const auto& p : frame.players) {
    if (p.side != Side::defending) continue;
    const Point2 drifted = predicted_position(p.pos, p.vel, mp);
    // The endpoints are checked too so that rounding in the projection can
    // never put the segment time above the time to either end.
    best = std::min({best, arrival_from(drifted, closest_point_on_segment(from, to, drifted), mp),
                     arrival_from(drifted, from, mp), arrival_from(drifted, to, mp)});
  }
  return best;
}

std::vector<OffBallFeatures> offball_features(const TrackedFrame& frame, const PlayerId& passer,
                                              const FeatureParams& params) {
  if (frame.find(passer) == nullptr) {
    throw DataError(fmt::format("passer {} missing from frame {}", passer, frame.frame_index));
  }
  const PlayerSet offside = offside_positions(frame);
  const DominanceField field = compute_dominance_grid(frame, params.pitch, params.motion, offside);
  const DominanceProbe probe(field, frame, params.motion, params.weight);

  std::vector<OffBallFeatures> out;
  for (const auto& p : frame.players) {
    if (p.side != Side::attacking || p.id == passer || offside.contains(p.id)) continue;
    OffBallFeatures f;
    f.player_id = p.id;
    const double score = probe.base_score(p.id);
    const auto deltas = probe.deltas(p.id);
    std::size_t k_star = 0;
    for (std::size_t k = 1; k < deltas.size(); ++k) {
      if (std::abs(deltas[k]) > std::abs(deltas[k_star])) k_star = k;
    }
    f.variation_space_vel = deltas[k_star];
    f.fast_space_vel = score;
    if (params.fast_space == FastSpaceMode::best_move) {
      f.fast_space_vel = score + std::max(0.0, *std::max_element(deltas.begin(), deltas.end()));
    }
    f.dist_ball = distance(frame.ball.pos, p.pos);
    f.time_to_player = time_to_point(frame, p.pos, params.motion);
    f.time_to_passline = time_to_segment(frame, frame.ball.pos, p.pos, params.motion);
    out.push_back(std::move(f));
  }
  return out;
}

OnBallFeatures onball_features(const TrackedFrame& frame, const std::optional<PlayerId>& holder,
                               const FeatureParams& params) {
  if (holder) {
    const PlayerState* h = frame.find(*holder);
    if (h == nullptr) throw std::invalid_argument("onball_features: holder not in frame: " + *holder);
    HolderState s;
    s.holder_id = *holder;
    const auto g = goal_distance_angle(h->pos, params.pitch);
    s.dist_goal = g.distance;
    s.angle_goal = g.angle;
    s.nearest_defender_time = time_to_point(frame, h->pos, params.motion);
    PlayerSet offside = offside_positions(frame);
    offside.erase(*holder);
    s.holder_deltas =
        directional_space_deltas(frame, *holder, params.pitch, params.motion, params.weight, offside);
    return {s};
  }

  auto nearest = [&](Side side) {
    const PlayerState* best = nullptr;
    double best_d = kInf;
    for (const auto& p : frame.players) {
      if (p.side != side) continue;
      const double d = distance(p.pos, frame.ball.pos);
      if (d < best_d || (d == best_d && best != nullptr && p.id < best->id)) {
        best = &p;
        best_d = d;
      }
    }
    if (best == nullptr) throw std::invalid_argument("onball_features: a team has no players");
    // Defenders attack the goal at -x; mirror them so both teams measure
    // against the goal they attack.
    const Point2 pos = side == Side::attacking ? best->pos : Point2{-best->pos.x, best->pos.y};
    const auto g = goal_distance_angle(pos, params.pitch);
    return NearestToBall{best->id, g.distance, g.angle};
  };
  LooseBallState s{nearest(Side::attacking), nearest(Side::defending), frame.ball.vel.norm()};
  return {s};
}

std::vector<PlayerId> select_top_n(std::span<const OffBallFeatures> features, int n, RankingVariable ranking,
                                   InfRanking inf) {
  if (n < 1) throw std::invalid_argument("select_top_n: n must be >= 1");
  const bool ascending = ranking == RankingVariable::dist_ball;
  auto key = [&](const OffBallFeatures& f) {
    double v = f.value(ranking);
    if (std::isinf(v) && v > 0 && inf == InfRanking::last) v = -kInf;
    return ascending ? v : -v;
  };
  std::vector<const OffBallFeatures*> order;
  for (const auto& f : features) order.push_back(&f);
  std::sort(order.begin(), order.end(), [&](auto* a, auto* b) {
    const double ka = key(*a), kb = key(*b);
    if (ka != kb) return ka < kb;
    return a->player_id < b->player_id;
  });
  std::vector<PlayerId> out;
  for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < n; ++i) out.push_back(order[i]->player_id);
  return out;
}

// --- dataset ---------------------------------------------------------------

std::vector<int> FeatureTable::labels() const {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}

std::vector<std::string> feature_columns(int n) {
  std::vector<std::string> cols;
  for (int r = 1; r <= n; ++r) {
    for (auto v : kReceiverVariables) cols.push_back(fmt::format("{}_{}", v, r));
  }
  return cols;
}

std::vector<PassCandidates> extract_candidates(std::span<const Match> matches, const FeatureParams& params,
                                               std::vector<std::string>* warnings) {
  auto warn = [&](std::string msg) {
    if (warnings != nullptr) warnings->push_back(std::move(msg));
  };
  std::vector<PassCandidates> out;
  for (const Match& m : matches) {
    for (const Event& e : m.events) {
      if (!e.is_pass() || !e.outcome) continue;
      const TrackedFrame* raw = m.frame_at(e.frame);
      if (raw == nullptr) {
        warn(fmt::format("pass {}: no tracking frame {}", e.event_id, e.frame));
        continue;
      }
      if (raw->find(e.player) == nullptr) {
        warn(fmt::format("pass {}: passer {} missing from frame {}", e.event_id, e.player, e.frame));
        continue;
      }
      const TrackedFrame frame = orient_for(*raw, e.team, params.pitch);
      PassCandidates pc;
      pc.event_id = e.event_id;
      pc.label = *e.outcome == PassOutcome::success ? 1 : 0;
      pc.candidates = offball_features(frame, e.player, params);
      out.push_back(std::move(pc));
    }
  }
  return out;
}

FeatureTable assemble_table(std::span<const PassCandidates> passes, int n, RankingVariable ranking, InfRanking inf) {
  FeatureTable table;
  table.columns = feature_columns(n);
  for (const auto& pc : passes) {
    PassSample s;
    s.event_id = pc.event_id;
    s.label = pc.label;
    s.selected = select_top_n(pc.candidates, n, ranking, inf);
    s.raw.assign(table.width(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < s.selected.size(); ++r) {
      auto it = std::find_if(pc.candidates.begin(), pc.candidates.end(),
                             [&](const OffBallFeatures& f) { return f.player_id == s.selected[r]; });
      const double vals[5] = {it->fast_space_vel, it->variation_space_vel, it->dist_ball, it->time_to_player,
                              it->time_to_passline};
      std::copy(std::begin(vals), std::end(vals), s.raw.begin() + static_cast<long>(5 * r));
    }
    s.values = s.raw;
    s.imputed.assign(table.width(), false);
    table.rows.push_back(std::move(s));
  }
  return table;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

}  // namespace

ColumnMedians compute_medians(const FeatureTable& table, std::span<const std::size_t> rows) {
  ColumnMedians out;
  out.columns = table.columns;
  for (std::size_t c = 0; c < table.width(); ++c) {
    std::vector<double> finite;
    auto take = [&](const PassSample& s) {
      if (std::isfinite(s.raw[c])) finite.push_back(s.raw[c]);
    };
    if (rows.empty()) {
      for (const auto& s : table.rows) take(s);
    } else {
      for (auto r : rows) take(table.rows[r]);
    }
    if (finite.empty()) throw DataError("column " + table.columns[c] + " has no finite values");
    out.values.push_back(median_of(std::move(finite)));
  }
  return out;
}

void apply_imputation(FeatureTable& table, const ColumnMedians& medians) {
  if (medians.columns != table.columns) throw DataError("median columns do not match the feature table");
  for (auto& s : table.rows) {
    for (std::size_t c = 0; c < table.width(); ++c) {
      const bool missing = !std::isfinite(s.raw[c]);
      s.imputed[c] = missing;
      s.values[c] = missing ? medians.values[c] : s.raw[c];
    }
  }
}

Dataset build_dataset(std::span<const PassCandidates> passes, int n, RankingVariable ranking, InfRanking inf) {
  Dataset d;
  d.table = assemble_table(passes, n, ranking, inf);
  d.medians = compute_medians(d.table);
  apply_imputation(d.table, d.medians);
  return d;
}

Dataset build_dataset(std::span<const Match> matches, int n, RankingVariable ranking, const FeatureParams& params,
                      InfRanking inf, std::vector<std::string>* warnings) {
  const auto passes = extract_candidates(matches, params, warnings);
  return build_dataset(passes, n, ranking, inf);
}

// --- files -----------------------------------------------------------------

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << "event_id,label";
  for (const auto& c : table.columns) out << ',' << c;
  for (const auto& c : table.columns) out << ",imputed_" << c;
  out << '\n';
  for (const auto& s : table.rows) {
    out << s.event_id << ',' << s.label;
    for (double v : s.values) out << ',' << fmt::format("{}", v);
    for (bool f : s.imputed) out << ',' << (f ? 1 : 0);
    out << '\n';
  }
}

FeatureTable read_feature_csv(std::istream& in, const std::string& source) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty feature file");
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "event_id" || header[1] != "label" || (header.size() - 2) % 2 != 0) {
    throw DataError(source + ":1: unexpected feature header");
  }
  FeatureTable table;
  const std::size_t width = (header.size() - 2) / 2;
  table.columns.assign(header.begin() + 2, header.begin() + 2 + static_cast<long>(width));
  for (std::size_t c = 0; c < width; ++c) {
    if (header[2 + width + c] != "imputed_" + table.columns[c]) {
      throw DataError(source + ":1: imputation flag column mismatch for " + table.columns[c]);
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line.back() == '\r') line.pop_back();
    const auto cells = split(line);
    auto fail = [&](const std::string& what) {
      throw DataError(fmt::format("{}:{}: {}", source, line_no, what));
    };
    if (cells.size() != header.size()) fail("wrong number of cells");
    PassSample s;
    s.event_id = cells[0];
    if (cells[1] != "0" && cells[1] != "1") fail("label must be 0 or 1");
    s.label = cells[1] == "1" ? 1 : 0;
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cells[2 + c], &used);
        if (used != cells[2 + c].size()) fail("bad number in column " + table.columns[c]);
      } catch (const std::logic_error&) {
        fail("bad number in column " + table.columns[c]);
      }
      const std::string& flag = cells[2 + width + c];
      if (flag != "0" && flag != "1") fail("imputation flag must be 0 or 1");
      const bool imputed = flag == "1";
      s.values.push_back(v);
      s.raw.push_back(imputed ? std::numeric_limits<double>::quiet_NaN() : v);
      s.imputed.push_back(imputed);
    }
    table.rows.push_back(std::move(s));
  }
  return table;
}

void write_medians_json(std::ostream& out, const ColumnMedians& medians) {
  nlohmann::ordered_json j;
  j["columns"] = medians.columns;
  j["medians"] = medians.values;
  out << j.dump(2) << '\n';
}

ColumnMedians read_medians_json(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    ColumnMedians m;
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.values = j.at("medians").get<std::vector<double>>();
    if (m.columns.size() != m.values.size()) throw DataError("medians: column/value count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("medians: ") + e.what());
  }
}

}  // namespace passlab
