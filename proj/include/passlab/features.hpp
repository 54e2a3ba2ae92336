#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "passlab/dominance.hpp"
#include "passlab/frame.hpp"

namespace passlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// The four receiver variables used for candidate ranking.
enum class RankingVariable { fast_space_vel, dist_ball, time_to_player, time_to_passline };

inline constexpr std::array<RankingVariable, 4> kRankingVariables = {
    RankingVariable::fast_space_vel, RankingVariable::dist_ball, RankingVariable::time_to_player,
    RankingVariable::time_to_passline};

std::string_view to_string(RankingVariable v);
/// Throws std::invalid_argument for unknown names.
RankingVariable parse_ranking_variable(std::string_view name);

/// What fast_space_vel reports: the current space score, or the best score
/// reachable with one of the eight 1 m moves.
enum class FastSpaceMode { current, best_move };
/// Where unreachable (+inf) candidates land when ranking by a time variable.
enum class InfRanking { first, last };

struct FeatureParams {
  PitchSpec pitch;
  MotionParams motion;
  WeightParams weight;
  FastSpaceMode fast_space = FastSpaceMode::current;
};

struct OffBallFeatures {
  PlayerId player_id;
  double fast_space_vel = 0.0;
  double variation_space_vel = 0.0;
  double dist_ball = 0.0;
  double time_to_player = kInf;
  double time_to_passline = kInf;

  double value(RankingVariable v) const;
};

/// Per-receiver variables in column order.
inline constexpr std::array<std::string_view, 5> kReceiverVariables = {
    "fast_space_vel", "variation_space_vel", "dist_ball", "time_to_player", "time_to_passline"};

Point2 closest_point_on_segment(Point2 a, Point2 b, Point2 q);

/// Fastest arrival of any defender at `target`; +inf without defenders.
double time_to_point(const TrackedFrame& frame, Point2 target, const MotionParams& mp);

/// Fastest arrival of any defender at the segment [from, to]. Each defender
/// heads for the segment point nearest its drifted position, which is the
/// minimizer because arrival time grows with distance.
double time_to_segment(const TrackedFrame& frame, Point2 from, Point2 to, const MotionParams& mp);

/// Receiver variables for every attacker except the passer and players in
/// an offside position. `frame` must already be oriented for the passing
/// team (sides assigned, attacking toward +x).
/// Throws DataError when the passer is not in the frame.
std::vector<OffBallFeatures> offball_features(const TrackedFrame& frame, const PlayerId& passer,
                                              const FeatureParams& params);

struct HolderState {
  PlayerId holder_id;
  double dist_goal = 0.0;
  double angle_goal = 0.0;
  double nearest_defender_time = kInf;
  std::array<double, 8> holder_deltas{};
};

/// Goal distance and angle are taken toward the goal the player attacks.
struct NearestToBall {
  PlayerId player_id;
  double dist_goal = 0.0;
  double angle_goal = 0.0;
};

struct LooseBallState {
  NearestToBall attacking;
  NearestToBall defending;
  double ball_speed = 0.0;
};

struct OnBallFeatures {
  std::variant<HolderState, LooseBallState> state;
};

/// Ball-holder variables when `holder` is given, otherwise the closest
/// player of each team to the ball plus the ball speed. Throws
/// std::invalid_argument for an unknown holder or, without a holder, when a
/// team has no players.
OnBallFeatures onball_features(const TrackedFrame& frame, const std::optional<PlayerId>& holder,
                               const FeatureParams& params);

/// Candidate order used for the model columns: ascending for dist_ball,
/// descending otherwise; ties by player id. Returns at most n ids.
/// Throws std::invalid_argument when n < 1.
std::vector<PlayerId> select_top_n(std::span<const OffBallFeatures> features, int n, RankingVariable ranking,
                                   InfRanking inf = InfRanking::first);

// --- dataset ---------------------------------------------------------------

/// All candidate receivers of one labelled pass.
struct PassCandidates {
  std::string event_id;
  int label = 0;  // 1 success, 0 failure
  std::vector<OffBallFeatures> candidates;
};

struct PassSample {
  std::string event_id;
  int label = 0;
  std::vector<PlayerId> selected;
  /// Before imputation: +inf for unreachable, NaN for ranks with no player.
  std::vector<double> raw;
  std::vector<double> values;
  std::vector<bool> imputed;
};

struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<PassSample> rows;

  std::size_t width() const { return columns.size(); }
  std::vector<int> labels() const;
};

struct ColumnMedians {
  std::vector<std::string> columns;
  std::vector<double> values;
};

/// Column names <variable>_<rank>, rank-major, five per rank.
std::vector<std::string> feature_columns(int n);

/// Orients each pass frame for the passing team, drops offside attackers
/// and computes all candidate receivers. Passes whose frame or passer is
/// missing are skipped with a warning.
std::vector<PassCandidates> extract_candidates(std::span<const Match> matches, const FeatureParams& params,
                                               std::vector<std::string>* warnings = nullptr);

/// Raw (un-imputed) table; `values` mirrors `raw` until imputation.
FeatureTable assemble_table(std::span<const PassCandidates> passes, int n, RankingVariable ranking,
                            InfRanking inf = InfRanking::first);

/// Medians over the finite raw values of the selected rows (all rows when
/// `rows` is empty). Throws DataError naming a column with no finite value.
ColumnMedians compute_medians(const FeatureTable& table, std::span<const std::size_t> rows = {});

/// Replaces every non-finite raw value by its column median and sets flags.
void apply_imputation(FeatureTable& table, const ColumnMedians& medians);

struct Dataset {
  FeatureTable table;
  ColumnMedians medians;
};

Dataset build_dataset(std::span<const Match> matches, int n, RankingVariable ranking, const FeatureParams& params,
                      InfRanking inf = InfRanking::first, std::vector<std::string>* warnings = nullptr);
Dataset build_dataset(std::span<const PassCandidates> passes, int n, RankingVariable ranking,
                      InfRanking inf = InfRanking::first);

/// Header: event_id,label,<features>,imputed_<feature>...; imputed cells
/// read back as NaN raw values so medians can be recomputed per fold.
void write_feature_csv(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_csv(std::istream& in, const std::string& source);

void write_medians_json(std::ostream& out, const ColumnMedians& medians);
ColumnMedians read_medians_json(std::istream& in);

}  // namespace passlab
