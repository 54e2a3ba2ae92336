#pragma once

#include <optional>
#include <span>
#include <string>

#include "passlab/dominance.hpp"
#include "passlab/features.hpp"

namespace passlab {

/// Score to fill-intensity mapping; scores outside are clamped.
struct ColorRange {
  double min = 0.0;
  double max = 1.0;
  /// Throws std::invalid_argument unless min < max (both finite).
  void validate() const;
};

struct RenderOptions {
  bool show_voronoi_boundaries = true;
  bool show_scores = true;
  /// Unset: the 5th to 95th percentile of included scores being rendered.
  std::optional<ColorRange> colors;
  std::optional<long> frame_begin;  // inclusive
  std::optional<long> frame_end;    // inclusive
  std::string output_dir = ".";
  double pixels_per_metre = 8.0;
  double seconds_per_frame = 0.1;  // animation only
};

/// Everything a render needs: the frame oriented for the attacking team,
/// its offside-aware dominance field and space scores.
struct FrameScene {
  TrackedFrame frame;
  DominanceField field;
  SpaceScoreTable scores;
};

/// Team in possession: the frame's recorded attacking team, else the team
/// of the player nearest to the ball (ties by id).
TeamId infer_attacking_team(const TrackedFrame& frame);

FrameScene prepare_scene(const TrackedFrame& raw, const TeamId& attacking_team, const FeatureParams& params);

/// 5th and 95th percentile of the non-excluded scores; widened by 1 on each
/// side when degenerate.
ColorRange default_color_range(std::span<const SpaceScoreTable> tables);

/// Standalone SVG document. Each player and the ball is one
/// <g class="glyph ..."> group. Attackers are red, defenders blue, with
/// darker fill for higher scores. Offside-excluded players are hollow and
/// carry no score label.
std::string render_frame_svg(const TrackedFrame& frame, const SpaceScoreTable& scores, const DominanceField& field,
                             const RenderOptions& opts);

/// All scenes in one SVG; each frame is shown for seconds_per_frame in turn
/// and the sequence repeats.
std::string render_animation_svg(std::span<const FrameScene> scenes, const RenderOptions& opts);

}  // namespace passlab
