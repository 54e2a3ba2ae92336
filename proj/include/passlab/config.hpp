#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "passlab/features.hpp"
#include "passlab/render.hpp"
#include "passlab/synth.hpp"
#include "passlab/validation.hpp"

namespace passlab {

/// Everything a CLI run depends on. The text form is flat `key = value`
/// lines with `#` comments; list values are comma separated. Keys:
///
///   pitch.length pitch.width pitch.grid_cell
///   motion.reaction_time motion.max_speed  weight.beta
///   feature.n feature.ranking feature.fast_space feature.inf_ranking
///   model.n_trees model.max_depth model.learning_rate
///   model.min_child_weight model.l2_lambda model.gamma model.subsample
///   model.threshold  cv.k cv.seed
///   synth.* (see SynthConfig; synth.rule.* for the success rule)
///   render.boundaries render.scores render.color_min render.color_max
///   paths.matches paths.features paths.model paths.out
struct RunConfig {
  FeatureParams features;
  int n = 3;
  RankingVariable ranking = RankingVariable::dist_ball;
  InfRanking inf_ranking = InfRanking::first;
  HyperGrid grid;
  double threshold = 0.5;
  int cv_k = 5;
  std::uint64_t seed = 0;
  SynthConfig synth;  // its FeatureParams are taken from `features`
  RenderOptions render;
  std::string matches_path;
  std::string features_path;
  std::string model_path;
  std::string out_path;

  /// Throws std::invalid_argument when a value breaks its type's invariant.
  void validate() const;
  /// Canonical text: every key in a fixed order, doubles in shortest
  /// round-trip form. Parsing it yields an equal configuration.
  std::string to_text() const;
};

/// Starts from defaults and applies the given lines. Throws DataError with a
/// line number for unknown keys, malformed values or failed validation.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace passlab
