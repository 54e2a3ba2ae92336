#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "passlab/features.hpp"
#include "passlab/frame.hpp"

namespace passlab {

/// Logistic ground truth for pass success, evaluated on the intended
/// receiver: p = sigmoid(intercept + sum coef * variable). Infinite times
/// enter as time_cap.
struct SuccessRule {
  double intercept = 2.0;
  double fast_space_vel = 0.0;
  double dist_ball = -0.2;
  double time_to_player = 0.0;
  double time_to_passline = 0.0;
  double time_cap = 10.0;

  bool uses_interception() const { return time_to_player != 0.0 || time_to_passline != 0.0; }
};

struct SynthConfig {
  int passes = 2000;
  int attackers = 11;  // players per team
  int defenders = 11;
  double position_noise = 0.0;  // sd (m) added to recorded positions
  double velocity_sd = 2.0;     // per component, m/s
  /// Length scale (m) of the receiver choice: weight exp(-distance / scale).
  double receiver_scale = 3.0;
  /// Fraction of pass frames whose defending players are all missing.
  double empty_defence_rate = 0.02;
  double fps = 10.0;
  double pass_interval = 3.0;  // seconds between consecutive passes
  int possession_min = 2;
  int possession_max = 8;
  /// Event-clock frames minus tracking-clock frames, within +/-45 so the
  /// kickoff search window still holds the impulse.
  long event_clock_offset = 0;
  SuccessRule rule;
  FeatureParams features;

  /// Throws std::invalid_argument for infeasible settings.
  void validate() const;
};

struct SynthMatch {
  Match match;
  /// Pass event id -> true success probability.
  std::map<std::string, double> ground_truth;
  /// Intended receiver's variables used by the rule, by event id.
  std::map<std::string, OffBallFeatures> receiver_truth;
};

/// Deterministic for a fixed seed. Each period starts with a dense kickoff
/// trace (ball at rest, then struck) and a kickoff event; passes follow as
/// one frame per pass with alternating possessions.
SynthMatch synthesize_match(const SynthConfig& config, std::uint64_t seed);

/// Ball-only trace of `n_frames` frames from index 0: at rest at the center
/// spot up to `impulse_frame`, then moving at `speed` m/s. Players stand still.
std::vector<TrackedFrame> synthesize_kickoff_trace(long n_frames, long impulse_frame, double fps, double speed,
                                                   std::uint64_t seed);

void write_ground_truth(std::ostream& out, const std::map<std::string, double>& truth);

}  // namespace passlab
