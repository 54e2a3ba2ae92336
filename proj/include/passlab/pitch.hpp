#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

namespace passlab {

/// Pitch coordinates in meters. Origin at the center spot, x along the line
/// joining the goals, y across. After normalization the attacking team
/// always plays toward +x.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  constexpr Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Point2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(Point2 o) const { return x * o.x + y * o.y; }
};

/// Velocity in m/s shares the representation of a displacement.
using Vec2 = Point2;

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

struct PitchSpec {
  double length = 105.0;
  double width = 68.0;
  double grid_cell = 0.5;

  /// Throws std::invalid_argument for non-positive sizes or an oversized cell.
  void validate() const;

  std::size_t cols() const { return static_cast<std::size_t>(std::ceil(length / grid_cell - 1e-9)); }
  std::size_t rows() const { return static_cast<std::size_t>(std::ceil(width / grid_cell - 1e-9)); }
  std::size_t cell_count() const { return cols() * rows(); }

  double half_length() const { return length / 2.0; }
  double half_width() const { return width / 2.0; }
  Point2 opponent_goal() const { return {half_length(), 0.0}; }

  bool contains(Point2 p, double slack = 0.0) const {
    return std::abs(p.x) <= half_length() + slack && std::abs(p.y) <= half_width() + slack;
  }
  Point2 clamp(Point2 p) const;
};

/// Lateral falloff of the space weight. 0 gives a weight that ignores y.
struct WeightParams {
  double beta = 0.5;
  void validate() const;
};

/// Importance of a pitch location in [0, 1]. Rises linearly toward the goal
/// being attacked and falls off linearly with distance from the long axis:
/// x_norm * (1 - beta * y_norm). With attacking_right == false the x term is
/// mirrored, which is the weight used for the defending side.
/// Throws std::domain_error for points outside the pitch rectangle.
double field_weight(Point2 p, const PitchSpec& pitch, const WeightParams& w, bool attacking_right);

struct GoalGeometry {
  double distance = 0.0;
  double angle = 0.0;  // radians in [0, pi], measured from +x
};

/// Distance and bearing from p to the center of the goal at +x.
GoalGeometry goal_distance_angle(Point2 p, const PitchSpec& pitch);

}  // namespace passlab
