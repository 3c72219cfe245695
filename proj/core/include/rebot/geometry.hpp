#pragma once

#include "rebot/types.hpp"

namespace rebot {

/// Oriented bounding box of the robot trunk. `rotation` maps body to world
/// and must be orthonormal; `half_extents` are strictly positive.
struct Obb {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 half_extents = Vec3(0.35, 0.15, 0.15);

  /// World point expressed in the box frame.
  Vec3 to_body(const Vec3& point) const { return rotation.transpose() * (point - center); }
};

/// Builds the trunk box from the base pose. Throws InvalidInput when the
/// rotation is not orthonormal (|det - 1| > 1e-6) or a half extent is <= 0.
Obb obb_from_robot_state(const Vec3& base_position, const Mat3& base_rotation,
                         const Vec3& half_extents);

Obb obb_from_robot_state(const RobotState& state, const Vec3& half_extents);

/// Signed distance from a point to the box: Euclidean distance to the surface
/// outside, minus the smallest face distance inside. Continuous everywhere.
double sdf_point_obb(const Vec3& point, const Obb& obb);

/// Collision test: the obstacle collides iff the signed distance from its
/// center to the box is strictly smaller than its radius.
/// Throws InvalidInput for a non-positive radius.
bool check_collision(const ObstacleState& obstacle, const Obb& obb);

}  // namespace rebot
