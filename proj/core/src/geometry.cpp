#include "rebot/geometry.hpp"

#include <cmath>

#include "rebot/errors.hpp"

namespace rebot {

Obb obb_from_robot_state(const Vec3& base_position, const Mat3& base_rotation,
                         const Vec3& half_extents) {
  if (std::abs(base_rotation.determinant() - 1.0) > 1e-6 ||
      (base_rotation.transpose() * base_rotation - Mat3::Identity()).cwiseAbs().maxCoeff() >
          1e-6) {
    throw InvalidInput("obb_from_robot_state: rotation is not orthonormal");
  }
  if ((half_extents.array() <= 0.0).any()) {
    throw InvalidInput("obb_from_robot_state: half extents must be > 0");
  }
  return Obb{base_position, base_rotation, half_extents};
}

Obb obb_from_robot_state(const RobotState& state, const Vec3& half_extents) {
  return obb_from_robot_state(state.base_position, state.rotation(), half_extents);
}

double sdf_point_obb(const Vec3& point, const Obb& obb) {
  const Vec3 q = obb.to_body(point).cwiseAbs() - obb.half_extents;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

bool check_collision(const ObstacleState& obstacle, const Obb& obb) {
  if (!(obstacle.radius > 0.0)) {
    throw InvalidInput("check_collision: obstacle radius must be > 0");
  }
  return sdf_point_obb(obstacle.position, obb) < obstacle.radius;
}

}  // namespace rebot
