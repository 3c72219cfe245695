#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace rebot {

inline constexpr int kNumLegs = 4;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kNumJoints = kNumLegs * kJointsPerLeg;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Vec12 = Eigen::Matrix<double, kNumJoints, 1>;
using FootForces = Eigen::Matrix<double, kNumLegs, 3>;  // rows: FL, FR, RL, RR (world frame)

/// Leg indexing used everywhere: 0 = front-left, 1 = front-right,
/// 2 = rear-left, 3 = rear-right. Joints within a leg: abduction (roll),
/// hip pitch, knee pitch.
enum Leg { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

/// Full articulated state of the reduced quadruped. Orientation is held as a
/// quaternion; rpy() extracts roll-pitch-yaw (ZYX convention) on demand.
/// Angular velocity is expressed in the body frame, linear quantities in world.
struct RobotState {
  Vec3 base_position = Vec3::Zero();
  Vec3 base_linear_velocity = Vec3::Zero();
  Vec3 base_angular_velocity = Vec3::Zero();  // body frame
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec12 joint_positions = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  Vec12 joint_torques = Vec12::Zero();
  FootForces foot_forces = FootForces::Zero();

  double base_height() const { return base_position.z(); }
  Mat3 rotation() const { return orientation.toRotationMatrix(); }

  Vec3 rpy() const {
    const Mat3 r = rotation();
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    return {roll, pitch, yaw};
  }

  bool all_finite() const {
    return base_position.allFinite() && base_linear_velocity.allFinite() &&
           base_angular_velocity.allFinite() && orientation.coeffs().allFinite() &&
           joint_positions.allFinite() && joint_velocities.allFinite() &&
           joint_torques.allFinite() && foot_forces.allFinite();
  }
};

/// Spherical obstacle kinematics plus scenario metadata. The obstacle is
/// kinematic: it never reacts to the robot, it only threatens it.
struct ObstacleState {
  double radius = 0.1;          // m, > 0
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  bool active = false;
  double activation_time = 0.0;  // s, sim time at which the obstacle goes live
  double reaction_time = 1.0;    // s, threat-onset-to-contact budget of the scenario
  bool ballistic = false;        // apply gravity to the velocity (thrown-ball scenarios)

  double speed() const { return velocity.norm(); }
};

/// Joint target angles handed to the PD layer. Targets are clamped to the
/// configured joint limits before actuation.
struct Action {
  Vec12 joint_targets = Vec12::Zero();
};

/// Per-foot contact bookkeeping produced by the simulator step.
/// air_time[i] is the time foot i has currently been airborne (0 while in
/// contact); touchdown_air_time[i] is nonzero only on the step where foot i
/// touches down and holds the just-ended airborne duration.
struct ContactState {
  std::array<bool, kNumLegs> in_contact{false, false, false, false};
  Vec4 air_time = Vec4::Zero();
  Vec4 touchdown_air_time = Vec4::Zero();
  FootForces forces = FootForces::Zero();
  int body_contact_count = 0;  // trunk corners touching the ground
};

/// Locomotion command the policy is asked to track.
struct CommandState {
  Vec3 velocity = Vec3::Zero();  // m/s, world frame
  double yaw_rate = 0.0;         // rad/s
  double heading = 0.0;          // rad
};

}  // namespace rebot
