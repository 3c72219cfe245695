#pragma once

#include <utility>

#include "rebot/types.hpp"

namespace rebot {

/// Reduced-order quadruped model.
///
/// The trunk is a single 6-DoF rigid body. Legs are massless appendages:
/// each of the 12 joints integrates PD torque against a small reflected
/// inertia, and leg kinematics place the point feet. Feet and the 8 trunk
/// box corners interact with the flat ground (z = 0) through a spring-damper
/// normal force plus a Coulomb-clamped viscous tangential force; all contact
/// forces and their moments act on the trunk. Integration is semi-implicit
/// Euler. The model is deliberately simple: it supports standing, crouching,
/// hopping and scooting — the maneuver vocabulary needed for evasion — not
/// accurate articulated dynamics.
struct DynamicsConfig {
  double dt = 0.005;       // physics step (s)
  int decimation = 4;      // physics steps per control step (policy at 50 Hz)
  double gravity = 9.81;   // m/s^2

  double base_mass = 15.0;                       // kg
  Vec3 base_inertia = Vec3(0.225, 0.725, 0.725);  // diagonal, body frame (kg m^2)
  Vec3 obb_half_extents = Vec3(0.35, 0.15, 0.15);  // trunk collision box (m)

  // Leg geometry (m): hip mount points on the trunk, lateral abduction link,
  // thigh and calf lengths. Zero joint angles point the leg straight down.
  double hip_offset_x = 0.19;
  double hip_offset_y = 0.05;
  double abd_link = 0.08;
  double thigh_len = 0.213;
  double calf_len = 0.213;

  double joint_reflected_inertia = 0.02;  // kg m^2 per joint

  // PD actuation
  double kp = 20.0;
  double kd = 0.5;
  double torque_limit = 23.7;  // N m

  // Per-leg joint limits and default stance (abduction, hip pitch, knee pitch)
  Vec3 joint_lower = Vec3(-1.0, -1.6, -2.6);
  Vec3 joint_upper = Vec3(1.0, 2.4, -0.3);
  Vec3 default_stance = Vec3(0.0, 0.8, -1.6);

  // Ground contact
  double contact_k = 2.0e4;     // N/m
  double contact_d = 200.0;     // N s/m
  double tangential_d = 200.0;  // N s/m, viscous tangential before friction clamp
  double friction_mu = 1.0;     // Coulomb clamp, randomized per episode

  Vec12 default_joint_positions() const {
    Vec12 q;
    for (int leg = 0; leg < kNumLegs; ++leg) q.segment<3>(3 * leg) = default_stance;
    return q;
  }
  Vec12 joint_lower_vec() const {
    Vec12 q;
    for (int leg = 0; leg < kNumLegs; ++leg) q.segment<3>(3 * leg) = joint_lower;
    return q;
  }
  Vec12 joint_upper_vec() const {
    Vec12 q;
    for (int leg = 0; leg < kNumLegs; ++leg) q.segment<3>(3 * leg) = joint_upper;
    return q;
  }
  /// Standing trunk height implied by the default stance.
  double default_base_height() const {
    return thigh_len * std::cos(default_stance[1]) +
           calf_len * std::cos(default_stance[1] + default_stance[2]);
  }
};

/// Hip mount point in the body frame.
Vec3 hip_position_body(const DynamicsConfig& cfg, int leg);

/// +1 for left legs, -1 for right legs.
inline double leg_side_sign(int leg) { return (leg == 0 || leg == 2) ? 1.0 : -1.0; }

/// Foot position relative to the hip, in the body frame.
Vec3 foot_position_hip(const DynamicsConfig& cfg, int leg, const Vec3& q);

/// 3x3 Jacobian of foot_position_hip w.r.t. the leg joint angles.
Mat3 foot_jacobian_hip(const DynamicsConfig& cfg, int leg, const Vec3& q);

/// Foot position in the world frame for the given robot state.
Vec3 foot_position_world(const DynamicsConfig& cfg, const RobotState& state, int leg);

/// PD torque law: tau_i = kp (target_i - q_i) - kd qdot_i, clamped to
/// +-torque_limit.
Vec12 pd_torque(const Vec12& targets, const Vec12& q, const Vec12& qdot, double kp, double kd,
                double torque_limit);

/// Advances the robot one physics step. `prev_contacts` carries the foot
/// air-time history between steps. Throws InvalidInput for dt <= 0 and
/// SimulationDiverged when the state goes non-finite.
std::pair<RobotState, ContactState> robot_step(const RobotState& state, const Action& action,
                                               double dt, const DynamicsConfig& cfg,
                                               const ContactState& prev_contacts = {});

/// Ballistic / constant-velocity obstacle propagation. The obstacle goes
/// active on the first step whose start time has reached activation_time.
ObstacleState obstacle_step(const ObstacleState& obstacle, double dt, double sim_time);

/// max_i |tau_i * qdot_i|, the instantaneous contribution to the MJP metric.
double max_joint_power(const RobotState& state);

/// Robot standing at the default stance with feet on the ground.
RobotState make_default_state(const DynamicsConfig& cfg);

}  // namespace rebot
