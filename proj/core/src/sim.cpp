#include "rebot/sim.hpp"

#include <cmath>

#include "rebot/errors.hpp"

namespace rebot {

namespace {

Mat3 roll_matrix(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

// Quaternion for a body-frame rotation increment omega*dt.
Eigen::Quaterniond rotation_increment(const Vec3& omega, double dt) {
  const Vec3 dtheta = omega * dt;
  const double angle = dtheta.norm();
  if (angle < 1e-12) {
    return Eigen::Quaterniond(1.0, 0.5 * dtheta.x(), 0.5 * dtheta.y(), 0.5 * dtheta.z());
  }
  const Vec3 axis = dtheta / angle;
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
}

// Spring-damper ground force for a point at world position p moving with
// velocity v. Returns zero when the point is above ground.
Vec3 ground_force(const DynamicsConfig& cfg, const Vec3& p, const Vec3& v) {
  if (p.z() >= 0.0) return Vec3::Zero();
  double fz = cfg.contact_k * (-p.z()) - cfg.contact_d * v.z();
  fz = std::max(fz, 0.0);
  Eigen::Vector2d ft = -cfg.tangential_d * v.head<2>();
  const double ft_max = cfg.friction_mu * fz;
  const double ft_norm = ft.norm();
  if (ft_norm > ft_max && ft_norm > 0.0) ft *= ft_max / ft_norm;
  return {ft.x(), ft.y(), fz};
}

}  // namespace

Vec3 hip_position_body(const DynamicsConfig& cfg, int leg) {
  const double fx = (leg <= 1) ? cfg.hip_offset_x : -cfg.hip_offset_x;
  const double sy = leg_side_sign(leg) * cfg.hip_offset_y;
  return {fx, sy, 0.0};
}

Vec3 foot_position_hip(const DynamicsConfig& cfg, int leg, const Vec3& q) {
  const double s12 = std::sin(q[1]) * cfg.thigh_len + std::sin(q[1] + q[2]) * cfg.calf_len;
  const double c12 = std::cos(q[1]) * cfg.thigh_len + std::cos(q[1] + q[2]) * cfg.calf_len;
  const Vec3 v(-s12, leg_side_sign(leg) * cfg.abd_link, -c12);
  return roll_matrix(q[0]) * v;
}

Mat3 foot_jacobian_hip(const DynamicsConfig& cfg, int leg, const Vec3& q) {
  const Mat3 rx = roll_matrix(q[0]);
  const double c1 = std::cos(q[1]) * cfg.thigh_len;
  const double s1 = std::sin(q[1]) * cfg.thigh_len;
  const double c12 = std::cos(q[1] + q[2]) * cfg.calf_len;
  const double s12 = std::sin(q[1] + q[2]) * cfg.calf_len;

  Mat3 j;
  j.col(0) = Vec3::UnitX().cross(foot_position_hip(cfg, leg, q));
  j.col(1) = rx * Vec3(-(c1 + c12), 0.0, s1 + s12);
  j.col(2) = rx * Vec3(-c12, 0.0, s12);
  return j;
}

Vec3 foot_position_world(const DynamicsConfig& cfg, const RobotState& state, int leg) {
  const Vec3 p_body =
      hip_position_body(cfg, leg) +
      foot_position_hip(cfg, leg, state.joint_positions.segment<3>(3 * leg));
  return state.base_position + state.rotation() * p_body;
}

Vec12 pd_torque(const Vec12& targets, const Vec12& q, const Vec12& qdot, double kp, double kd,
                double torque_limit) {
  if (kp < 0.0 || kd < 0.0) throw InvalidInput("pd_torque: gains must be >= 0");
  return (kp * (targets - q) - kd * qdot).cwiseMax(-torque_limit).cwiseMin(torque_limit);
}

std::pair<RobotState, ContactState> robot_step(const RobotState& state, const Action& action,
                                               double dt, const DynamicsConfig& cfg,
                                               const ContactState& prev_contacts) {
  if (!(dt > 0.0)) throw InvalidInput("robot_step: dt must be > 0");

  const Mat3 rot = state.rotation();
  const Vec12 lower = cfg.joint_lower_vec();
  const Vec12 upper = cfg.joint_upper_vec();
  const Vec12 targets = action.joint_targets.cwiseMax(lower).cwiseMin(upper);
  const Vec12 tau = pd_torque(targets, state.joint_positions, state.joint_velocities, cfg.kp,
                              cfg.kd, cfg.torque_limit);

  Vec3 force = Vec3(0.0, 0.0, -cfg.base_mass * cfg.gravity);
  Vec3 moment_world = Vec3::Zero();
  ContactState contacts;
  contacts.body_contact_count = 0;

  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 q = state.joint_positions.segment<3>(3 * leg);
    const Vec3 qd = state.joint_velocities.segment<3>(3 * leg);
    const Vec3 p_body = hip_position_body(cfg, leg) + foot_position_hip(cfg, leg, q);
    const Vec3 p_world = state.base_position + rot * p_body;
    const Vec3 v_world = state.base_linear_velocity +
                         rot * (state.base_angular_velocity.cross(p_body)) +
                         rot * (foot_jacobian_hip(cfg, leg, q) * qd);

    const Vec3 f = ground_force(cfg, p_world, v_world);
    force += f;
    moment_world += (rot * p_body).cross(f);
    contacts.forces.row(leg) = f.transpose();

    const bool on_ground = f.z() > 0.0;
    contacts.in_contact[leg] = on_ground;
    if (on_ground) {
      contacts.air_time[leg] = 0.0;
      if (!prev_contacts.in_contact[leg]) {
        contacts.touchdown_air_time[leg] = prev_contacts.air_time[leg] + dt;
      }
    } else {
      contacts.air_time[leg] = prev_contacts.air_time[leg] + dt;
    }
  }

  // Trunk corners keep a fallen or tilted body from sinking through the floor.
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner_body((i & 1 ? 1.0 : -1.0) * cfg.obb_half_extents.x(),
                           (i & 2 ? 1.0 : -1.0) * cfg.obb_half_extents.y(),
                           (i & 4 ? 1.0 : -1.0) * cfg.obb_half_extents.z());
    const Vec3 p_world = state.base_position + rot * corner_body;
    if (p_world.z() >= 0.0) continue;
    const Vec3 v_world = state.base_linear_velocity +
                         rot * (state.base_angular_velocity.cross(corner_body));
    const Vec3 f = ground_force(cfg, p_world, v_world);
    force += f;
    moment_world += (rot * corner_body).cross(f);
    if (f.z() > 0.0) ++contacts.body_contact_count;
  }

  RobotState next = state;

  next.base_linear_velocity += dt * force / cfg.base_mass;
  const Vec3 inertia = cfg.base_inertia;
  const Vec3 moment_body = rot.transpose() * moment_world;
  const Vec3 omega = state.base_angular_velocity;
  const Vec3 gyro = omega.cross(inertia.cwiseProduct(omega));
  next.base_angular_velocity += dt * (moment_body - gyro).cwiseQuotient(inertia);
  next.base_position += dt * next.base_linear_velocity;
  next.orientation = (state.orientation * rotation_increment(next.base_angular_velocity, dt))
                         .normalized();

  next.joint_velocities += dt * tau / cfg.joint_reflected_inertia;
  next.joint_positions += dt * next.joint_velocities;
  for (int i = 0; i < kNumJoints; ++i) {
    if (next.joint_positions[i] < lower[i]) {
      next.joint_positions[i] = lower[i];
      next.joint_velocities[i] = std::max(next.joint_velocities[i], 0.0);
    } else if (next.joint_positions[i] > upper[i]) {
      next.joint_positions[i] = upper[i];
      next.joint_velocities[i] = std::min(next.joint_velocities[i], 0.0);
    }
  }
  next.joint_torques = tau;
  next.foot_forces = contacts.forces;

  if (!next.all_finite()) {
    throw SimulationDiverged("robot_step: non-finite state", -1);
  }
  return {next, contacts};
}

ObstacleState obstacle_step(const ObstacleState& obstacle, double dt, double sim_time) {
  if (!(dt > 0.0)) throw InvalidInput("obstacle_step: dt must be > 0");
  ObstacleState next = obstacle;
  if (!next.active && sim_time >= next.activation_time) next.active = true;
  if (next.active) {
    if (next.ballistic) next.velocity.z() -= 9.81 * dt;
    next.position += dt * next.velocity;
  }
  return next;
}

double max_joint_power(const RobotState& state) {
  return (state.joint_torques.cwiseProduct(state.joint_velocities)).cwiseAbs().maxCoeff();
}

RobotState make_default_state(const DynamicsConfig& cfg) {
  RobotState state;
  state.joint_positions = cfg.default_joint_positions();
  // Start with feet exactly on the ground plane, plus the static spring
  // compression so the stance begins near equilibrium.
  const double settle = cfg.base_mass * cfg.gravity / (kNumLegs * cfg.contact_k);
  state.base_position = Vec3(0.0, 0.0, cfg.default_base_height() - settle);
  return state;
}

}  // namespace rebot
