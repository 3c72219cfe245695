#include "rebot/rewards.hpp"

#include <cmath>
#include <limits>

namespace rebot {

const std::array<std::string, RewardBreakdown::kNumTerms>& RewardBreakdown::term_names() {
  static const std::array<std::string, kNumTerms> names = {
      "distance",        "collision",       "walk",
      "energy",          "contact",         "diversity",
      "threat",          "direction",       "orientation",
      "stable",          "position",        "additional",
      "vertical_velocity", "horizontal_ang_vel", "flat_orientation",
      "action_rate",     "body_collision",  "lin_vel_tracking",
      "ang_vel_tracking", "feet_air_time",  "stumble",
      "contact_force"};
  return names;
}

std::array<double, RewardBreakdown::kNumTerms> RewardBreakdown::term_values() const {
  return {distance,        collision,       walk,
          energy,          contact,         diversity,
          threat,          direction,       orientation,
          stable,          position,        additional,
          vertical_velocity, horizontal_ang_vel, flat_orientation,
          action_rate,     body_collision,  lin_vel_tracking,
          ang_vel_tracking, feet_air_time,  stumble,
          contact_force};
}

std::array<double, RewardBreakdown::kNumTerms> RewardBreakdown::term_weights(
    const RewardConfig& c) const {
  return {c.w_distance,        c.w_collision,       c.w_walk,
          c.w_energy,          c.w_contact,         c.w_diversity,
          c.w_threat,          c.w_direction,       c.w_orientation,
          c.w_stable,          c.w_position,        c.w_additional,
          c.w_vertical_velocity, c.w_horizontal_ang_vel, c.w_flat_orientation,
          c.w_action_rate,     c.w_body_collision,  c.w_lin_vel_tracking,
          c.w_ang_vel_tracking, c.w_feet_air_time,  c.w_stumble,
          c.w_contact_force};
}

double RewardBreakdown::finalize(const RewardConfig& config) {
  const auto values = term_values();
  const auto weights = term_weights(config);
  total = 0.0;
  for (int i = 0; i < kNumTerms; ++i) total += weights[i] * values[i];
  return total;
}

AvoidanceTerms avoidance_reward(double sdf_distance, double obstacle_radius, bool collided) {
  return {-std::exp(-(sdf_distance - obstacle_radius)), collided ? -1.0 : 1.0};
}

RegularizationTerms regularization_reward(const ContactState& contacts, const Vec12& torques,
                                          const Vec12& joint_vels, const Vec4& foot_forces_z_now,
                                          const Vec4& foot_forces_z_prev) {
  const double walk =
      0.5 * ((contacts.in_contact[kFrontLeft] == contacts.in_contact[kRearRight] ? 1.0 : 0.0) +
             (contacts.in_contact[kFrontRight] == contacts.in_contact[kRearLeft] ? 1.0 : 0.0));
  const double energy = -(torques.cwiseProduct(joint_vels)).cwiseAbs().sum();
  const double contact = -(foot_forces_z_now - foot_forces_z_prev).squaredNorm();
  return {walk, energy, contact};
}

AdaptiveTerms adaptive_reward(double policy_action_variance, const Vec3& robot_velocity,
                              const CommandState& command, double reaction_time,
                              const Vec3& obstacle_offset, const RewardConfig& config) {
  const double safe_speed =
      command.velocity.norm() + config.threat_gain * std::exp(-config.threat_decay * reaction_time);
  const double threat = -std::abs(robot_velocity.norm() - safe_speed);
  const double direction = -robot_velocity.dot(obstacle_offset);
  return {policy_action_variance, threat, direction};
}

RecoveryTerms recovery_reward(const RobotState& state, const Action& prev_action,
                              const Action& action, const RecoveryReference& reference,
                              const RewardConfig& config) {
  const double orientation = -(state.rpy() - reference.default_orientation).squaredNorm();
  const double stable = (-state.joint_velocities.cwiseAbs()).array().exp().sum();
  const double position = -(state.base_position - reference.default_position).squaredNorm();
  const double additional =
      -config.additional_torque_weight * state.joint_torques.squaredNorm() -
      config.additional_action_rate_weight *
          (action.joint_targets - prev_action.joint_targets).squaredNorm();
  return {orientation, stable, position, additional};
}

AuxiliaryTerms auxiliary_reward(const RobotState& state, const Action& prev_action,
                                const Action& action, const ContactState& contacts,
                                const CommandState& command, const RewardConfig& config) {
  AuxiliaryTerms t{};
  const Vec3 rpy = state.rpy();

  t.vertical_velocity = state.base_linear_velocity.z() * state.base_linear_velocity.z();
  t.horizontal_ang_vel = state.base_angular_velocity.head<2>().norm();
  t.flat_orientation = rpy.head<2>().norm();
  t.action_rate = (action.joint_targets - prev_action.joint_targets).squaredNorm();
  t.body_collision = static_cast<double>(contacts.body_contact_count);
  t.lin_vel_tracking =
      (state.base_linear_velocity.head<2>() - command.velocity.head<2>()).norm();
  t.ang_vel_tracking = std::abs(state.base_angular_velocity.z() - command.yaw_rate);

  t.feet_air_time = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (contacts.touchdown_air_time[leg] > 0.0) {
      t.feet_air_time += contacts.touchdown_air_time[leg] - config.foot_airtime_target;
    }
  }

  double worst_ratio = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double fxy = contacts.forces.row(leg).head<2>().norm();
    const double fz = std::abs(contacts.forces(leg, 2));
    double ratio = 0.0;
    if (fz > 0.0) {
      ratio = fxy / fz;
    } else if (fxy > 0.0) {
      ratio = std::numeric_limits<double>::infinity();  // shear with no normal load
    }
    worst_ratio = std::max(worst_ratio, ratio);
  }
  t.stumble = worst_ratio > config.stumble_ratio_limit ? 1.0 : 0.0;

  t.contact_force = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double excess = contacts.forces.row(leg).norm() - config.contact_force_threshold;
    if (excess > 0.0) t.contact_force += excess * excess;
  }
  return t;
}

double diversity_term(const Eigen::VectorXd& log_std) {
  return (2.0 * log_std).array().exp().mean();
}

}  // namespace rebot
