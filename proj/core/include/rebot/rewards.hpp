#pragma once

#include <array>
#include <string>

#include "rebot/types.hpp"

namespace rebot {

/// Weights and hyperparameters of the reward suite. Structural terms
/// (distance ... additional) carry their sign in the formula and take positive
/// weights; auxiliary terms are raw magnitudes and take signed weights
/// (negative = penalty). Everything here is surfaced in the config file.
struct RewardConfig {
  double w_distance = 1.0;
  double w_collision = 5.0;
  double w_walk = 0.5;
  double w_energy = 2e-4;
  double w_contact = 1e-4;
  double w_diversity = 0.1;
  double w_threat = 0.5;
  double w_direction = 0.5;
  double w_orientation = 1.0;
  double w_stable = 1.0;
  double w_position = 1.0;
  double w_additional = 1.0;

  double w_vertical_velocity = -2.0;
  double w_horizontal_ang_vel = -0.05;
  double w_flat_orientation = -1.0;
  double w_action_rate = -0.01;
  double w_body_collision = -1.0;
  double w_lin_vel_tracking = -1.0;
  double w_ang_vel_tracking = -0.5;
  double w_feet_air_time = 1.0;
  double w_stumble = -1.0;
  double w_contact_force = -1e-5;

  double threat_gain = 2.0;              // lambda (m/s)
  double threat_decay = 2.0;             // eta (1/s)
  double contact_force_threshold = 100.0;  // N
  double stumble_ratio_limit = 5.0;
  double foot_airtime_target = 0.5;  // s

  // Composition of the "additional" recovery term.
  double additional_torque_weight = 1e-4;
  double additional_action_rate_weight = 0.1;
};

/// Reference pose the recovery policy is rewarded for reaching.
struct RecoveryReference {
  Vec3 default_orientation = Vec3::Zero();        // rpy (rad)
  Vec3 default_position = Vec3(0.0, 0.0, 0.2969);  // m
};

/// Per-term values for one control step, plus the weighted total. Terms not
/// evaluated for the current policy kind stay zero.
struct RewardBreakdown {
  double distance = 0.0;
  double collision = 0.0;
  double walk = 0.0;
  double energy = 0.0;
  double contact = 0.0;
  double diversity = 0.0;
  double threat = 0.0;
  double direction = 0.0;
  double orientation = 0.0;
  double stable = 0.0;
  double position = 0.0;
  double additional = 0.0;
  double vertical_velocity = 0.0;
  double horizontal_ang_vel = 0.0;
  double flat_orientation = 0.0;
  double action_rate = 0.0;
  double body_collision = 0.0;
  double lin_vel_tracking = 0.0;
  double ang_vel_tracking = 0.0;
  double feet_air_time = 0.0;
  double stumble = 0.0;
  double contact_force = 0.0;
  double total = 0.0;

  static constexpr int kNumTerms = 22;
  static const std::array<std::string, kNumTerms>& term_names();
  std::array<double, kNumTerms> term_values() const;
  std::array<double, kNumTerms> term_weights(const RewardConfig& config) const;

  /// Recomputes `total` as the weighted sum of the terms.
  double finalize(const RewardConfig& config);
};

struct AvoidanceTerms {
  double distance;
  double collision;
};

/// distance = -exp(-(sdf - radius)); collision = +1 without contact, -1 with.
AvoidanceTerms avoidance_reward(double sdf_distance, double obstacle_radius, bool collided);

struct RegularizationTerms {
  double walk;
  double energy;
  double contact;
};

/// walk rewards trot-like diagonal contact pairing; energy penalizes
/// |tau * qdot|; contact penalizes vertical foot-force fluctuation.
RegularizationTerms regularization_reward(const ContactState& contacts, const Vec12& torques,
                                          const Vec12& joint_vels, const Vec4& foot_forces_z_now,
                                          const Vec4& foot_forces_z_prev);

struct AdaptiveTerms {
  double diversity;
  double threat;
  double direction;
};

/// diversity passes through the batch action-variance statistic; threat keys
/// the speed target to the reaction time; direction penalizes velocity toward
/// the obstacle. `obstacle_offset` is p_obstacle - p_robot.
AdaptiveTerms adaptive_reward(double policy_action_variance, const Vec3& robot_velocity,
                              const CommandState& command, double reaction_time,
                              const Vec3& obstacle_offset, const RewardConfig& config);

struct RecoveryTerms {
  double orientation;
  double stable;
  double position;
  double additional;
};

RecoveryTerms recovery_reward(const RobotState& state, const Action& prev_action,
                              const Action& action, const RecoveryReference& reference,
                              const RewardConfig& config);

struct AuxiliaryTerms {
  double vertical_velocity;
  double horizontal_ang_vel;
  double flat_orientation;
  double action_rate;
  double body_collision;
  double lin_vel_tracking;
  double ang_vel_tracking;
  double feet_air_time;
  double stumble;
  double contact_force;
};

/// The ten auxiliary regularization rows, computed verbatim as raw values;
/// signs live in the weights.
AuxiliaryTerms auxiliary_reward(const RobotState& state, const Action& prev_action,
                                const Action& action, const ContactState& contacts,
                                const CommandState& command, const RewardConfig& config);

/// Mean per-dimension action variance of a diagonal Gaussian policy,
/// mean_j exp(2 log_std_j). This is both the diversity reward statistic and
/// the gait diversity index.
double diversity_term(const Eigen::VectorXd& log_std);

}  // namespace rebot
