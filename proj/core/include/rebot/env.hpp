#pragma once

#include <optional>
#include <vector>

#include "rebot/fsm.hpp"
#include "rebot/geometry.hpp"
#include "rebot/rewards.hpp"
#include "rebot/rng.hpp"
#include "rebot/sim.hpp"

namespace rebot {

enum class CurriculumStage { kStatic = 1, kDynamic = 2 };
enum class PolicyKind { kAvoidance, kRecovery };

const char* policy_kind_name(PolicyKind kind);

inline constexpr int kAvoidanceObsDim = 58;
inline constexpr int kRecoveryObsDim = 47;
int observation_dim(PolicyKind kind);

/// Closed interval for uniform sampling.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
  bool valid() const { return lo <= hi; }
};

/// Episode orchestration settings: curriculum stage, randomization ranges
/// (uniform, sampled per episode / per observation), and termination knobs.
struct EnvConfig {
  CurriculumStage curriculum_stage = CurriculumStage::kDynamic;
  PolicyKind policy_kind = PolicyKind::kAvoidance;

  // Observation noise (additive uniform, drawn per observation)
  Range joint_pos_noise{-0.01, 0.01};
  Range joint_vel_noise{-1.5, 1.5};
  Range ang_vel_noise{-0.2, 0.2};
  Range gravity_noise{-0.05, 0.05};
  Range height_noise{-0.1, 0.1};
  bool observation_noise = true;

  // Dynamics randomization (per episode)
  Range friction{0.5, 1.25};
  Range added_base_mass{-1.0, 1.0};

  // Obstacle / scenario randomization (per episode)
  Range obstacle_offset{-0.4, 0.4};  // per axis, stage-1 placement
  Range obstacle_radius{0.05, 0.3};
  Range obstacle_speed{1.0, 6.0};
  Range reaction_time{0.1, 4.0};
  Range episode_length{8.0, 10.0};

  // Commands (per episode; used only when randomize_commands is set)
  Range command_yaw{-1.0, 1.0};
  Range command_velocity{-1.0, 1.0};
  Range command_heading{-3.14159265358979323846, 3.14159265358979323846};
  bool randomize_commands = false;

  // Recovery-policy initial-state perturbation
  double recovery_max_tilt = 1.2;       // rad, roll/pitch
  double recovery_max_yaw = 0.5;        // rad
  double recovery_max_joint_vel = 15.0;  // rad/s
  Range recovery_height{0.08, 0.35};

  double action_scale = 0.25;  // joint targets = stance + scale * action
  double action_clip = 10.0;   // raw policy action clamp
  double fall_height = 0.05;   // m, terminal
  bool terminate_on_collision = true;
};

/// One episode's concrete draw from the randomization ranges.
struct SampledParams {
  double friction = 1.0;
  double added_mass = 0.0;
  Vec3 obstacle_offset = Vec3::Zero();
  double obstacle_radius = 0.1;
  double obstacle_speed = 3.0;
  double reaction_time = 1.0;
  double episode_length = 9.0;
  double command_yaw_rate = 0.0;
  double command_speed = 0.0;
  double command_heading = 0.0;
};

SampledParams sample_randomization(const EnvConfig& config, Rng& rng);

/// Evaluation plane for directed scenarios.
enum class Plane { kXZ, kYZ, kXY };

const char* plane_name(Plane plane);

/// Fixed scenario geometry used by evaluation sweeps: the obstacle approaches
/// from direction `angle` within a 180-degree arc of `plane`.
struct ScenarioSpec {
  Plane plane = Plane::kXZ;
  double angle = 0.0;  // rad in [0, pi]
  double t_react = 1.0;
  std::optional<double> speed;
  std::optional<double> radius;
  double initial_yaw = 0.0;  // robot heading at episode start
};

/// Unit vector of the approach direction (from the robot toward the spawn
/// point) for a plane/angle pair.
Vec3 scenario_direction(Plane plane, double angle);

/// Builds the episode's obstacle. Stage 1: static obstacle placed at
/// robot + offset, activating reaction_time before the episode ends.
/// Stage 2: obstacle spawned speed * reaction_time away along a random
/// direction, aimed at the robot, active immediately.
ObstacleState curriculum_scenario(CurriculumStage stage, const SampledParams& params,
                                  const Vec3& robot_position, double episode_length, Rng& rng);

/// Stage-2 obstacle with a fixed approach direction (evaluation path).
ObstacleState directed_scenario(const SampledParams& params, const Vec3& robot_position,
                                const ScenarioSpec& spec);

/// Fixed-size diagnostic ring of recent per-step records.
struct StepRecord {
  double time = 0.0;
  double reward_total = 0.0;
  double sdf = 0.0;
  Stage stage = Stage::kNormal;
};

class StepLog {
 public:
  StepLog(std::size_t capacity = 64) : ring_(capacity) {}
  void push(const StepRecord& r) {
    ring_[head_ % ring_.size()] = r;
    ++head_;
  }
  std::size_t size() const { return std::min(head_, ring_.size()); }
  const StepRecord& operator[](std::size_t i) const {
    return ring_[(head_ - size() + i) % ring_.size()];
  }

 private:
  std::vector<StepRecord> ring_;
  std::size_t head_ = 0;
};

struct EpisodeState {
  double sim_time = 0.0;
  int step_count = 0;
  RobotState robot;
  ObstacleState obstacle;
  ContactState contacts;
  Stage stage = Stage::kNormal;
  Action prev_action;
  Eigen::VectorXd prev_policy_action;
  bool collided_ever = false;
  bool done = false;
  SampledParams params;
  CommandState command;
  DynamicsConfig dynamics;  // per-episode effective dynamics
  Vec4 prev_foot_forces_z = Vec4::Zero();
  StepLog log;
};

/// Observation assembly. Layout (avoidance, dim 58):
///   [0:3)   projected gravity (body frame)      noisy (gravity_noise)
///   [3:6)   base angular velocity               noisy (ang_vel_noise)
///   [6:18)  joint positions                     noisy (joint_pos_noise)
///   [18:30) joint velocities                    noisy (joint_vel_noise)
///   [30:42) previous policy action              exact
///   [42:45) obstacle position - base position   exact (sentinel when inactive)
///   [45:48) obstacle velocity                   exact (zero when inactive)
///   [48]    obstacle radius                     exact (zero when inactive)
///   [49:52) command (vx, vy, yaw rate)          exact
///   [52]    remaining reaction time             exact (zero when inactive)
///   [53:57) foot contact flags                  exact
///   [57]    base height                         noisy (height_noise)
/// Recovery (dim 47) drops the obstacle, command and reaction entries:
/// gravity, ang vel, q, qdot, prev action, contacts, height.
/// Inactive obstacles are encoded as relative position (0, 0, 10), zero
/// velocity, zero radius, zero remaining time.
Eigen::VectorXd observe(const EpisodeState& episode, PolicyKind kind, const EnvConfig& config,
                        Rng& rng);

struct StepInfo {
  bool done_timeout = false;
  bool done_collision = false;
  bool done_fall = false;
  bool avoided = false;  // meaningful when done
  double sdf = 0.0;
};

/// A single training/evaluation environment instance. Not thread-safe per
/// instance; a vector of instances may be stepped concurrently.
class Env {
 public:
  Env(const EnvConfig& config, const DynamicsConfig& dynamics, const RewardConfig& rewards,
      std::uint64_t seed);

  /// Starts a fresh episode; returns the first observation.
  Eigen::VectorXd reset();
  Eigen::VectorXd reset(const ScenarioSpec& scenario);

  /// Applies a raw policy action (scaled to joint targets), advances physics
  /// by one control step, returns the reward breakdown for the step.
  /// Throws ContractViolation if the episode is already done.
  Eigen::VectorXd step(const Eigen::VectorXd& policy_action, RewardBreakdown& reward,
                       bool& done, StepInfo& info);

  const EpisodeState& episode() const { return episode_; }
  EpisodeState& episode() { return episode_; }
  const EnvConfig& config() const { return config_; }
  const RewardConfig& reward_config() const { return rewards_; }
  Rng& rng() { return rng_; }

  /// Applies an already-built joint-target action (evaluation path where the
  /// FSM may substitute the PD stance).
  void step_action(const Action& action, RewardBreakdown& reward, bool& done, StepInfo& info);

  Action stance_action() const;
  Action action_from_policy(const Eigen::VectorXd& policy_action) const;

 private:
  void init_robot(const std::optional<ScenarioSpec>& scenario);

  EnvConfig config_;
  DynamicsConfig base_dynamics_;
  RewardConfig rewards_;
  RecoveryReference recovery_reference_;
  Rng rng_;
  EpisodeState episode_;
};

}  // namespace rebot
