#include "rebot/env.hpp"

#include <cmath>
#include <limits>

#include "rebot/errors.hpp"

namespace rebot {

namespace {
constexpr double kInactiveObstacleZ = 10.0;  // sentinel relative position
}  // namespace

const char* policy_kind_name(PolicyKind kind) {
  return kind == PolicyKind::kAvoidance ? "avoidance" : "recovery";
}

int observation_dim(PolicyKind kind) {
  return kind == PolicyKind::kAvoidance ? kAvoidanceObsDim : kRecoveryObsDim;
}

const char* plane_name(Plane plane) {
  switch (plane) {
    case Plane::kXZ: return "xz";
    case Plane::kYZ: return "yz";
    case Plane::kXY: return "xy";
  }
  return "?";
}

SampledParams sample_randomization(const EnvConfig& config, Rng& rng) {
  SampledParams p;
  p.friction = config.friction.sample(rng);
  p.added_mass = config.added_base_mass.sample(rng);
  p.obstacle_offset = Vec3(config.obstacle_offset.sample(rng), config.obstacle_offset.sample(rng),
                           config.obstacle_offset.sample(rng));
  p.obstacle_radius = config.obstacle_radius.sample(rng);
  p.obstacle_speed = config.obstacle_speed.sample(rng);
  p.reaction_time = config.reaction_time.sample(rng);
  p.episode_length = config.episode_length.sample(rng);
  p.command_yaw_rate = config.command_yaw.sample(rng);
  p.command_speed = config.command_velocity.sample(rng);
  p.command_heading = config.command_heading.sample(rng);
  return p;
}

Vec3 scenario_direction(Plane plane, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  switch (plane) {
    case Plane::kXZ: return {c, 0.0, s};
    case Plane::kYZ: return {0.0, c, s};
    case Plane::kXY: return {c, s, 0.0};
  }
  return {1.0, 0.0, 0.0};
}

ObstacleState curriculum_scenario(CurriculumStage stage, const SampledParams& params,
                                  const Vec3& robot_position, double episode_length, Rng& rng) {
  ObstacleState o;
  o.radius = params.obstacle_radius;
  o.reaction_time = params.reaction_time;
  if (stage == CurriculumStage::kStatic) {
    o.position = robot_position + params.obstacle_offset;
    o.velocity = Vec3::Zero();
    o.activation_time = std::max(episode_length - params.reaction_time, 0.0);
    o.active = false;
  } else {
    // Random direction over the unit sphere; spawn distance makes the
    // straight-line time to the base exactly the sampled reaction time.
    Vec3 dir;
    do {
      dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (dir.norm() < 1e-6);
    dir.normalize();
    const double spawn_distance = params.obstacle_speed * params.reaction_time;
    o.position = robot_position + spawn_distance * dir;
    o.velocity = -params.obstacle_speed * dir;
    o.activation_time = 0.0;
    o.active = true;
  }
  return o;
}

ObstacleState directed_scenario(const SampledParams& params, const Vec3& robot_position,
                                const ScenarioSpec& spec) {
  ObstacleState o;
  o.radius = spec.radius.value_or(params.obstacle_radius);
  o.reaction_time = spec.t_react;
  const double speed = spec.speed.value_or(params.obstacle_speed);
  const Vec3 dir = scenario_direction(spec.plane, spec.angle);
  o.position = robot_position + speed * spec.t_react * dir;
  o.velocity = -speed * dir;
  o.activation_time = 0.0;
  o.active = true;
  return o;
}

Eigen::VectorXd observe(const EpisodeState& episode, PolicyKind kind, const EnvConfig& config,
                        Rng& rng) {
  const bool noisy = config.observation_noise;
  auto noise = [&](const Range& r) { return noisy ? r.sample(rng) : 0.0; };

  const RobotState& robot = episode.robot;
  const Mat3 rot = robot.rotation();
  const Vec3 gravity_body = rot.transpose() * Vec3(0.0, 0.0, -1.0);

  Eigen::VectorXd obs(observation_dim(kind));
  int k = 0;
  for (int i = 0; i < 3; ++i) obs[k++] = gravity_body[i] + noise(config.gravity_noise);
  for (int i = 0; i < 3; ++i) obs[k++] = robot.base_angular_velocity[i] + noise(config.ang_vel_noise);
  for (int i = 0; i < kNumJoints; ++i) obs[k++] = robot.joint_positions[i] + noise(config.joint_pos_noise);
  for (int i = 0; i < kNumJoints; ++i) obs[k++] = robot.joint_velocities[i] + noise(config.joint_vel_noise);
  for (int i = 0; i < kNumJoints; ++i) obs[k++] = episode.prev_policy_action[i];

  if (kind == PolicyKind::kAvoidance) {
    const ObstacleState& o = episode.obstacle;
    if (o.active) {
      const Vec3 rel = o.position - robot.base_position;
      for (int i = 0; i < 3; ++i) obs[k++] = rel[i];
      for (int i = 0; i < 3; ++i) obs[k++] = o.velocity[i];
      obs[k++] = o.radius;
    } else {
      obs[k++] = 0.0;
      obs[k++] = 0.0;
      obs[k++] = kInactiveObstacleZ;
      for (int i = 0; i < 3; ++i) obs[k++] = 0.0;
      obs[k++] = 0.0;
    }
    obs[k++] = episode.command.velocity.x();
    obs[k++] = episode.command.velocity.y();
    obs[k++] = episode.command.yaw_rate;
    obs[k++] = o.active
                   ? std::max(o.activation_time + o.reaction_time - episode.sim_time, 0.0)
                   : 0.0;
  }

  for (int leg = 0; leg < kNumLegs; ++leg) obs[k++] = episode.contacts.in_contact[leg] ? 1.0 : 0.0;
  obs[k++] = robot.base_height() + noise(config.height_noise);
  return obs;
}

Env::Env(const EnvConfig& config, const DynamicsConfig& dynamics, const RewardConfig& rewards,
         std::uint64_t seed)
    : config_(config), base_dynamics_(dynamics), rewards_(rewards), rng_(seed) {
  recovery_reference_.default_position = Vec3(0.0, 0.0, dynamics.default_base_height());
}

Action Env::stance_action() const {
  return Action{episode_.dynamics.default_joint_positions()};
}

Action Env::action_from_policy(const Eigen::VectorXd& policy_action) const {
  if (policy_action.size() != kNumJoints) {
    throw InvalidInput("Env: policy action must have 12 entries");
  }
  const Vec12 clipped =
      policy_action.cwiseMax(-config_.action_clip).cwiseMin(config_.action_clip);
  return Action{episode_.dynamics.default_joint_positions() + config_.action_scale * clipped};
}

void Env::init_robot(const std::optional<ScenarioSpec>& scenario) {
  episode_ = EpisodeState{};
  episode_.params = sample_randomization(config_, rng_);
  episode_.dynamics = base_dynamics_;
  episode_.dynamics.friction_mu = episode_.params.friction;
  episode_.dynamics.base_mass += episode_.params.added_mass;

  if (config_.policy_kind == PolicyKind::kAvoidance) {
    episode_.robot = make_default_state(episode_.dynamics);
    if (scenario.has_value() && scenario->initial_yaw != 0.0) {
      episode_.robot.orientation =
          Eigen::Quaterniond(Eigen::AngleAxisd(scenario->initial_yaw, Vec3::UnitZ()));
    }
  } else {
    // Perturbed post-avoidance start: tilted, falling, joints in motion.
    RobotState s = make_default_state(episode_.dynamics);
    const double roll = rng_.uniform(-config_.recovery_max_tilt, config_.recovery_max_tilt);
    const double pitch = rng_.uniform(-config_.recovery_max_tilt, config_.recovery_max_tilt);
    const double yaw = rng_.uniform(-config_.recovery_max_yaw, config_.recovery_max_yaw);
    s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                                       Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                                       Eigen::AngleAxisd(roll, Vec3::UnitX()));
    s.base_position.z() = config_.recovery_height.sample(rng_);
    for (int i = 0; i < kNumJoints; ++i) {
      s.joint_velocities[i] =
          rng_.uniform(-config_.recovery_max_joint_vel, config_.recovery_max_joint_vel);
      s.joint_positions[i] = std::clamp(s.joint_positions[i] + rng_.uniform(-0.6, 0.6),
                                        episode_.dynamics.joint_lower_vec()[i],
                                        episode_.dynamics.joint_upper_vec()[i]);
    }
    s.base_linear_velocity = Vec3(rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0),
                                  rng_.uniform(-1.0, 0.0));
    s.base_angular_velocity =
        Vec3(rng_.uniform(-3.0, 3.0), rng_.uniform(-3.0, 3.0), rng_.uniform(-3.0, 3.0));
    episode_.robot = s;
  }

  if (config_.randomize_commands && config_.policy_kind == PolicyKind::kAvoidance) {
    episode_.command.velocity =
        episode_.params.command_speed * Vec3(std::cos(episode_.params.command_heading),
                                             std::sin(episode_.params.command_heading), 0.0);
    episode_.command.yaw_rate = episode_.params.command_yaw_rate;
    episode_.command.heading = episode_.params.command_heading;
  } else {
    episode_.command = CommandState{};
  }

  if (scenario.has_value()) {
    episode_.params.reaction_time = scenario->t_react;
    episode_.obstacle = directed_scenario(episode_.params, episode_.robot.base_position, *scenario);
  } else {
    episode_.obstacle = curriculum_scenario(config_.curriculum_stage, episode_.params,
                                            episode_.robot.base_position,
                                            episode_.params.episode_length, rng_);
  }

  // Initial contact flags from geometry so the first step does not register
  // spurious touchdowns.
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 foot = foot_position_world(episode_.dynamics, episode_.robot, leg);
    episode_.contacts.in_contact[leg] = foot.z() < 1e-3;
  }
  episode_.prev_action = stance_action();
  episode_.prev_policy_action = Eigen::VectorXd::Zero(kNumJoints);
  episode_.prev_foot_forces_z = Vec4::Zero();
}

Eigen::VectorXd Env::reset() {
  init_robot(std::nullopt);
  return observe(episode_, config_.policy_kind, config_, rng_);
}

Eigen::VectorXd Env::reset(const ScenarioSpec& scenario) {
  init_robot(scenario);
  return observe(episode_, config_.policy_kind, config_, rng_);
}

Eigen::VectorXd Env::step(const Eigen::VectorXd& policy_action, RewardBreakdown& reward,
                          bool& done, StepInfo& info) {
  const Action action = action_from_policy(policy_action);
  step_action(action, reward, done, info);
  episode_.prev_policy_action =
      policy_action.cwiseMax(-config_.action_clip).cwiseMin(config_.action_clip);
  return observe(episode_, config_.policy_kind, config_, rng_);
}

void Env::step_action(const Action& action, RewardBreakdown& reward, bool& done, StepInfo& info) {
  if (episode_.done) throw ContractViolation("Env::step: episode is done");

  const DynamicsConfig& dyn = episode_.dynamics;
  bool collided_now = false;
  Vec4 touchdown_sums = Vec4::Zero();
  double sdf = std::numeric_limits<double>::infinity();

  for (int sub = 0; sub < dyn.decimation; ++sub) {
    episode_.obstacle = obstacle_step(episode_.obstacle, dyn.dt, episode_.sim_time);
    ContactState contacts;
    try {
      std::tie(episode_.robot, contacts) =
          robot_step(episode_.robot, action, dyn.dt, dyn, episode_.contacts);
    } catch (const SimulationDiverged&) {
      throw SimulationDiverged("episode diverged", episode_.step_count);
    }
    touchdown_sums += contacts.touchdown_air_time;
    episode_.contacts = contacts;
    episode_.sim_time += dyn.dt;

    if (episode_.obstacle.active) {
      const Obb obb = obb_from_robot_state(episode_.robot, dyn.obb_half_extents);
      sdf = sdf_point_obb(episode_.obstacle.position, obb);
      if (sdf < episode_.obstacle.radius) collided_now = true;
    }
  }

  ContactState control_contacts = episode_.contacts;
  control_contacts.touchdown_air_time = touchdown_sums;

  reward = RewardBreakdown{};
  const Vec4 fz_now = control_contacts.forces.col(2);

  if (config_.policy_kind == PolicyKind::kAvoidance) {
    const bool obstacle_active = episode_.obstacle.active;
    const auto avoid = avoidance_reward(obstacle_active ? sdf : 0.0,
                                        obstacle_active ? episode_.obstacle.radius : 0.0,
                                        collided_now);
    reward.distance = obstacle_active ? avoid.distance : 0.0;
    reward.collision = avoid.collision;

    const auto reg = regularization_reward(control_contacts, episode_.robot.joint_torques,
                                           episode_.robot.joint_velocities, fz_now,
                                           episode_.prev_foot_forces_z);
    reward.walk = reg.walk;
    reward.energy = reg.energy;
    reward.contact = reg.contact;

    // While the obstacle is hidden the threat boost and escape direction are
    // undefined for the policy; threat falls back to command tracking.
    const double effective_reaction =
        obstacle_active ? episode_.obstacle.reaction_time
                        : std::numeric_limits<double>::infinity();
    const Vec3 offset = obstacle_active
                            ? Vec3(episode_.obstacle.position - episode_.robot.base_position)
                            : Vec3(Vec3::Zero());
    const auto adaptive =
        adaptive_reward(0.0, episode_.robot.base_linear_velocity, episode_.command,
                        effective_reaction, offset, rewards_);
    reward.diversity = adaptive.diversity;
    reward.threat = adaptive.threat;
    reward.direction = adaptive.direction;
  } else {
    const auto rec = recovery_reward(episode_.robot, episode_.prev_action, action,
                                     recovery_reference_, rewards_);
    reward.orientation = rec.orientation;
    reward.stable = rec.stable;
    reward.position = rec.position;
    reward.additional = rec.additional;
  }

  const auto aux = auxiliary_reward(episode_.robot, episode_.prev_action, action,
                                    control_contacts, episode_.command, rewards_);
  reward.vertical_velocity = aux.vertical_velocity;
  reward.horizontal_ang_vel = aux.horizontal_ang_vel;
  reward.flat_orientation = aux.flat_orientation;
  reward.action_rate = aux.action_rate;
  reward.body_collision = aux.body_collision;
  reward.lin_vel_tracking = aux.lin_vel_tracking;
  reward.ang_vel_tracking = aux.ang_vel_tracking;
  reward.feet_air_time = aux.feet_air_time;
  reward.stumble = aux.stumble;
  reward.contact_force = aux.contact_force;
  reward.finalize(rewards_);

  episode_.collided_ever = episode_.collided_ever || collided_now;
  episode_.prev_action = action;
  episode_.prev_foot_forces_z = fz_now;
  episode_.step_count += 1;

  info = StepInfo{};
  info.sdf = std::isfinite(sdf) ? sdf : 0.0;
  done = false;
  if (collided_now && config_.terminate_on_collision &&
      config_.policy_kind == PolicyKind::kAvoidance) {
    done = true;
    info.done_collision = true;
  }
  if (episode_.robot.base_height() < config_.fall_height) {
    done = true;
    info.done_fall = true;
  }
  if (episode_.sim_time >= episode_.params.episode_length) {
    done = true;
    info.done_timeout = true;
  }
  if (done) {
    episode_.done = true;
    info.avoided = !episode_.collided_ever;
  }

  episode_.log.push(StepRecord{episode_.sim_time, reward.total, info.sdf, episode_.stage});
}

}  // namespace rebot
