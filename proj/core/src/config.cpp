#include "rebot/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "rebot/errors.hpp"

namespace rebot {

namespace {

class SectionReader {
 public:
  SectionReader(const YAML::Node& node, std::string name)
      : node_(node), name_(std::move(name)) {}

  template <typename T>
  void get(const char* key, T& value) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    try {
      value = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw InvalidInput("config: bad value for " + name_ + "." + key);
    }
  }

  void get(const char* key, Range& range) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    const YAML::Node& n = node_[key];
    if (!n.IsSequence() || n.size() != 2) {
      throw InvalidInput("config: " + name_ + "." + key + " must be [lo, hi]");
    }
    range.lo = n[0].as<double>();
    range.hi = n[1].as<double>();
    if (!range.valid()) {
      throw InvalidInput("config: " + name_ + "." + key + " has lo > hi");
    }
  }

  void get(const char* key, Vec3& v) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    const YAML::Node& n = node_[key];
    if (!n.IsSequence() || n.size() != 3) {
      throw InvalidInput("config: " + name_ + "." + key + " must be [x, y, z]");
    }
    for (int i = 0; i < 3; ++i) v[i] = n[i].as<double>();
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw InvalidInput("config: unknown key " + name_ + "." + key);
      }
    }
  }

 private:
  const YAML::Node& node_;
  std::string name_;
  std::set<std::string> seen_;
};

void parse_into(Config& c, const YAML::Node& root) {
  if (!root.IsMap() && !root.IsNull()) throw InvalidInput("config: top level must be a map");
  const std::set<std::string> sections = {"dynamics", "fsm", "rewards",    "ppo",
                                          "env",      "eval", "curriculum", "ablations"};
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!sections.count(key)) throw InvalidInput("config: unknown section " + key);
  }

  {
    SectionReader s(root["dynamics"], "dynamics");
    auto& d = c.dynamics;
    s.get("dt", d.dt);
    s.get("decimation", d.decimation);
    s.get("gravity", d.gravity);
    s.get("base_mass", d.base_mass);
    s.get("base_inertia", d.base_inertia);
    s.get("obb_half_extents", d.obb_half_extents);
    s.get("hip_offset_x", d.hip_offset_x);
    s.get("hip_offset_y", d.hip_offset_y);
    s.get("abd_link", d.abd_link);
    s.get("thigh_len", d.thigh_len);
    s.get("calf_len", d.calf_len);
    s.get("joint_reflected_inertia", d.joint_reflected_inertia);
    s.get("kp", d.kp);
    s.get("kd", d.kd);
    s.get("torque_limit", d.torque_limit);
    s.get("joint_lower", d.joint_lower);
    s.get("joint_upper", d.joint_upper);
    s.get("default_stance", d.default_stance);
    s.get("contact_k", d.contact_k);
    s.get("contact_d", d.contact_d);
    s.get("tangential_d", d.tangential_d);
    s.get("friction_mu", d.friction_mu);
    s.finish();
  }
  {
    SectionReader s(root["fsm"], "fsm");
    auto& f = c.fsm;
    s.get("orientation_limit", f.orientation_limit);
    s.get("joint_velocity_limit", f.joint_velocity_limit);
    s.get("height_floor", f.height_floor);
    s.get("recovery_hold_time", f.recovery_hold_time);
    s.get("clear_distance", f.clear_distance);
    s.finish();
  }
  {
    SectionReader s(root["rewards"], "rewards");
    auto& r = c.rewards;
    s.get("distance", r.w_distance);
    s.get("collision", r.w_collision);
    s.get("walk", r.w_walk);
    s.get("energy", r.w_energy);
    s.get("contact", r.w_contact);
    s.get("diversity", r.w_diversity);
    s.get("threat", r.w_threat);
    s.get("direction", r.w_direction);
    s.get("orientation", r.w_orientation);
    s.get("stable", r.w_stable);
    s.get("position", r.w_position);
    s.get("additional", r.w_additional);
    s.get("vertical_velocity", r.w_vertical_velocity);
    s.get("horizontal_ang_vel", r.w_horizontal_ang_vel);
    s.get("flat_orientation", r.w_flat_orientation);
    s.get("action_rate", r.w_action_rate);
    s.get("body_collision", r.w_body_collision);
    s.get("lin_vel_tracking", r.w_lin_vel_tracking);
    s.get("ang_vel_tracking", r.w_ang_vel_tracking);
    s.get("feet_air_time", r.w_feet_air_time);
    s.get("stumble", r.w_stumble);
    s.get("contact_force", r.w_contact_force);
    s.get("threat_gain", r.threat_gain);
    s.get("threat_decay", r.threat_decay);
    s.get("contact_force_threshold", r.contact_force_threshold);
    s.get("stumble_ratio_limit", r.stumble_ratio_limit);
    s.get("foot_airtime_target", r.foot_airtime_target);
    s.get("additional_torque_weight", r.additional_torque_weight);
    s.get("additional_action_rate_weight", r.additional_action_rate_weight);
    s.finish();
  }
  {
    SectionReader s(root["ppo"], "ppo");
    auto& p = c.ppo;
    s.get("clip", p.clip);
    s.get("value_coef", p.value_coef);
    s.get("entropy_coef", p.entropy_coef);
    s.get("learning_rate", p.learning_rate);
    s.get("gamma", p.gamma);
    s.get("gae_lambda", p.gae_lambda);
    s.get("steps_per_env", p.steps_per_env);
    s.get("num_envs", p.num_envs);
    s.get("epochs", p.epochs);
    s.get("minibatches", p.minibatches);
    s.get("max_grad_norm", p.max_grad_norm);
    s.get("target_kl", p.target_kl);
    s.get("max_iterations", p.max_iterations);
    s.get("lr_min", p.lr_min);
    s.get("lr_max", p.lr_max);
    s.get("hidden_dims", p.hidden_dims);
    s.get("log_std_init", p.log_std_init);
    s.get("log_std_min", p.log_std_min);
    s.get("log_std_max", p.log_std_max);
    s.finish();
  }
  {
    SectionReader s(root["env"], "env");
    auto& e = c.env;
    int stage = static_cast<int>(e.curriculum_stage);
    s.get("curriculum_stage", stage);
    if (stage != 1 && stage != 2) throw InvalidInput("config: env.curriculum_stage must be 1 or 2");
    e.curriculum_stage = static_cast<CurriculumStage>(stage);
    s.get("joint_pos_noise", e.joint_pos_noise);
    s.get("joint_vel_noise", e.joint_vel_noise);
    s.get("ang_vel_noise", e.ang_vel_noise);
    s.get("gravity_noise", e.gravity_noise);
    s.get("height_noise", e.height_noise);
    s.get("observation_noise", e.observation_noise);
    s.get("friction", e.friction);
    s.get("added_base_mass", e.added_base_mass);
    s.get("obstacle_offset", e.obstacle_offset);
    s.get("obstacle_radius", e.obstacle_radius);
    s.get("obstacle_speed", e.obstacle_speed);
    s.get("reaction_time", e.reaction_time);
    s.get("episode_length", e.episode_length);
    s.get("command_yaw", e.command_yaw);
    s.get("command_velocity", e.command_velocity);
    s.get("command_heading", e.command_heading);
    s.get("randomize_commands", e.randomize_commands);
    s.get("recovery_max_tilt", e.recovery_max_tilt);
    s.get("recovery_max_yaw", e.recovery_max_yaw);
    s.get("recovery_max_joint_vel", e.recovery_max_joint_vel);
    s.get("recovery_height", e.recovery_height);
    s.get("action_scale", e.action_scale);
    s.get("action_clip", e.action_clip);
    s.get("fall_height", e.fall_height);
    s.get("terminate_on_collision", e.terminate_on_collision);
    s.finish();
  }
  {
    SectionReader s(root["curriculum"], "curriculum");
    auto& k = c.curriculum;
    s.get("stage1_fraction", k.stage1_fraction);
    s.get("checkpoint_interval", k.checkpoint_interval);
    s.get("probe_interval", k.probe_interval);
    s.get("probe_episodes", k.probe_episodes);
    s.finish();
  }
  {
    SectionReader s(root["eval"], "eval");
    auto& e = c.eval;
    s.get("episodes", e.episodes);
    s.get("observation_noise", e.observation_noise);
    s.finish();
  }
  {
    SectionReader s(root["ablations"], "ablations");
    auto& a = c.ablations;
    s.get("no_recovery", a.no_recovery);
    s.get("no_curriculum", a.no_curriculum);
    s.get("no_adaptive", a.no_adaptive);
    s.finish();
  }
}

void emit_range(YAML::Emitter& out, const char* key, const Range& r) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << r.lo << r.hi
      << YAML::EndSeq;
}

void emit_vec3(YAML::Emitter& out, const char* key, const Vec3& v) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << v.x() << v.y()
      << v.z() << YAML::EndSeq;
}

}  // namespace

std::string AblationFlags::to_string() const {
  std::string s;
  auto add = [&s](const char* name) {
    if (!s.empty()) s += '+';
    s += name;
  };
  if (no_recovery) add("no-recovery");
  if (no_curriculum) add("no-curriculum");
  if (no_adaptive) add("no-adaptive");
  return s.empty() ? "none" : s;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Config parse_config(const std::string& yaml_text) {
  Config c;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw InvalidInput(std::string("config: YAML parse error: ") + e.what());
  }
  parse_into(c, root);
  return c;
}

std::string config_to_yaml(const Config& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;

  out << YAML::Key << "dynamics" << YAML::Value << YAML::BeginMap;
  const auto& d = c.dynamics;
  out << YAML::Key << "dt" << YAML::Value << d.dt;
  out << YAML::Key << "decimation" << YAML::Value << d.decimation;
  out << YAML::Key << "gravity" << YAML::Value << d.gravity;
  out << YAML::Key << "base_mass" << YAML::Value << d.base_mass;
  emit_vec3(out, "base_inertia", d.base_inertia);
  emit_vec3(out, "obb_half_extents", d.obb_half_extents);
  out << YAML::Key << "hip_offset_x" << YAML::Value << d.hip_offset_x;
  out << YAML::Key << "hip_offset_y" << YAML::Value << d.hip_offset_y;
  out << YAML::Key << "abd_link" << YAML::Value << d.abd_link;
  out << YAML::Key << "thigh_len" << YAML::Value << d.thigh_len;
  out << YAML::Key << "calf_len" << YAML::Value << d.calf_len;
  out << YAML::Key << "joint_reflected_inertia" << YAML::Value << d.joint_reflected_inertia;
  out << YAML::Key << "kp" << YAML::Value << d.kp;
  out << YAML::Key << "kd" << YAML::Value << d.kd;
  out << YAML::Key << "torque_limit" << YAML::Value << d.torque_limit;
  emit_vec3(out, "joint_lower", d.joint_lower);
  emit_vec3(out, "joint_upper", d.joint_upper);
  emit_vec3(out, "default_stance", d.default_stance);
  out << YAML::Key << "contact_k" << YAML::Value << d.contact_k;
  out << YAML::Key << "contact_d" << YAML::Value << d.contact_d;
  out << YAML::Key << "tangential_d" << YAML::Value << d.tangential_d;
  out << YAML::Key << "friction_mu" << YAML::Value << d.friction_mu;
  out << YAML::EndMap;

  out << YAML::Key << "fsm" << YAML::Value << YAML::BeginMap;
  const auto& f = c.fsm;
  out << YAML::Key << "orientation_limit" << YAML::Value << f.orientation_limit;
  out << YAML::Key << "joint_velocity_limit" << YAML::Value << f.joint_velocity_limit;
  out << YAML::Key << "height_floor" << YAML::Value << f.height_floor;
  out << YAML::Key << "recovery_hold_time" << YAML::Value << f.recovery_hold_time;
  out << YAML::Key << "clear_distance" << YAML::Value << f.clear_distance;
  out << YAML::EndMap;

  out << YAML::Key << "rewards" << YAML::Value << YAML::BeginMap;
  const auto& r = c.rewards;
  out << YAML::Key << "distance" << YAML::Value << r.w_distance;
  out << YAML::Key << "collision" << YAML::Value << r.w_collision;
  out << YAML::Key << "walk" << YAML::Value << r.w_walk;
  out << YAML::Key << "energy" << YAML::Value << r.w_energy;
  out << YAML::Key << "contact" << YAML::Value << r.w_contact;
  out << YAML::Key << "diversity" << YAML::Value << r.w_diversity;
  out << YAML::Key << "threat" << YAML::Value << r.w_threat;
  out << YAML::Key << "direction" << YAML::Value << r.w_direction;
  out << YAML::Key << "orientation" << YAML::Value << r.w_orientation;
  out << YAML::Key << "stable" << YAML::Value << r.w_stable;
  out << YAML::Key << "position" << YAML::Value << r.w_position;
  out << YAML::Key << "additional" << YAML::Value << r.w_additional;
  out << YAML::Key << "vertical_velocity" << YAML::Value << r.w_vertical_velocity;
  out << YAML::Key << "horizontal_ang_vel" << YAML::Value << r.w_horizontal_ang_vel;
  out << YAML::Key << "flat_orientation" << YAML::Value << r.w_flat_orientation;
  out << YAML::Key << "action_rate" << YAML::Value << r.w_action_rate;
  out << YAML::Key << "body_collision" << YAML::Value << r.w_body_collision;
  out << YAML::Key << "lin_vel_tracking" << YAML::Value << r.w_lin_vel_tracking;
  out << YAML::Key << "ang_vel_tracking" << YAML::Value << r.w_ang_vel_tracking;
  out << YAML::Key << "feet_air_time" << YAML::Value << r.w_feet_air_time;
  out << YAML::Key << "stumble" << YAML::Value << r.w_stumble;
  out << YAML::Key << "contact_force" << YAML::Value << r.w_contact_force;
  out << YAML::Key << "threat_gain" << YAML::Value << r.threat_gain;
  out << YAML::Key << "threat_decay" << YAML::Value << r.threat_decay;
  out << YAML::Key << "contact_force_threshold" << YAML::Value << r.contact_force_threshold;
  out << YAML::Key << "stumble_ratio_limit" << YAML::Value << r.stumble_ratio_limit;
  out << YAML::Key << "foot_airtime_target" << YAML::Value << r.foot_airtime_target;
  out << YAML::Key << "additional_torque_weight" << YAML::Value << r.additional_torque_weight;
  out << YAML::Key << "additional_action_rate_weight" << YAML::Value
      << r.additional_action_rate_weight;
  out << YAML::EndMap;

  out << YAML::Key << "ppo" << YAML::Value << YAML::BeginMap;
  const auto& p = c.ppo;
  out << YAML::Key << "clip" << YAML::Value << p.clip;
  out << YAML::Key << "value_coef" << YAML::Value << p.value_coef;
  out << YAML::Key << "entropy_coef" << YAML::Value << p.entropy_coef;
  out << YAML::Key << "learning_rate" << YAML::Value << p.learning_rate;
  out << YAML::Key << "gamma" << YAML::Value << p.gamma;
  out << YAML::Key << "gae_lambda" << YAML::Value << p.gae_lambda;
  out << YAML::Key << "steps_per_env" << YAML::Value << p.steps_per_env;
  out << YAML::Key << "num_envs" << YAML::Value << p.num_envs;
  out << YAML::Key << "epochs" << YAML::Value << p.epochs;
  out << YAML::Key << "minibatches" << YAML::Value << p.minibatches;
  out << YAML::Key << "max_grad_norm" << YAML::Value << p.max_grad_norm;
  out << YAML::Key << "target_kl" << YAML::Value << p.target_kl;
  out << YAML::Key << "max_iterations" << YAML::Value << p.max_iterations;
  out << YAML::Key << "lr_min" << YAML::Value << p.lr_min;
  out << YAML::Key << "lr_max" << YAML::Value << p.lr_max;
  out << YAML::Key << "hidden_dims" << YAML::Value << YAML::Flow << p.hidden_dims;
  out << YAML::Key << "log_std_init" << YAML::Value << p.log_std_init;
  out << YAML::Key << "log_std_min" << YAML::Value << p.log_std_min;
  out << YAML::Key << "log_std_max" << YAML::Value << p.log_std_max;
  out << YAML::EndMap;

  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  const auto& e = c.env;
  out << YAML::Key << "curriculum_stage" << YAML::Value << static_cast<int>(e.curriculum_stage);
  emit_range(out, "joint_pos_noise", e.joint_pos_noise);
  emit_range(out, "joint_vel_noise", e.joint_vel_noise);
  emit_range(out, "ang_vel_noise", e.ang_vel_noise);
  emit_range(out, "gravity_noise", e.gravity_noise);
  emit_range(out, "height_noise", e.height_noise);
  out << YAML::Key << "observation_noise" << YAML::Value << e.observation_noise;
  emit_range(out, "friction", e.friction);
  emit_range(out, "added_base_mass", e.added_base_mass);
  emit_range(out, "obstacle_offset", e.obstacle_offset);
  emit_range(out, "obstacle_radius", e.obstacle_radius);
  emit_range(out, "obstacle_speed", e.obstacle_speed);
  emit_range(out, "reaction_time", e.reaction_time);
  emit_range(out, "episode_length", e.episode_length);
  emit_range(out, "command_yaw", e.command_yaw);
  emit_range(out, "command_velocity", e.command_velocity);
  emit_range(out, "command_heading", e.command_heading);
  out << YAML::Key << "randomize_commands" << YAML::Value << e.randomize_commands;
  out << YAML::Key << "recovery_max_tilt" << YAML::Value << e.recovery_max_tilt;
  out << YAML::Key << "recovery_max_yaw" << YAML::Value << e.recovery_max_yaw;
  out << YAML::Key << "recovery_max_joint_vel" << YAML::Value << e.recovery_max_joint_vel;
  emit_range(out, "recovery_height", e.recovery_height);
  out << YAML::Key << "action_scale" << YAML::Value << e.action_scale;
  out << YAML::Key << "action_clip" << YAML::Value << e.action_clip;
  out << YAML::Key << "fall_height" << YAML::Value << e.fall_height;
  out << YAML::Key << "terminate_on_collision" << YAML::Value << e.terminate_on_collision;
  out << YAML::EndMap;

  out << YAML::Key << "curriculum" << YAML::Value << YAML::BeginMap;
  const auto& k = c.curriculum;
  out << YAML::Key << "stage1_fraction" << YAML::Value << k.stage1_fraction;
  out << YAML::Key << "checkpoint_interval" << YAML::Value << k.checkpoint_interval;
  out << YAML::Key << "probe_interval" << YAML::Value << k.probe_interval;
  out << YAML::Key << "probe_episodes" << YAML::Value << k.probe_episodes;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "episodes" << YAML::Value << c.eval.episodes;
  out << YAML::Key << "observation_noise" << YAML::Value << c.eval.observation_noise;
  out << YAML::EndMap;

  out << YAML::Key << "ablations" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "no_recovery" << YAML::Value << c.ablations.no_recovery;
  out << YAML::Key << "no_curriculum" << YAML::Value << c.ablations.no_curriculum;
  out << YAML::Key << "no_adaptive" << YAML::Value << c.ablations.no_adaptive;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw InvalidInput("override must look like section.key=value: " + assignment);
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string value = assignment.substr(eq + 1);
  YAML::Node root;
  try {
    root[section][key] = YAML::Load(value);
  } catch (const YAML::Exception&) {
    throw InvalidInput("override has invalid value: " + assignment);
  }
  parse_into(config, root);
}

}  // namespace rebot
