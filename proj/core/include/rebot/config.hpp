#pragma once

#include <filesystem>
#include <string>

#include "rebot/env.hpp"
#include "rebot/fsm.hpp"
#include "rebot/rewards.hpp"
#include "rebot/rl.hpp"
#include "rebot/sim.hpp"

namespace rebot {

/// Training-orchestration knobs.
struct CurriculumConfig {
  double stage1_fraction = 0.4;  // share of iterations spent on the static stage
  int checkpoint_interval = 500;
  int probe_interval = 50;   // iterations between evaluation probes
  int probe_episodes = 8;
};

struct EvalSettings {
  int episodes = 100;
  bool observation_noise = false;
};

struct AblationFlags {
  bool no_recovery = false;
  bool no_curriculum = false;
  bool no_adaptive = false;

  std::string to_string() const;  // "none" or '+'-joined flag names
};

/// The full structured configuration: one section per subsystem. Every field
/// has a default; `print-config` emits the merged result.
struct Config {
  DynamicsConfig dynamics;
  FsmThresholds fsm;
  RewardConfig rewards;
  PpoHyper ppo;
  EnvConfig env;
  CurriculumConfig curriculum;
  EvalSettings eval;
  AblationFlags ablations;
};

/// Loads a YAML config. Missing sections/keys keep their defaults; unknown
/// keys raise InvalidInput (they are almost always typos).
Config load_config(const std::filesystem::path& path);

Config parse_config(const std::string& yaml_text);

/// Serializes the full config as YAML.
std::string config_to_yaml(const Config& config);

/// Applies a `section.key=value` override.
void apply_override(Config& config, const std::string& assignment);

}  // namespace rebot
