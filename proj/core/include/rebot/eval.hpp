#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "rebot/config.hpp"
#include "rebot/env.hpp"
#include "rebot/rl.hpp"

namespace rebot {

/// Action source driving one FSM stage during evaluation.
struct Controller {
  std::function<Eigen::VectorXd(const Eigen::VectorXd& obs, Rng& rng)> act;
  double action_variance = 0.0;  // mean per-dimension variance, feeds the GDI metric
};

/// Deterministic (mean-action) policy controller. The params object must
/// outlive the controller.
Controller make_policy_controller(const PolicyParams& params);

/// i.i.d. N(0, 1) raw actions; the random-action baseline.
Controller make_random_controller(int action_dim = kNumJoints);

struct EpisodeMetrics {
  bool avoided = false;
  bool recovered = false;
  bool failed = false;  // simulation diverged
  double max_joint_power = 0.0;     // W, episode max
  double avoidance_distance = 0.0;  // m, start-to-end base displacement (xy)
  double mean_action_variance = 0.0;
  double reaction_time = 0.0;
  Plane plane = Plane::kXZ;
  double angle = 0.0;
};

/// Runs the full FSM loop: PD stance in Normal, the avoidance policy during
/// Avoidance, the recovery controller during Recovery (PD stance when
/// `recovery` is null, which is the no-recovery ablation). A diverged
/// simulation marks the episode failed instead of propagating.
EpisodeMetrics run_episode(const Controller& avoidance, const Controller* recovery,
                           const ScenarioSpec& scenario, const Config& config,
                           std::uint64_t seed);

struct AggregateMetrics {
  double asr = 0.0;
  double rsr = 0.0;  // 0 when nothing was avoided
  double mean_mjp = 0.0;
  double mean_amd = 0.0;
  double gdi = 0.0;
  int episodes = 0;
  int n_avoid = 0;
  int n_recover = 0;
  int failures = 0;
};

/// Throws InvalidInput on an empty list.
AggregateMetrics aggregate(const std::vector<EpisodeMetrics>& episodes);

enum class Region { kI = 1, kII = 2, kIII = 3 };

const char* region_name(Region region);

/// Region I: failure (asr <= 0.30). Region III: navigation-style avoidance
/// (mjp < 300 W). Region II: reflexive evasion (the rest).
Region classify_region(double asr, double mean_mjp);

struct SweepCell {
  Plane plane = Plane::kXZ;
  double angle = 0.0;
  double t_react = 0.0;
  AggregateMetrics metrics;
  Region region = Region::kI;
  double mjp_norm = 0.0;  // min-max normalized within the sweep
  double amd_norm = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

/// One aggregate per (angle, t_react) cell. Episode failures are counted per
/// cell and never abort the sweep.
SweepResult sweep(const Controller& avoidance, const Controller* recovery, Plane plane,
                  const std::vector<double>& angles, const std::vector<double>& t_reacts,
                  int episodes_per_cell, const Config& config, std::uint64_t seed);

/// Schema: plane, angle_rad, t_react_s, episodes, asr, rsr, mjp_w, mjp_norm,
/// amd_m, amd_norm, gdi, region.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);

/// Evenly spaced grid helpers for the CLI.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace rebot
