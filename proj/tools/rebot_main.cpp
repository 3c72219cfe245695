// rebot: train, evaluate and sweep reflexive-evasion policies for a
// reduced-order quadruped. See README.md for the file formats.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <Eigen/Core>

#include "rebot/checkpoint.hpp"
#include "rebot/config.hpp"
#include "rebot/csv.hpp"
#include "rebot/errors.hpp"
#include "rebot/eval.hpp"
#include "rebot/trainer.hpp"

namespace {

using namespace rebot;

void apply_thread_cap() {
  if (const char* env = std::getenv("REBOT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
#ifdef _OPENMP
      omp_set_num_threads(n);
#endif
      Eigen::setNbThreads(n);
    }
  }
}

Config load_merged_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  Config config = config_path.empty() ? Config{} : load_config(config_path);
  for (const auto& assignment : overrides) apply_override(config, assignment);
  return config;
}

std::pair<double, double> parse_lo_hi(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("expected lo:hi, got " + text);
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

struct GridSpec {
  double lo, hi;
  int steps;
};

GridSpec parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw InvalidInput("expected lo:hi:steps, got " + text);
  }
  GridSpec g;
  g.lo = std::stod(text.substr(0, c1));
  g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  g.steps = std::stoi(text.substr(c2 + 1));
  if (g.steps < 1) throw InvalidInput("grid needs at least one step: " + text);
  return g;
}

Plane parse_plane(const std::string& name) {
  if (name == "xz") return Plane::kXZ;
  if (name == "yz") return Plane::kYZ;
  if (name == "xy") return Plane::kXY;
  throw InvalidInput("unknown plane " + name + " (expected xz, yz or xy)");
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& policy, std::uint64_t seed, const std::string& resume,
              const std::vector<std::string>& ablate, const std::string& out_dir) {
  Config config = load_merged_config(config_path, overrides);
  for (const auto& flag : ablate) {
    if (flag == "no-recovery") {
      config.ablations.no_recovery = true;
    } else if (flag == "no-curriculum") {
      config.ablations.no_curriculum = true;
    } else if (flag == "no-adaptive") {
      config.ablations.no_adaptive = true;
    } else {
      throw InvalidInput("unknown ablation flag " + flag);
    }
  }
  const PolicyKind kind =
      policy == "avoidance" ? PolicyKind::kAvoidance : PolicyKind::kRecovery;
  std::optional<std::filesystem::path> resume_path;
  if (!resume.empty()) resume_path = resume;

  const TrainResult result = train(kind, config, seed, resume_path, out_dir, &std::cerr);
  std::cout << "checkpoint: " << result.final_checkpoint.string() << "\n"
            << "csv: " << result.csv_path.string() << "\n"
            << "iterations: " << result.iterations << "\n"
            << "final_probe_success: " << csv_format(result.final_probe_success) << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& avoidance_path, const std::string& recovery_path, int episodes,
             const std::string& t_react, std::uint64_t seed, const std::string& out_dir) {
  Config config = load_merged_config(config_path, overrides);
  const auto [t_lo, t_hi] = parse_lo_hi(t_react);

  const auto [avoid_params, avoid_kind] = checkpoint_load(avoidance_path);
  if (avoid_kind != PolicyKind::kAvoidance) {
    throw InvalidInput("--avoidance checkpoint holds a recovery policy");
  }
  const Controller avoidance = make_policy_controller(avoid_params);

  std::optional<PolicyParams> recovery_params;
  Controller recovery_controller;
  const Controller* recovery = nullptr;
  if (!recovery_path.empty() && !config.ablations.no_recovery) {
    auto [params, kind] = checkpoint_load(recovery_path);
    if (kind != PolicyKind::kRecovery) {
      throw InvalidInput("--recovery checkpoint holds an avoidance policy");
    }
    recovery_params = std::move(params);
    recovery_controller = make_policy_controller(*recovery_params);
    recovery = &recovery_controller;
  }

  std::filesystem::create_directories(out_dir);
  CsvWriter csv(std::filesystem::path(out_dir) / "eval_episodes.csv",
                {"episode", "plane", "angle_rad", "t_react_s", "avoided", "recovered", "failed",
                 "mjp_w", "amd_m", "gdi", "ablation"});

  std::vector<EpisodeMetrics> all;
  all.reserve(episodes);
  Rng scen_rng(Rng::derive(seed, 11));
  for (int e = 0; e < episodes; ++e) {
    ScenarioSpec spec;
    spec.plane = static_cast<Plane>(scen_rng.uniform_index(3));
    spec.angle = scen_rng.uniform(0.0, 3.14159265358979323846);
    spec.t_react = scen_rng.uniform(t_lo, t_hi);
    const EpisodeMetrics m = run_episode(avoidance, recovery, spec, config, Rng::derive(seed, e));
    all.push_back(m);
    csv.row({csv_format(static_cast<std::int64_t>(e)), plane_name(m.plane), csv_format(m.angle),
             csv_format(m.reaction_time), m.avoided ? "1" : "0", m.recovered ? "1" : "0",
             m.failed ? "1" : "0", csv_format(m.max_joint_power),
             csv_format(m.avoidance_distance), csv_format(m.mean_action_variance),
             config.ablations.to_string()});
  }
  csv.flush();

  const AggregateMetrics agg = aggregate(all);
  std::cout << "episodes: " << agg.episodes << "\n"
            << "asr: " << csv_format(agg.asr) << "\n"
            << "rsr: " << csv_format(agg.rsr) << "\n"
            << "mjp_w: " << csv_format(agg.mean_mjp) << "\n"
            << "amd_m: " << csv_format(agg.mean_amd) << "\n"
            << "gdi: " << csv_format(agg.gdi) << "\n"
            << "region: " << region_name(classify_region(agg.asr, agg.mean_mjp)) << "\n"
            << "failures: " << agg.failures << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& avoidance_path, const std::string& recovery_path,
              const std::string& plane_name_str, int angles, const std::string& t_react_grid,
              int episodes_per_cell, std::uint64_t seed, const std::string& out_dir) {
  Config config = load_merged_config(config_path, overrides);
  const Plane plane = parse_plane(plane_name_str);
  const GridSpec grid = parse_grid(t_react_grid);

  const auto [avoid_params, avoid_kind] = checkpoint_load(avoidance_path);
  if (avoid_kind != PolicyKind::kAvoidance) {
    throw InvalidInput("--avoidance checkpoint holds a recovery policy");
  }
  const Controller avoidance = make_policy_controller(avoid_params);

  std::optional<PolicyParams> recovery_params;
  Controller recovery_controller;
  const Controller* recovery = nullptr;
  if (!recovery_path.empty() && !config.ablations.no_recovery) {
    auto [params, kind] = checkpoint_load(recovery_path);
    if (kind != PolicyKind::kRecovery) {
      throw InvalidInput("--recovery checkpoint holds an avoidance policy");
    }
    recovery_params = std::move(params);
    recovery_controller = make_policy_controller(*recovery_params);
    recovery = &recovery_controller;
  }

  const std::vector<double> angle_grid = linspace(0.0, 3.14159265358979323846, angles);
  const std::vector<double> t_grid = linspace(grid.lo, grid.hi, grid.steps);

  const SweepResult result = sweep(avoidance, recovery, plane, angle_grid, t_grid,
                                   episodes_per_cell, config, seed);

  std::filesystem::create_directories(out_dir);
  const auto csv_path =
      std::filesystem::path(out_dir) / ("sweep_" + plane_name_str + ".csv");
  write_sweep_csv(result, csv_path);

  int failures = 0;
  for (const auto& cell : result.cells) failures += cell.metrics.failures;
  std::cout << "cells: " << result.cells.size() << "\n"
            << "csv: " << csv_path.string() << "\n"
            << "ablation: " << config.ablations.to_string() << "\n"
            << "failures: " << failures << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"reflexive evasion for a reduced-order quadruped"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "rebot_out";
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "YAML config file");
    if (config_required) opt->required();
    cmd->add_option("--set", overrides, "config override, section.key=value")->take_all();
    cmd->add_option("--out", out_dir, "output directory");
  };

  // train
  auto* train_cmd = app.add_subcommand("train", "train a policy with PPO");
  std::string policy = "avoidance", resume;
  std::uint64_t seed = 0;
  std::vector<std::string> ablate;
  add_common(train_cmd, true);
  train_cmd->add_option("--policy", policy, "avoidance or recovery")
      ->check(CLI::IsMember({"avoidance", "recovery"}))
      ->required();
  train_cmd->add_option("--seed", seed, "RNG seed")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to resume from");
  train_cmd->add_option("--ablate", ablate,
                        "ablation switch (no-recovery, no-curriculum, no-adaptive)")
      ->take_all();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "aggregate metrics over random scenarios");
  std::string avoidance_path, recovery_path, t_react = "0.1:4.0";
  int episodes = 100;
  add_common(eval_cmd, false);
  eval_cmd->add_option("--avoidance", avoidance_path, "avoidance checkpoint")->required();
  eval_cmd->add_option("--recovery", recovery_path, "recovery checkpoint");
  eval_cmd->add_option("--episodes", episodes, "episode count");
  eval_cmd->add_option("--t-react", t_react, "reaction-time range lo:hi");
  eval_cmd->add_option("--seed", seed, "RNG seed")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "direction x reaction-time grid");
  std::string plane = "xz", t_react_grid = "0.1:4.0:8";
  int angles = 5, episodes_per_cell = 10;
  add_common(sweep_cmd, false);
  sweep_cmd->add_option("--avoidance", avoidance_path, "avoidance checkpoint")->required();
  sweep_cmd->add_option("--recovery", recovery_path, "recovery checkpoint");
  sweep_cmd->add_option("--plane", plane, "xz, yz or xy")
      ->check(CLI::IsMember({"xz", "yz", "xy"}));
  sweep_cmd->add_option("--angles", angles, "angle grid size over the 180 degree arc");
  sweep_cmd->add_option("--t-react", t_react_grid, "reaction-time grid lo:hi:steps");
  sweep_cmd->add_option("--episodes-per-cell", episodes_per_cell, "episodes per grid cell");
  sweep_cmd->add_option("--seed", seed, "RNG seed")->required();

  // print-config
  auto* print_cmd = app.add_subcommand("print-config", "print the merged configuration");
  add_common(print_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage/message
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(config_path, overrides, policy, seed, resume, ablate, out_dir);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(config_path, overrides, avoidance_path, recovery_path, episodes, t_react,
                      seed, out_dir);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(config_path, overrides, avoidance_path, recovery_path, plane, angles,
                       t_react_grid, episodes_per_cell, seed, out_dir);
    }
    if (print_cmd->parsed()) {
      std::cout << config_to_yaml(load_merged_config(config_path, overrides));
      return 0;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
