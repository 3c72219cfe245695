#include "rebot/eval.hpp"

#include <cmath>

#include "rebot/errors.hpp"
#include "rebot/csv.hpp"

namespace rebot {

Controller make_policy_controller(const PolicyParams& params) {
  Controller c;
  c.act = [&params](const Eigen::VectorXd& obs, Rng&) {
    return actor_forward(params, obs).first;
  };
  c.action_variance = diversity_term(params.log_std);
  return c;
}

Controller make_random_controller(int action_dim) {
  Controller c;
  c.act = [action_dim](const Eigen::VectorXd&, Rng& rng) {
    Eigen::VectorXd a(action_dim);
    for (int i = 0; i < action_dim; ++i) a[i] = rng.normal();
    return a;
  };
  c.action_variance = 1.0;
  return c;
}

EpisodeMetrics run_episode(const Controller& avoidance, const Controller* recovery,
                           const ScenarioSpec& scenario, const Config& config,
                           std::uint64_t seed) {
  EpisodeMetrics metrics;
  metrics.reaction_time = scenario.t_react;
  metrics.plane = scenario.plane;
  metrics.angle = scenario.angle;
  metrics.mean_action_variance = avoidance.action_variance;

  EnvConfig env_cfg = config.env;
  env_cfg.policy_kind = PolicyKind::kAvoidance;
  env_cfg.curriculum_stage = CurriculumStage::kDynamic;
  env_cfg.observation_noise = config.eval.observation_noise;
  env_cfg.terminate_on_collision = false;  // collisions latch, the episode runs out
  env_cfg.randomize_commands = false;

  Env env(env_cfg, config.dynamics, config.rewards, seed);
  env.reset(scenario);

  Fsm fsm;
  const double control_dt = config.dynamics.dt * config.dynamics.decimation;
  const Eigen::Vector2d start_xy = env.episode().robot.base_position.head<2>();

  // recovered = stability is held (continuously, for the hold time) going
  // into the episode end.
  double stable_streak = 0.0;
  bool done = false;

  try {
    while (!done) {
      EpisodeState& ep = env.episode();
      const Stage stage = fsm.step(ep.robot, ep.obstacle, config.fsm, ep.sim_time);
      ep.stage = stage;

      Action act;
      if (stage == Stage::kAvoidance) {
        const Eigen::VectorXd obs = observe(ep, PolicyKind::kAvoidance, env_cfg, env.rng());
        const Eigen::VectorXd raw = avoidance.act(obs, env.rng());
        act = env.action_from_policy(raw);
        ep.prev_policy_action = raw.cwiseMax(-env_cfg.action_clip).cwiseMin(env_cfg.action_clip);
      } else if (stage == Stage::kRecovery && recovery != nullptr) {
        const Eigen::VectorXd obs = observe(ep, PolicyKind::kRecovery, env_cfg, env.rng());
        const Eigen::VectorXd raw = recovery->act(obs, env.rng());
        act = env.action_from_policy(raw);
        ep.prev_policy_action = raw.cwiseMax(-env_cfg.action_clip).cwiseMin(env_cfg.action_clip);
      } else {
        act = env.stance_action();
        ep.prev_policy_action = Eigen::VectorXd::Zero(kNumJoints);
      }

      RewardBreakdown reward;
      StepInfo info;
      env.step_action(act, reward, done, info);

      metrics.max_joint_power = std::max(metrics.max_joint_power, max_joint_power(env.episode().robot));

      if (!unstable(env.episode().robot, config.fsm)) {
        stable_streak += control_dt;
      } else {
        stable_streak = 0.0;
      }
    }
  } catch (const SimulationDiverged&) {
    metrics.failed = true;
    metrics.avoided = false;
    metrics.recovered = false;
    return metrics;
  }

  metrics.avoided = !env.episode().collided_ever;
  metrics.recovered = metrics.avoided && stable_streak >= config.fsm.recovery_hold_time;
  metrics.avoidance_distance =
      (env.episode().robot.base_position.head<2>() - start_xy).norm();
  return metrics;
}

AggregateMetrics aggregate(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) throw InvalidInput("aggregate: empty episode list");
  AggregateMetrics a;
  a.episodes = static_cast<int>(episodes.size());
  double mjp_sum = 0.0, amd_sum = 0.0, gdi_sum = 0.0;
  for (const auto& e : episodes) {
    if (e.avoided) ++a.n_avoid;
    if (e.recovered) ++a.n_recover;
    if (e.failed) ++a.failures;
    mjp_sum += e.max_joint_power;
    amd_sum += e.avoidance_distance;
    gdi_sum += e.mean_action_variance;
  }
  a.asr = static_cast<double>(a.n_avoid) / a.episodes;
  a.rsr = a.n_avoid > 0 ? static_cast<double>(a.n_recover) / a.n_avoid : 0.0;
  a.mean_mjp = mjp_sum / a.episodes;
  a.mean_amd = amd_sum / a.episodes;
  a.gdi = gdi_sum / a.episodes;
  return a;
}

const char* region_name(Region region) {
  switch (region) {
    case Region::kI: return "I";
    case Region::kII: return "II";
    case Region::kIII: return "III";
  }
  return "?";
}

Region classify_region(double asr, double mean_mjp) {
  if (asr <= 0.30) return Region::kI;
  return mean_mjp < 300.0 ? Region::kIII : Region::kII;
}

SweepResult sweep(const Controller& avoidance, const Controller* recovery, Plane plane,
                  const std::vector<double>& angles, const std::vector<double>& t_reacts,
                  int episodes_per_cell, const Config& config, std::uint64_t seed) {
  if (angles.empty() || t_reacts.empty() || episodes_per_cell < 1) {
    throw InvalidInput("sweep: grids must be non-empty and episodes_per_cell >= 1");
  }

  SweepResult result;
  result.cells.resize(angles.size() * t_reacts.size());

  const int cells = static_cast<int>(result.cells.size());
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < cells; ++c) {
    const std::size_t ai = static_cast<std::size_t>(c) / t_reacts.size();
    const std::size_t ti = static_cast<std::size_t>(c) % t_reacts.size();
    ScenarioSpec spec;
    spec.plane = plane;
    spec.angle = angles[ai];
    spec.t_react = t_reacts[ti];

    std::vector<EpisodeMetrics> episodes;
    episodes.reserve(episodes_per_cell);
    for (int e = 0; e < episodes_per_cell; ++e) {
      const std::uint64_t ep_seed =
          Rng::derive(seed, (static_cast<std::uint64_t>(c) << 20) + static_cast<std::uint64_t>(e));
      episodes.push_back(run_episode(avoidance, recovery, spec, config, ep_seed));
    }

    SweepCell& cell = result.cells[c];
    cell.plane = plane;
    cell.angle = spec.angle;
    cell.t_react = spec.t_react;
    cell.metrics = aggregate(episodes);
    cell.region = classify_region(cell.metrics.asr, cell.metrics.mean_mjp);
  }

  double mjp_min = result.cells.front().metrics.mean_mjp, mjp_max = mjp_min;
  double amd_min = result.cells.front().metrics.mean_amd, amd_max = amd_min;
  for (const auto& cell : result.cells) {
    mjp_min = std::min(mjp_min, cell.metrics.mean_mjp);
    mjp_max = std::max(mjp_max, cell.metrics.mean_mjp);
    amd_min = std::min(amd_min, cell.metrics.mean_amd);
    amd_max = std::max(amd_max, cell.metrics.mean_amd);
  }
  for (auto& cell : result.cells) {
    cell.mjp_norm =
        mjp_max > mjp_min ? (cell.metrics.mean_mjp - mjp_min) / (mjp_max - mjp_min) : 0.0;
    cell.amd_norm =
        amd_max > amd_min ? (cell.metrics.mean_amd - amd_min) / (amd_max - amd_min) : 0.0;
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  CsvWriter csv(path, {"plane", "angle_rad", "t_react_s", "episodes", "asr", "rsr", "mjp_w",
                       "mjp_norm", "amd_m", "amd_norm", "gdi", "region"});
  for (const auto& cell : result.cells) {
    csv.row({plane_name(cell.plane), csv_format(cell.angle), csv_format(cell.t_react),
             csv_format(static_cast<std::int64_t>(cell.metrics.episodes)),
             csv_format(cell.metrics.asr), csv_format(cell.metrics.rsr),
             csv_format(cell.metrics.mean_mjp), csv_format(cell.mjp_norm),
             csv_format(cell.metrics.mean_amd), csv_format(cell.amd_norm),
             csv_format(cell.metrics.gdi), region_name(cell.region)});
  }
  csv.flush();
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw InvalidInput("linspace: count must be >= 1");
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < count; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return v;
}

}  // namespace rebot
