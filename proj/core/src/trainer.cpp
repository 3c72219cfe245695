#include "rebot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "rebot/csv.hpp"
#include "rebot/errors.hpp"
#include "rebot/eval.hpp"

namespace rebot {

namespace {

struct EpisodeStats {
  double ret = 0.0;
  int length = 0;
  bool success = false;
  double obstacle_speed = 0.0;
};

// Success probe with the current (deterministic) policy on fresh scenarios.
// Avoidance: fraction of dynamic-obstacle episodes without collision.
// Recovery: fraction of perturbed starts that reach and hold stability.
double evaluation_probe(PolicyKind kind, const PolicyParams& params, const Config& config,
                        std::uint64_t seed, int episodes) {
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = Rng::derive(seed, e);
    if (kind == PolicyKind::kAvoidance) {
      Rng scen_rng(Rng::derive(ep_seed, 7));
      ScenarioSpec spec;
      spec.plane = static_cast<Plane>(scen_rng.uniform_index(3));
      spec.angle = scen_rng.uniform(0.0, 3.14159265358979323846);
      spec.t_react = config.env.reaction_time.sample(scen_rng);
      Controller controller = make_policy_controller(params);
      const EpisodeMetrics m = run_episode(controller, nullptr, spec, config, ep_seed);
      if (m.avoided) ++successes;
    } else {
      EnvConfig env_cfg = config.env;
      env_cfg.policy_kind = PolicyKind::kRecovery;
      env_cfg.observation_noise = false;
      Env env(env_cfg, config.dynamics, config.rewards, ep_seed);
      Eigen::VectorXd obs = env.reset();
      const double control_dt = config.dynamics.dt * config.dynamics.decimation;
      double stable_streak = 0.0;
      bool held = false;
      bool done = false;
      try {
        while (!done) {
          const Eigen::VectorXd action = actor_forward(params, obs).first;
          RewardBreakdown reward;
          StepInfo info;
          obs = env.step(action, reward, done, info);
          if (!unstable(env.episode().robot, config.fsm)) {
            stable_streak += control_dt;
            if (stable_streak >= config.fsm.recovery_hold_time) held = true;
          } else {
            stable_streak = 0.0;
          }
        }
      } catch (const SimulationDiverged&) {
        held = false;
      }
      if (held) ++successes;
    }
  }
  return static_cast<double>(successes) / std::max(episodes, 1);
}

std::vector<std::string> training_csv_header() {
  std::vector<std::string> h = {"iteration", "stage", "mean_return", "mean_episode_length",
                                "obstacle_speed_mean"};
  for (const auto& name : RewardBreakdown::term_names()) h.push_back("r_" + name);
  for (const char* name : {"policy_loss", "value_loss", "entropy", "approx_kl", "grad_norm",
                           "lr", "asr_rolling", "ablation"}) {
    h.emplace_back(name);
  }
  return h;
}

}  // namespace

Config ablation_flags(const Config& config) {
  Config out = config;
  if (out.ablations.no_adaptive) {
    out.rewards.w_diversity = 0.0;
    out.rewards.w_threat = 0.0;
    out.rewards.w_direction = 0.0;
  }
  if (out.ablations.no_curriculum) {
    out.env.curriculum_stage = CurriculumStage::kDynamic;
  }
  return out;
}

TrainResult train(PolicyKind kind, const Config& raw_config, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& resume,
                  const std::filesystem::path& out_dir, std::ostream* log) {
  const Config config = ablation_flags(raw_config);
  const PpoHyper& hyper = config.ppo;
  const int num_envs = hyper.num_envs;
  const int steps = hyper.steps_per_env;
  const int obs_dim = observation_dim(kind);

  if (num_envs < 1 || steps < 1) throw InvalidInput("train: num_envs and steps must be >= 1");

  std::filesystem::create_directories(out_dir);
  const std::string kind_name = policy_kind_name(kind);

  // --- policy ---
  Rng init_rng(Rng::derive(seed, 0));
  PolicyParams params = [&] {
    if (resume.has_value()) {
      auto [loaded, loaded_kind] = checkpoint_load(*resume);
      if (loaded_kind != kind) throw InvalidInput("train: resume checkpoint is for another policy");
      if (loaded.obs_dim() != obs_dim) throw InvalidInput("train: resume obs dim mismatch");
      return std::move(loaded);
    }
    return PolicyParams::create(obs_dim, kNumJoints, hyper.hidden_dims, hyper.log_std_init,
                                init_rng);
  }();

  PpoHyper live_hyper = hyper;
  live_hyper.diversity_coef =
      (kind == PolicyKind::kAvoidance) ? config.rewards.w_diversity : 0.0;

  // --- environments ---
  const bool use_stage1 = kind == PolicyKind::kAvoidance &&
                          config.env.curriculum_stage == CurriculumStage::kStatic;
  const int total_iters = hyper.max_iterations;
  const int stage1_iters =
      use_stage1 ? static_cast<int>(std::lround(config.curriculum.stage1_fraction * total_iters))
                 : 0;

  EnvConfig env_cfg = config.env;
  env_cfg.policy_kind = kind;
  if (kind == PolicyKind::kAvoidance) {
    env_cfg.curriculum_stage =
        use_stage1 ? CurriculumStage::kStatic : CurriculumStage::kDynamic;
  }

  std::vector<Env> envs;
  envs.reserve(num_envs);
  for (int e = 0; e < num_envs; ++e) {
    envs.emplace_back(env_cfg, config.dynamics, config.rewards, Rng::derive(seed, 1000 + e));
  }

  Eigen::MatrixXd raw_obs(obs_dim, num_envs);
  for (int e = 0; e < num_envs; ++e) raw_obs.col(e) = envs[e].reset();

  RolloutBuffer buffer;
  buffer.allocate(steps, num_envs, obs_dim, kNumJoints);

  Rng action_rng(Rng::derive(seed, 1));
  Rng update_rng(Rng::derive(seed, 2));
  PpoState opt(hyper.learning_rate);

  const std::filesystem::path csv_path = out_dir / ("train_" + kind_name + ".csv");
  CsvWriter csv(csv_path, training_csv_header());
  const std::string ablation_str = config.ablations.to_string();

  std::deque<EpisodeStats> recent_episodes;
  double probe_success = 0.0;
  Eigen::MatrixXd actions(kNumJoints, num_envs);
  std::vector<RewardBreakdown> breakdowns(num_envs);
  std::vector<double> env_returns(num_envs, 0.0);
  std::array<double, RewardBreakdown::kNumTerms> term_sums{};

  TrainResult result;
  result.csv_path = csv_path;

  auto save_checkpoint = [&](const std::string& tag) {
    const auto path = out_dir / (kind_name + "_" + tag + ".ckpt");
    checkpoint_save(params, kind, path);
    return path;
  };

  for (int iter = 0; iter < total_iters; ++iter) {
    // Stage switch for the avoidance curriculum.
    if (use_stage1 && iter == stage1_iters) {
      EnvConfig cfg = env_cfg;
      cfg.curriculum_stage = CurriculumStage::kDynamic;
      for (int e = 0; e < num_envs; ++e) {
        envs[e] = Env(cfg, config.dynamics, config.rewards, Rng::derive(seed, 2000 + e));
        raw_obs.col(e) = envs[e].reset();
        env_returns[e] = 0.0;
      }
      save_checkpoint("stage1");
      if (log) (*log) << "stage 2 begins at iteration " << iter << "\n";
    }
    const int stage_now =
        (kind == PolicyKind::kAvoidance && use_stage1 && iter < stage1_iters) ? 1 : 2;

    term_sums.fill(0.0);

    // --- rollout ---
    for (int t = 0; t < steps; ++t) {
      params.obs_norm.update(raw_obs);
      const Eigen::MatrixXd norm_obs = params.obs_norm.normalize(raw_obs);
      buffer.obs.middleCols(t * num_envs, num_envs) = norm_obs;

      const Eigen::MatrixXd mean = params.actor.forward(norm_obs);
      const Eigen::MatrixXd value = params.critic.forward(norm_obs);

      for (int e = 0; e < num_envs; ++e) {
        auto [action, logp] = sample_action(mean.col(e), params.log_std, action_rng);
        actions.col(e) = action;
        buffer.actions.col(buffer.index(t, e)) = action;
        buffer.log_probs[buffer.index(t, e)] = logp;
        buffer.values[buffer.index(t, e)] = value(0, e);
      }

      std::vector<StepInfo> infos(num_envs);
      std::vector<char> dones(num_envs, 0);
#pragma omp parallel for schedule(static)
      for (int e = 0; e < num_envs; ++e) {
        bool done = false;
        raw_obs.col(e) = envs[e].step(actions.col(e), breakdowns[e], done, infos[e]);
        dones[e] = done ? 1 : 0;
      }

      for (int e = 0; e < num_envs; ++e) {
        const int idx = buffer.index(t, e);
        buffer.rewards[idx] = breakdowns[e].total;
        buffer.dones[idx] = dones[e] ? 1.0 : 0.0;
        env_returns[e] += breakdowns[e].total;
        const auto values_e = breakdowns[e].term_values();
        for (int k = 0; k < RewardBreakdown::kNumTerms; ++k) term_sums[k] += values_e[k];

        if (dones[e]) {
          EpisodeStats stats;
          stats.length = envs[e].episode().step_count;
          stats.success = !envs[e].episode().collided_ever;
          stats.obstacle_speed = envs[e].episode().obstacle.velocity.norm();
          stats.ret = env_returns[e];
          recent_episodes.push_back(stats);
          if (recent_episodes.size() > 100) recent_episodes.pop_front();
          env_returns[e] = 0.0;
          raw_obs.col(e) = envs[e].reset();
        }
      }
    }

    // --- bootstrap + GAE ---
    {
      const Eigen::MatrixXd norm_obs = params.obs_norm.normalize(raw_obs);
      const Eigen::MatrixXd value = params.critic.forward(norm_obs);
      buffer.bootstrap_values = value.row(0).transpose();
    }
    buffer.compute_advantages(hyper.gamma, hyper.gae_lambda);
    buffer.normalize_advantages();

    UpdateStats stats;
    try {
      stats = ppo_update(buffer, params, live_hyper, opt, update_rng);
    } catch (const TrainingDiverged&) {
      save_checkpoint("diverged");
      throw;
    }

    // --- logging ---
    const double inv_samples = 1.0 / static_cast<double>(steps * num_envs);
    double mean_return = 0.0, mean_len = 0.0;
    if (!recent_episodes.empty()) {
      for (const auto& s : recent_episodes) {
        mean_return += s.ret;
        mean_len += s.length;
      }
      mean_return /= static_cast<double>(recent_episodes.size());
      mean_len /= static_cast<double>(recent_episodes.size());
    }
    double speed_mean = 0.0;
    for (const auto& env : envs) speed_mean += env.episode().obstacle.velocity.norm();
    speed_mean /= static_cast<double>(num_envs);

    if (config.curriculum.probe_interval > 0 &&
        (iter % config.curriculum.probe_interval == 0 || iter + 1 == total_iters)) {
      probe_success = evaluation_probe(kind, params, config,
                                       Rng::derive(seed, 3000 + iter), config.curriculum.probe_episodes);
    }

    std::vector<std::string> row;
    row.reserve(5 + RewardBreakdown::kNumTerms + 8);
    row.push_back(csv_format(static_cast<std::int64_t>(iter)));
    row.push_back(csv_format(static_cast<std::int64_t>(stage_now)));
    row.push_back(csv_format(mean_return));
    row.push_back(csv_format(mean_len));
    row.push_back(csv_format(speed_mean));
    for (int k = 0; k < RewardBreakdown::kNumTerms; ++k) {
      // The diversity slot reports the batch statistic from the update.
      const bool is_diversity = RewardBreakdown::term_names()[k] == "diversity";
      row.push_back(csv_format(is_diversity ? stats.diversity : term_sums[k] * inv_samples));
    }
    row.push_back(csv_format(stats.policy_loss));
    row.push_back(csv_format(stats.value_loss));
    row.push_back(csv_format(stats.entropy));
    row.push_back(csv_format(stats.approx_kl));
    row.push_back(csv_format(stats.grad_norm));
    row.push_back(csv_format(stats.lr));
    row.push_back(csv_format(probe_success));
    row.push_back(ablation_str);
    csv.row(row);

    if (log && (iter % 25 == 0 || iter + 1 == total_iters)) {
      (*log) << "iter " << iter << " stage " << stage_now << " return " << mean_return
             << " probe " << probe_success << " kl " << stats.approx_kl << " lr " << stats.lr
             << "\n";
      log->flush();
    }

    if (config.curriculum.checkpoint_interval > 0 && iter > 0 &&
        iter % config.curriculum.checkpoint_interval == 0) {
      save_checkpoint("iter" + std::to_string(iter));
    }
  }

  csv.flush();
  result.final_checkpoint = save_checkpoint("final");
  result.iterations = total_iters;
  result.final_probe_success = probe_success;
  return result;
}

}  // namespace rebot
