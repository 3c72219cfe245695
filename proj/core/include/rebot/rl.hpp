#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "rebot/mlp.hpp"
#include "rebot/rng.hpp"

namespace rebot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// PPO hyperparameters. Defaults follow the training setup this project
/// reproduces; num_envs defaults to the desk-scale value.
struct PpoHyper {
  double clip = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  double learning_rate = 1e-3;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int steps_per_env = 24;
  int num_envs = 256;
  int epochs = 5;
  int minibatches = 4;
  double max_grad_norm = 1.0;
  double target_kl = 0.01;
  int max_iterations = 5000;

  double lr_min = 1e-5;
  double lr_max = 1e-2;
  /// Analytic objective bonus on the mean policy action variance. Set from
  /// the diversity reward weight by the trainer; 0 disables it.
  double diversity_coef = 0.0;
  std::vector<int> hidden_dims = {512, 256, 128};
  double log_std_init = 0.0;
  double log_std_min = -4.0;
  double log_std_max = 1.0;
};

/// Running observation statistics (Chan merge). Updated during rollout
/// collection only; frozen for evaluation.
struct RunningNorm {
  VectorXd mean;
  VectorXd var;
  double count = 1e-4;

  explicit RunningNorm(int dim = 0)
      : mean(VectorXd::Zero(dim)), var(VectorXd::Ones(dim)) {}

  void update(const MatrixXd& samples);  // one sample per column
  VectorXd normalize(const VectorXd& x) const;
  MatrixXd normalize(const MatrixXd& x) const;

  static constexpr double kClip = 10.0;
};

/// Actor and critic networks, the state-independent action log-std, and the
/// observation normalizer.
struct PolicyParams {
  Mlp actor;
  Mlp critic;
  VectorXd log_std;
  RunningNorm obs_norm;
  std::uint64_t update_count = 0;

  int obs_dim() const { return actor.input_dim(); }
  int action_dim() const { return actor.output_dim(); }

  static PolicyParams create(int obs_dim, int action_dim, const std::vector<int>& hidden_dims,
                             double log_std_init, Rng& rng);
};

/// (mean, log_std) of the Gaussian policy at `obs`. Normalization is applied
/// inside. Throws InvalidInput on dimension mismatch.
std::pair<VectorXd, VectorXd> actor_forward(const PolicyParams& params, const VectorXd& obs);

double critic_forward(const PolicyParams& params, const VectorXd& obs);

/// Draws action = mean + exp(log_std) * z, z ~ N(0, I), and returns the exact
/// diagonal-Gaussian log density of the draw.
std::pair<VectorXd, double> sample_action(const VectorXd& mean, const VectorXd& log_std, Rng& rng);

double gaussian_log_prob(const VectorXd& action, const VectorXd& mean, const VectorXd& log_std);

/// sum_i (log_std_i + 0.5 ln(2 pi e))
double gaussian_entropy(const VectorXd& log_std);

/// GAE over one trajectory. delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t;
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; returns = A + V.
/// Throws InvalidInput on length mismatch or empty input.
std::pair<VectorXd, VectorXd> compute_gae(const VectorXd& rewards, const VectorXd& values,
                                          const VectorXd& dones, double bootstrap_value,
                                          double gamma, double gae_lambda);

/// Flat rollout storage; slot (t, e) lives at column t * envs + e, so one
/// step's block of environments is contiguous. Observations are stored
/// already normalized.
struct RolloutBuffer {
  int steps = 0;
  int envs = 0;
  MatrixXd obs;
  MatrixXd actions;
  VectorXd log_probs;
  VectorXd values;
  VectorXd rewards;
  VectorXd dones;
  VectorXd bootstrap_values;  // one per env, value after the last step
  VectorXd advantages;
  VectorXd returns;

  void allocate(int steps_in, int envs_in, int obs_dim, int act_dim);
  int size() const { return steps * envs; }
  int index(int t, int e) const { return t * envs + e; }

  void compute_advantages(double gamma, double gae_lambda);
  void normalize_advantages();
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double diversity = 0.0;
};

struct PolicyGrads {
  Mlp::Grads actor;
  Mlp::Grads critic;
  VectorXd d_log_std;

  static PolicyGrads zeros_like(const PolicyParams& params);
  void set_zero();
  double global_norm() const;
  void scale(double factor);
};

/// A gathered minibatch. `obs` columns are normalized observations.
struct PpoBatch {
  MatrixXd obs;
  MatrixXd actions;
  VectorXd logp_old;
  VectorXd advantages;
  VectorXd returns;
  int size() const { return static_cast<int>(logp_old.size()); }
};

/// Full PPO loss: -min(ratio A, clip(ratio) A) + c1 (V - R)^2 - c2 H
/// - diversity_coef mean(sigma^2), averaged over the batch. Accumulates
/// analytic gradients into `grads` when non-null.
double ppo_loss_and_grad(const PolicyParams& params, const PpoBatch& batch, const PpoHyper& hyper,
                         PolicyGrads* grads, UpdateStats* stats);

/// KL-band learning-rate rule: shrink by 1.5 above 2x target, grow by 1.5
/// below 0.5x target, clamped to [lr_min, lr_max].
double adapt_learning_rate(double current_lr, double approx_kl, double target_kl,
                           double lr_min = 1e-5, double lr_max = 1e-2);

/// Canonical flat parameter order (actor W/b per layer, critic W/b, log_std);
/// the optimizer and checkpoint code share it.
std::vector<double*> parameter_pointers(PolicyParams& params);
std::vector<const double*> gradient_pointers(const PolicyGrads& grads);
std::size_t parameter_count(const PolicyParams& params);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(PolicyParams& params, const PolicyGrads& grads, double lr);

 private:
  double beta1_, beta2_, eps_;
  VectorXd m_, v_;
  long t_ = 0;
};

/// Optimizer state carried across iterations (Adam moments + adapted lr).
struct PpoState {
  explicit PpoState(double lr) : lr(lr) {}
  double lr;
  Adam adam;
};

/// One PPO iteration: `epochs` passes over `minibatches` shuffled minibatches,
/// gradient clipping, Adam steps, per-minibatch KL-adaptive learning rate.
/// Advantages must already be normalized. Throws TrainingDiverged on a
/// non-finite loss.
UpdateStats ppo_update(const RolloutBuffer& buffer, PolicyParams& params, const PpoHyper& hyper,
                       PpoState& opt, Rng& rng);

}  // namespace rebot
