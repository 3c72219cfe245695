#include "rebot/rl.hpp"

#include <cmath>
#include <numeric>

#include "rebot/errors.hpp"

namespace rebot {

namespace {
constexpr double kLn2Pi = 1.8378770664093453;  // ln(2 pi)
}

void RunningNorm::update(const MatrixXd& samples) {
  const double n = static_cast<double>(samples.cols());
  if (n == 0.0) return;
  const VectorXd batch_mean = samples.rowwise().mean();
  const VectorXd batch_var =
      (samples.colwise() - batch_mean).array().square().rowwise().mean();
  const VectorXd delta = batch_mean - mean;
  const double total = count + n;
  mean += delta * (n / total);
  var = (var * count + batch_var * n +
         delta.array().square().matrix() * (count * n / total)) /
        total;
  var = var.cwiseMax(1e-12);
  count = total;
}

VectorXd RunningNorm::normalize(const VectorXd& x) const {
  return ((x - mean).array() / (var.array() + 1e-8).sqrt())
      .cwiseMax(-kClip)
      .cwiseMin(kClip)
      .matrix();
}

MatrixXd RunningNorm::normalize(const MatrixXd& x) const {
  const Eigen::ArrayXd scale = (var.array() + 1e-8).sqrt();
  return ((x.colwise() - mean).array().colwise() / scale)
      .cwiseMax(-kClip)
      .cwiseMin(kClip)
      .matrix();
}

PolicyParams PolicyParams::create(int obs_dim, int action_dim,
                                  const std::vector<int>& hidden_dims, double log_std_init,
                                  Rng& rng) {
  std::vector<int> actor_dims{obs_dim};
  actor_dims.insert(actor_dims.end(), hidden_dims.begin(), hidden_dims.end());
  actor_dims.push_back(action_dim);
  std::vector<int> critic_dims{obs_dim};
  critic_dims.insert(critic_dims.end(), hidden_dims.begin(), hidden_dims.end());
  critic_dims.push_back(1);

  PolicyParams params;
  const double hidden_gain = std::sqrt(2.0);
  params.actor = Mlp::orthogonal(actor_dims, hidden_gain, 0.01, rng);
  params.critic = Mlp::orthogonal(critic_dims, hidden_gain, 1.0, rng);
  params.log_std = VectorXd::Constant(action_dim, log_std_init);
  params.obs_norm = RunningNorm(obs_dim);
  return params;
}

std::pair<VectorXd, VectorXd> actor_forward(const PolicyParams& params, const VectorXd& obs) {
  if (obs.size() != params.obs_dim()) {
    throw InvalidInput("actor_forward: observation dimension mismatch");
  }
  return {params.actor.forward1(params.obs_norm.normalize(obs)), params.log_std};
}

double critic_forward(const PolicyParams& params, const VectorXd& obs) {
  if (obs.size() != params.obs_dim()) {
    throw InvalidInput("critic_forward: observation dimension mismatch");
  }
  return params.critic.forward1(params.obs_norm.normalize(obs))(0);
}

std::pair<VectorXd, double> sample_action(const VectorXd& mean, const VectorXd& log_std,
                                          Rng& rng) {
  VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const VectorXd action = mean + log_std.array().exp().matrix().cwiseProduct(z);
  return {action, gaussian_log_prob(action, mean, log_std)};
}

double gaussian_log_prob(const VectorXd& action, const VectorXd& mean, const VectorXd& log_std) {
  const Eigen::ArrayXd diff = (action - mean).array();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  const double quad = (diff.square() * inv_var).sum();
  return -0.5 * quad - log_std.sum() - 0.5 * kLn2Pi * static_cast<double>(mean.size());
}

double gaussian_entropy(const VectorXd& log_std) {
  return log_std.sum() + 0.5 * (kLn2Pi + 1.0) * static_cast<double>(log_std.size());
}

std::pair<VectorXd, VectorXd> compute_gae(const VectorXd& rewards, const VectorXd& values,
                                          const VectorXd& dones, double bootstrap_value,
                                          double gamma, double gae_lambda) {
  const Eigen::Index t_len = rewards.size();
  if (t_len < 1) throw InvalidInput("compute_gae: empty sequence");
  if (values.size() != t_len || dones.size() != t_len) {
    throw InvalidInput("compute_gae: sequence length mismatch");
  }
  VectorXd advantages(t_len);
  double carry = 0.0;
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const double not_done = 1.0 - dones[t];
    const double next_value = (t + 1 < t_len) ? values[t + 1] : bootstrap_value;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    carry = delta + gamma * gae_lambda * not_done * carry;
    advantages[t] = carry;
  }
  return {advantages, advantages + values};
}

void RolloutBuffer::allocate(int steps_in, int envs_in, int obs_dim, int act_dim) {
  steps = steps_in;
  envs = envs_in;
  obs.resize(obs_dim, steps * envs);
  actions.resize(act_dim, steps * envs);
  log_probs.resize(steps * envs);
  values.resize(steps * envs);
  rewards.resize(steps * envs);
  dones.resize(steps * envs);
  bootstrap_values.resize(envs);
  advantages.resize(steps * envs);
  returns.resize(steps * envs);
}

void RolloutBuffer::compute_advantages(double gamma, double gae_lambda) {
  VectorXd carry = VectorXd::Zero(envs);
  for (int t = steps - 1; t >= 0; --t) {
    const auto r = rewards.segment(t * envs, envs).array();
    const auto v = values.segment(t * envs, envs).array();
    const auto not_done = (1.0 - dones.segment(t * envs, envs).array()).eval();
    const auto next_v = (t + 1 < steps)
                            ? values.segment((t + 1) * envs, envs).array().eval()
                            : bootstrap_values.array().eval();
    const Eigen::ArrayXd delta = r + gamma * next_v * not_done - v;
    carry = (delta + gamma * gae_lambda * not_done * carry.array()).matrix();
    advantages.segment(t * envs, envs) = carry;
  }
  returns = advantages + values;
}

void RolloutBuffer::normalize_advantages() {
  const double mean = advantages.mean();
  const double variance = (advantages.array() - mean).square().mean();
  advantages = ((advantages.array() - mean) / (std::sqrt(variance) + 1e-8)).matrix();
}

PolicyGrads PolicyGrads::zeros_like(const PolicyParams& params) {
  PolicyGrads g;
  g.actor = Mlp::Grads::zeros_like(params.actor);
  g.critic = Mlp::Grads::zeros_like(params.critic);
  g.d_log_std = VectorXd::Zero(params.log_std.size());
  return g;
}

void PolicyGrads::set_zero() {
  actor.set_zero();
  critic.set_zero();
  d_log_std.setZero();
}

double PolicyGrads::global_norm() const {
  double sq = 0.0;
  for (const auto& m : actor.d_weights) sq += m.squaredNorm();
  for (const auto& v : actor.d_biases) sq += v.squaredNorm();
  for (const auto& m : critic.d_weights) sq += m.squaredNorm();
  for (const auto& v : critic.d_biases) sq += v.squaredNorm();
  sq += d_log_std.squaredNorm();
  return std::sqrt(sq);
}

void PolicyGrads::scale(double factor) {
  for (auto& m : actor.d_weights) m *= factor;
  for (auto& v : actor.d_biases) v *= factor;
  for (auto& m : critic.d_weights) m *= factor;
  for (auto& v : critic.d_biases) v *= factor;
  d_log_std *= factor;
}

double ppo_loss_and_grad(const PolicyParams& params, const PpoBatch& batch, const PpoHyper& hyper,
                         PolicyGrads* grads, UpdateStats* stats) {
  const int n = batch.size();
  if (n == 0) throw InvalidInput("ppo_loss_and_grad: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const int act_dim = params.action_dim();

  Mlp::Cache actor_cache, critic_cache;
  const MatrixXd mean = params.actor.forward(batch.obs, grads ? &actor_cache : nullptr);
  const MatrixXd value_row = params.critic.forward(batch.obs, grads ? &critic_cache : nullptr);

  const Eigen::ArrayXd inv_var = (-2.0 * params.log_std.array()).exp();
  const MatrixXd diff = batch.actions - mean;
  const Eigen::ArrayXXd diff_sq = diff.array().square();

  VectorXd logp_new(n);
  {
    const Eigen::RowVectorXd quad =
        (diff_sq.colwise() * inv_var).colwise().sum().matrix();
    const double log_norm =
        params.log_std.sum() + 0.5 * kLn2Pi * static_cast<double>(act_dim);
    logp_new = (-0.5 * quad.transpose().array() - log_norm).matrix();
  }

  const Eigen::ArrayXd ratio = (logp_new - batch.logp_old).array().exp();
  const Eigen::ArrayXd adv = batch.advantages.array();
  const Eigen::ArrayXd surr_unclipped = ratio * adv;
  const Eigen::ArrayXd surr_clipped =
      ratio.cwiseMax(1.0 - hyper.clip).cwiseMin(1.0 + hyper.clip) * adv;
  const double policy_loss = -surr_unclipped.min(surr_clipped).mean();

  const Eigen::ArrayXd value_err = value_row.row(0).transpose().array() - batch.returns.array();
  const double value_loss = value_err.square().mean();

  const double entropy = gaussian_entropy(params.log_std);
  const double diversity = (2.0 * params.log_std.array()).exp().mean();

  const double loss = policy_loss + hyper.value_coef * value_loss - hyper.entropy_coef * entropy -
                      hyper.diversity_coef * diversity;

  if (stats) {
    stats->policy_loss = policy_loss;
    stats->value_loss = value_loss;
    stats->entropy = entropy;
    stats->diversity = diversity;
    stats->approx_kl = (batch.logp_old - logp_new).mean();
  }

  if (grads) {
    grads->set_zero();

    // Surrogate: gradient flows only where the unclipped branch is selected;
    // when the clipped branch wins, ratio is outside the band and clip() has
    // zero derivative there.
    const Eigen::ArrayXd selected =
        (surr_unclipped <= surr_clipped).cast<double>();
    const Eigen::ArrayXd d_logp = -inv_n * selected * ratio * adv;

    // d logp / d mean_j = diff_j / sigma_j^2
    MatrixXd d_mean =
        ((diff.array().colwise() * inv_var).rowwise() * d_logp.transpose()).matrix();
    params.actor.backward(actor_cache, d_mean, grads->actor);

    // d logp / d log_std_j = diff_j^2 / sigma_j^2 - 1, plus the analytic
    // entropy and diversity bonuses.
    Eigen::ArrayXd d_log_std =
        ((diff_sq.colwise() * inv_var).matrix() *
         d_logp.matrix())
            .array() -
        d_logp.sum();
    d_log_std += -hyper.entropy_coef * Eigen::ArrayXd::Ones(act_dim);
    d_log_std += -hyper.diversity_coef * 2.0 * (2.0 * params.log_std.array()).exp() /
                 static_cast<double>(act_dim);
    grads->d_log_std = d_log_std.matrix();

    MatrixXd d_value(1, n);
    d_value.row(0) = (2.0 * hyper.value_coef * inv_n * value_err).matrix().transpose();
    params.critic.backward(critic_cache, d_value, grads->critic);
  }
  return loss;
}

double adapt_learning_rate(double current_lr, double approx_kl, double target_kl, double lr_min,
                           double lr_max) {
  if (!(current_lr > 0.0)) throw InvalidInput("adapt_learning_rate: lr must be > 0");
  double lr = current_lr;
  if (approx_kl > 2.0 * target_kl) {
    lr /= 1.5;
  } else if (approx_kl < 0.5 * target_kl) {
    lr *= 1.5;
  }
  return std::clamp(lr, lr_min, lr_max);
}

std::vector<double*> parameter_pointers(PolicyParams& params) {
  std::vector<double*> ptrs;
  auto add_mlp = [&ptrs](Mlp& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      ptrs.push_back(net.weights[l].data());
      ptrs.push_back(net.biases[l].data());
    }
  };
  add_mlp(params.actor);
  add_mlp(params.critic);
  ptrs.push_back(params.log_std.data());
  return ptrs;
}

namespace {

// Sizes aligned with parameter_pointers order.
std::vector<std::size_t> parameter_sizes(const PolicyParams& params) {
  std::vector<std::size_t> sizes;
  auto add_mlp = [&sizes](const Mlp& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      sizes.push_back(static_cast<std::size_t>(net.weights[l].size()));
      sizes.push_back(static_cast<std::size_t>(net.biases[l].size()));
    }
  };
  add_mlp(params.actor);
  add_mlp(params.critic);
  sizes.push_back(static_cast<std::size_t>(params.log_std.size()));
  return sizes;
}

}  // namespace

std::vector<const double*> gradient_pointers(const PolicyGrads& grads) {
  std::vector<const double*> ptrs;
  auto add = [&ptrs](const Mlp::Grads& g) {
    for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
      ptrs.push_back(g.d_weights[l].data());
      ptrs.push_back(g.d_biases[l].data());
    }
  };
  add(grads.actor);
  add(grads.critic);
  ptrs.push_back(grads.d_log_std.data());
  return ptrs;
}

std::size_t parameter_count(const PolicyParams& params) {
  const auto sizes = parameter_sizes(params);
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

void Adam::step(PolicyParams& params, const PolicyGrads& grads, double lr) {
  const std::size_t total = parameter_count(params);
  if (m_.size() != static_cast<Eigen::Index>(total)) {
    m_ = VectorXd::Zero(total);
    v_ = VectorXd::Zero(total);
    t_ = 0;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  const auto param_ptrs = parameter_pointers(params);
  const auto grad_ptrs = gradient_pointers(grads);
  const auto sizes = parameter_sizes(params);

  std::size_t offset = 0;
  for (std::size_t block = 0; block < param_ptrs.size(); ++block) {
    double* p = param_ptrs[block];
    const double* g = grad_ptrs[block];
    for (std::size_t i = 0; i < sizes[block]; ++i) {
      double& m = m_[offset + i];
      double& v = v_[offset + i];
      m = beta1_ * m + (1.0 - beta1_) * g[i];
      v = beta2_ * v + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
    }
    offset += sizes[block];
  }
}

UpdateStats ppo_update(const RolloutBuffer& buffer, PolicyParams& params, const PpoHyper& hyper,
                       PpoState& opt, Rng& rng) {
  const int n = buffer.size();
  const int mb_count = hyper.minibatches;
  const int mb_size = n / mb_count;
  if (mb_size == 0) throw InvalidInput("ppo_update: batch smaller than minibatch count");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  PolicyGrads grads = PolicyGrads::zeros_like(params);
  UpdateStats accum;
  int updates = 0;

  const int obs_dim = params.obs_dim();
  const int act_dim = params.action_dim();
  PpoBatch batch;
  batch.obs.resize(obs_dim, mb_size);
  batch.actions.resize(act_dim, mb_size);
  batch.logp_old.resize(mb_size);
  batch.advantages.resize(mb_size);
  batch.returns.resize(mb_size);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (int mb = 0; mb < mb_count; ++mb) {
      for (int i = 0; i < mb_size; ++i) {
        const int src = order[mb * mb_size + i];
        batch.obs.col(i) = buffer.obs.col(src);
        batch.actions.col(i) = buffer.actions.col(src);
        batch.logp_old[i] = buffer.log_probs[src];
        batch.advantages[i] = buffer.advantages[src];
        batch.returns[i] = buffer.returns[src];
      }

      UpdateStats mb_stats;
      const double loss = ppo_loss_and_grad(params, batch, hyper, &grads, &mb_stats);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("ppo_update: non-finite loss",
                               static_cast<long>(params.update_count));
      }

      const double norm = grads.global_norm();
      if (norm > hyper.max_grad_norm && norm > 0.0) {
        grads.scale(hyper.max_grad_norm / norm);
      }
      opt.adam.step(params, grads, opt.lr);
      params.log_std = params.log_std.cwiseMax(hyper.log_std_min).cwiseMin(hyper.log_std_max);

      opt.lr = adapt_learning_rate(opt.lr, mb_stats.approx_kl, hyper.target_kl, hyper.lr_min,
                                   hyper.lr_max);

      accum.policy_loss += mb_stats.policy_loss;
      accum.value_loss += mb_stats.value_loss;
      accum.entropy += mb_stats.entropy;
      accum.approx_kl += mb_stats.approx_kl;
      accum.grad_norm += norm;
      accum.diversity += mb_stats.diversity;
      ++updates;
    }
  }

  params.update_count += 1;
  const double inv = 1.0 / static_cast<double>(updates);
  accum.policy_loss *= inv;
  accum.value_loss *= inv;
  accum.entropy *= inv;
  accum.approx_kl *= inv;
  accum.grad_norm *= inv;
  accum.diversity *= inv;
  accum.lr = opt.lr;
  return accum;
}

}  // namespace rebot
