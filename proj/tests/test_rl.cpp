#include <doctest.h>

#include <cmath>

#include "rebot/errors.hpp"
#include "rebot/rl.hpp"
#include "support/gae_oracle.hpp"

using namespace rebot;

namespace {

PolicyParams tiny_params(Rng& rng, int obs = 4, int act = 2) {
  return PolicyParams::create(obs, act, {8}, 0.0, rng);
}

PpoBatch random_batch(const PolicyParams& params, int n, Rng& rng) {
  PpoBatch b;
  const int obs_dim = params.obs_dim();
  const int act_dim = params.action_dim();
  b.obs.resize(obs_dim, n);
  b.actions.resize(act_dim, n);
  b.logp_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < obs_dim; ++j) b.obs(j, i) = rng.normal();
    for (int j = 0; j < act_dim; ++j) b.actions(j, i) = rng.normal();
    b.logp_old[i] = rng.normal() - 2.0;
    b.advantages[i] = rng.normal();
    b.returns[i] = rng.normal();
  }
  return b;
}

// Central finite differences over every parameter.
double max_relative_grad_error(PolicyParams& params, const PpoBatch& batch,
                               const PpoHyper& hyper) {
  PolicyGrads grads = PolicyGrads::zeros_like(params);
  ppo_loss_and_grad(params, batch, hyper, &grads, nullptr);

  const auto param_ptrs = parameter_pointers(params);
  const auto grad_ptrs = gradient_pointers(grads);

  // Sizes per block, mirrored from the canonical order.
  std::vector<std::size_t> sizes;
  for (std::size_t l = 0; l < params.actor.weights.size(); ++l) {
    sizes.push_back(params.actor.weights[l].size());
    sizes.push_back(params.actor.biases[l].size());
  }
  for (std::size_t l = 0; l < params.critic.weights.size(); ++l) {
    sizes.push_back(params.critic.weights[l].size());
    sizes.push_back(params.critic.biases[l].size());
  }
  sizes.push_back(params.log_std.size());

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t blk = 0; blk < param_ptrs.size(); ++blk) {
    for (std::size_t i = 0; i < sizes[blk]; ++i) {
      double& p = param_ptrs[blk][i];
      const double saved = p;
      p = saved + h;
      const double up = ppo_loss_and_grad(params, batch, hyper, nullptr, nullptr);
      p = saved - h;
      const double down = ppo_loss_and_grad(params, batch, hyper, nullptr, nullptr);
      p = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grad_ptrs[blk][i];
      const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic) / scale);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("zero network maps every observation to zero") {
  Rng rng(1);
  PolicyParams params = tiny_params(rng);
  for (auto& w : params.actor.weights) w.setZero();
  for (auto& b : params.actor.biases) b.setZero();
  const auto [mean, log_std] = actor_forward(params, VectorXd::Constant(4, 1.3));
  CHECK(mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(log_std.size() == 2);
}

TEST_CASE("elu closed form at -1") {
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
  CHECK(elu(-1.0) == doctest::Approx(-0.63212).epsilon(1e-4));
  CHECK(elu(0.5) == 0.5);
}

TEST_CASE("single identity layer reproduces the normalized observation") {
  Rng rng(2);
  PolicyParams params = PolicyParams::create(3, 3, {}, 0.0, rng);  // one linear layer
  params.actor.weights[0] = Eigen::MatrixXd::Identity(3, 3);
  params.actor.biases[0].setZero();
  const VectorXd obs = (VectorXd(3) << 0.5, -1.0, 2.0).finished();
  const auto [mean, log_std] = actor_forward(params, obs);
  CHECK((mean - params.obs_norm.normalize(obs)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("actor_forward validates the observation dimension") {
  Rng rng(3);
  PolicyParams params = tiny_params(rng);
  CHECK_THROWS_AS(actor_forward(params, VectorXd::Zero(5)), InvalidInput);
  CHECK_THROWS_AS(critic_forward(params, VectorXd::Zero(3)), InvalidInput);
}

TEST_CASE("critic is deterministic and batch equals per-sample evaluation") {
  Rng rng(4);
  PolicyParams params = tiny_params(rng, 6, 2);
  Eigen::MatrixXd obs(6, 32);
  for (int i = 0; i < obs.size(); ++i) obs(i / 32, i % 32) = rng.normal();

  const double v0 = critic_forward(params, obs.col(0));
  CHECK(v0 == critic_forward(params, obs.col(0)));

  const Eigen::MatrixXd norm = params.obs_norm.normalize(obs);
  const Eigen::MatrixXd batch = params.critic.forward(norm);
  for (int i = 0; i < 32; ++i) {
    CHECK(std::abs(batch(0, i) - critic_forward(params, obs.col(i))) <= 1e-6);
  }
}

TEST_CASE("sample_action collapses to the mean in the small-sigma limit") {
  Rng rng(5);
  const VectorXd mean = VectorXd::Constant(12, 0.7);
  const VectorXd log_std = VectorXd::Constant(12, -20.0);
  const auto [action, logp] = sample_action(mean, log_std, rng);
  CHECK((action - mean).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("log density of the mean with unit sigma in 12 dims") {
  const VectorXd mean = VectorXd::Zero(12);
  const VectorXd log_std = VectorXd::Zero(12);
  const double logp = gaussian_log_prob(mean, mean, log_std);
  CHECK(logp == doctest::Approx(-6.0 * std::log(2.0 * M_PI)).epsilon(1e-12));
  CHECK(logp == doctest::Approx(-11.0273).epsilon(1e-4));
}

TEST_CASE("sampled variance matches exp(log_std)^2 within 5 percent") {
  Rng rng(6);
  const VectorXd mean = VectorXd::Zero(2);
  VectorXd log_std(2);
  log_std << std::log(0.5), std::log(2.0);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(2), sum_sq = Eigen::ArrayXd::Zero(2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto [a, logp] = sample_action(mean, log_std, rng);
    sum += a.array();
    sum_sq += a.array().square();
  }
  const Eigen::ArrayXd var = sum_sq / n - (sum / n).square();
  CHECK(var[0] == doctest::Approx(0.25).epsilon(0.05));
  CHECK(var[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("gae single terminal step") {
  VectorXd r(1), v(1), d(1);
  r << 1.0;
  v << 0.0;
  d << 1.0;
  const auto [adv, ret] = compute_gae(r, v, d, 123.0, 0.99, 0.95);
  CHECK(adv[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ret[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gae two-step hand recursion") {
  VectorXd r(2), v(2), d(2);
  r << 0.0, 1.0;
  v << 0.0, 0.0;
  d << 0.0, 0.0;
  const auto [adv, ret] = compute_gae(r, v, d, 0.0, 0.99, 0.95);
  // delta1 = r1 + gamma * bootstrap - V1 = 1; A1 = delta1.
  CHECK(adv[1] == doctest::Approx(1.0).epsilon(1e-12));
  // delta0 = 0, so A0 = gamma * lambda * A1 = 0.9405; frozen from the
  // brute-force oracle.
  CHECK(adv[0] == doctest::Approx(0.99 * 0.95).epsilon(1e-12));
  CHECK(adv[0] ==
        doctest::Approx(rebot::testing::oracle_gae(r, v, d, 0.0, 0.99, 0.95)[0]).epsilon(1e-12));
}

TEST_CASE("gae matches the brute-force oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int t_len = 1 + static_cast<int>(rng.uniform_index(64));
    VectorXd r(t_len), v(t_len), d(t_len);
    for (int t = 0; t < t_len; ++t) {
      r[t] = rng.normal();
      v[t] = rng.normal();
      d[t] = rng.uniform() < 0.15 ? 1.0 : 0.0;
    }
    const double bootstrap = rng.normal();
    const auto [adv, ret] = compute_gae(r, v, d, bootstrap, 0.99, 0.95);
    const VectorXd oracle = rebot::testing::oracle_gae(r, v, d, bootstrap, 0.99, 0.95);
    CHECK((adv - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((ret - (oracle + v)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("gae reduces to one-step TD at lambda 0 and to discounted returns at lambda 1") {
  Rng rng(8);
  const int t_len = 40;
  VectorXd r(t_len), v(t_len), d(t_len);
  for (int t = 0; t < t_len; ++t) {
    r[t] = rng.normal();
    v[t] = rng.normal();
    d[t] = rng.uniform() < 0.1 ? 1.0 : 0.0;
  }
  const double bootstrap = rng.normal();

  const auto [adv0, ret0] = compute_gae(r, v, d, bootstrap, 0.99, 0.0);
  for (int t = 0; t < t_len; ++t) {
    const double next_v = (t + 1 < t_len) ? v[t + 1] : bootstrap;
    const double td = r[t] + 0.99 * next_v * (1.0 - d[t]) - v[t];
    CHECK(std::abs(adv0[t] - td) <= 1e-10);
  }

  const auto [adv1, ret1] = compute_gae(r, VectorXd::Zero(t_len), d, 0.0, 0.99, 1.0);
  for (int t = 0; t < t_len; ++t) {
    double expectation = 0.0, coeff = 1.0;
    for (int k = t; k < t_len; ++k) {
      expectation += coeff * r[k];
      if (d[k] > 0.5) break;
      coeff *= 0.99;
    }
    CHECK(std::abs(ret1[t] - expectation) <= 1e-10);
  }
}

TEST_CASE("gae rejects mismatched lengths") {
  CHECK_THROWS_AS(compute_gae(VectorXd::Zero(3), VectorXd::Zero(2), VectorXd::Zero(3), 0.0,
                              0.99, 0.95),
                  InvalidInput);
  CHECK_THROWS_AS(compute_gae(VectorXd(), VectorXd(), VectorXd(), 0.0, 0.99, 0.95), InvalidInput);
}

TEST_CASE("ratio one makes clipped and unclipped objectives coincide") {
  Rng rng(9);
  PolicyParams params = tiny_params(rng);
  PpoHyper hyper;
  PpoBatch batch = random_batch(params, 16, rng);
  // Recompute logp_old from the current params: first-pass condition.
  for (int i = 0; i < batch.size(); ++i) {
    const VectorXd mean = params.actor.forward1(batch.obs.col(i));
    batch.logp_old[i] = gaussian_log_prob(batch.actions.col(i), mean, params.log_std);
  }

  UpdateStats stats;
  PolicyGrads grads = PolicyGrads::zeros_like(params);
  ppo_loss_and_grad(params, batch, hyper, &grads, &stats);
  CHECK(std::abs(stats.approx_kl) <= 1e-12);

  // The surrogate gradient equals the vanilla policy gradient at ratio 1:
  // compare with an unclipped-loss finite difference via a huge clip value.
  PpoHyper vanilla = hyper;
  vanilla.clip = 1e9;
  PolicyGrads grads_vanilla = PolicyGrads::zeros_like(params);
  ppo_loss_and_grad(params, batch, vanilla, &grads_vanilla, nullptr);
  for (std::size_t l = 0; l < grads.actor.d_weights.size(); ++l) {
    CHECK((grads.actor.d_weights[l] - grads_vanilla.actor.d_weights[l]).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("clip branch wins for ratio 1.5 with positive advantage") {
  // Scalar check of the per-sample objective: min(rho*A, clip(rho)*A).
  const double rho = 1.5, adv = 2.0, clip = 0.2;
  const double unclipped = rho * adv;
  const double clipped = std::clamp(rho, 1.0 - clip, 1.0 + clip) * adv;
  CHECK(clipped == doctest::Approx(1.2 * adv));
  CHECK(std::min(unclipped, clipped) == clipped);
}

TEST_CASE("analytic gradient matches finite differences on a toy network") {
  Rng rng(10);
  PpoHyper hyper;
  for (int trial = 0; trial < 5; ++trial) {
    PolicyParams params = tiny_params(rng);
    PpoBatch batch = random_batch(params, 24, rng);
    CHECK(max_relative_grad_error(params, batch, hyper) <= 1e-4);
  }
}

TEST_CASE("gradient check also covers the entropy and diversity terms") {
  Rng rng(11);
  PpoHyper hyper;
  hyper.diversity_coef = 0.1;
  hyper.entropy_coef = 0.02;
  PolicyParams params = tiny_params(rng);
  PpoBatch batch = random_batch(params, 24, rng);
  CHECK(max_relative_grad_error(params, batch, hyper) <= 1e-4);
}

TEST_CASE("ppo_update is bit-deterministic") {
  Rng rng(12);
  PolicyParams a = tiny_params(rng);
  PolicyParams b = a;

  RolloutBuffer buffer;
  buffer.allocate(8, 4, 4, 2);
  Rng fill(13);
  for (int i = 0; i < buffer.size(); ++i) {
    for (int j = 0; j < 4; ++j) buffer.obs(j, i) = fill.normal();
    for (int j = 0; j < 2; ++j) buffer.actions(j, i) = fill.normal();
    buffer.log_probs[i] = fill.normal();
    buffer.values[i] = fill.normal();
    buffer.rewards[i] = fill.normal();
    buffer.dones[i] = fill.uniform() < 0.1 ? 1.0 : 0.0;
  }
  buffer.bootstrap_values = VectorXd::Zero(4);
  buffer.compute_advantages(0.99, 0.95);
  buffer.normalize_advantages();

  PpoHyper hyper;
  hyper.epochs = 3;
  hyper.minibatches = 2;

  PpoState opt_a(hyper.learning_rate), opt_b(hyper.learning_rate);
  Rng rng_a(99), rng_b(99);
  ppo_update(buffer, a, hyper, opt_a, rng_a);
  ppo_update(buffer, b, hyper, opt_b, rng_b);

  for (std::size_t l = 0; l < a.actor.weights.size(); ++l) {
    CHECK(a.actor.weights[l] == b.actor.weights[l]);
  }
  CHECK(a.log_std == b.log_std);
  CHECK(a.update_count == 1);
}

TEST_CASE("gradient clipping bounds the post-clip global norm") {
  Rng rng(14);
  PolicyParams params = tiny_params(rng);
  PpoHyper hyper;
  PpoBatch batch = random_batch(params, 32, rng);
  batch.advantages *= 1e4;  // force a large gradient

  PolicyGrads grads = PolicyGrads::zeros_like(params);
  ppo_loss_and_grad(params, batch, hyper, &grads, nullptr);
  const double norm = grads.global_norm();
  CHECK(norm > hyper.max_grad_norm);
  grads.scale(hyper.max_grad_norm / norm);
  CHECK(grads.global_norm() <= hyper.max_grad_norm + 1e-9);
}

TEST_CASE("advantage normalization yields zero mean unit variance") {
  RolloutBuffer buffer;
  buffer.allocate(16, 8, 2, 2);
  Rng rng(15);
  for (int i = 0; i < buffer.size(); ++i) {
    buffer.rewards[i] = rng.normal() * 3 + 1;
    buffer.values[i] = rng.normal();
    buffer.dones[i] = 0.0;
  }
  buffer.bootstrap_values = VectorXd::Zero(8);
  buffer.compute_advantages(0.99, 0.95);
  buffer.normalize_advantages();
  CHECK(std::abs(buffer.advantages.mean()) <= 1e-9);
  const double var = (buffer.advantages.array() - buffer.advantages.mean()).square().mean();
  CHECK(std::abs(var - 1.0) <= 1e-6);
}

TEST_CASE("gaussian entropy analytic form and non-negativity threshold") {
  VectorXd log_std = VectorXd::Zero(12);
  CHECK(gaussian_entropy(log_std) ==
        doctest::Approx(12.0 * 0.5 * std::log(2.0 * M_PI * std::exp(1.0))).epsilon(1e-12));

  // sigma_i >= (2 pi e)^(-1/2) makes every per-dimension term non-negative.
  const double sigma_floor = 1.0 / std::sqrt(2.0 * M_PI * std::exp(1.0));
  VectorXd at_floor = VectorXd::Constant(12, std::log(sigma_floor));
  CHECK(gaussian_entropy(at_floor) >= -1e-12);
}

TEST_CASE("kl-band learning rate rule") {
  CHECK(adapt_learning_rate(1e-3, 0.03, 0.01) == doctest::Approx(1e-3 / 1.5).epsilon(1e-12));
  CHECK(adapt_learning_rate(1e-3, 0.03, 0.01) == doctest::Approx(6.67e-4).epsilon(1e-2));
  CHECK(adapt_learning_rate(1e-3, 0.01, 0.01) == 1e-3);
  double lr = 5e-3;
  for (int i = 0; i < 10; ++i) lr = adapt_learning_rate(lr, 0.001, 0.01);
  CHECK(lr == doctest::Approx(1e-2));
  lr = 2e-5;
  for (int i = 0; i < 10; ++i) lr = adapt_learning_rate(lr, 0.5, 0.01);
  CHECK(lr == doctest::Approx(1e-5));
}

TEST_CASE("running norm keeps variance positive and respects the clip") {
  RunningNorm norm(3);
  Eigen::MatrixXd samples(3, 50);
  samples.setConstant(2.0);  // zero-variance batch
  norm.update(samples);
  CHECK(norm.var.minCoeff() > 0.0);
  const VectorXd extreme = VectorXd::Constant(3, 1e9);
  CHECK(norm.normalize(extreme).cwiseAbs().maxCoeff() <= RunningNorm::kClip);
}
