#pragma once

// Brute-force GAE: A_t = sum_k (gamma lambda)^(k-t) delta_k, with the product
// of (1 - done) masks cutting the sum at episode boundaries. O(T^2) on
// purpose.

#include <Eigen/Dense>

namespace rebot::testing {

inline Eigen::VectorXd oracle_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                                  const Eigen::VectorXd& dones, double bootstrap, double gamma,
                                  double lambda) {
  const Eigen::Index t_len = rewards.size();
  Eigen::VectorXd delta(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const double next_v = (t + 1 < t_len) ? values[t + 1] : bootstrap;
    delta[t] = rewards[t] + gamma * next_v * (1.0 - dones[t]) - values[t];
  }
  Eigen::VectorXd adv = Eigen::VectorXd::Zero(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    double coeff = 1.0;
    for (Eigen::Index k = t; k < t_len; ++k) {
      adv[t] += coeff * delta[k];
      coeff *= gamma * lambda * (1.0 - dones[k]);
      if (coeff == 0.0) break;
    }
  }
  return adv;
}

}  // namespace rebot::testing
