#pragma once

// Scalar re-implementations of every reward formula, written directly from
// the published definitions with plain loops. These are the comparison
// oracles for the rewards module and intentionally share no code with it.

#include <algorithm>
#include <cmath>
#include <limits>

#include "rebot/rewards.hpp"
#include "rebot/types.hpp"

namespace rebot::testing {

inline double oracle_distance(double sdf, double radius) { return -std::exp(-(sdf - radius)); }

inline double oracle_collision(bool collided) { return collided ? -1.0 : 1.0; }

inline double oracle_walk(bool fl, bool fr, bool rl, bool rr) {
  double s = 0.0;
  if (fl == rr) s += 1.0;
  if (fr == rl) s += 1.0;
  return 0.5 * s;
}

inline double oracle_energy(const double* tau, const double* qd, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::fabs(tau[i] * qd[i]);
  return -s;
}

inline double oracle_contact(const double* fz_now, const double* fz_prev, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = fz_now[i] - fz_prev[i];
    s += d * d;
  }
  return -s;
}

inline double oracle_threat(double speed, double cmd_speed, double lambda, double eta,
                            double t_react) {
  const double safe = cmd_speed + lambda * std::exp(-eta * t_react);
  return -std::fabs(speed - safe);
}

inline double oracle_direction(const double v[3], const double offset[3]) {
  return -(v[0] * offset[0] + v[1] * offset[1] + v[2] * offset[2]);
}

inline double oracle_orientation(const double rpy[3], const double rpy0[3]) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = rpy[i] - rpy0[i];
    s += d * d;
  }
  return -s;
}

inline double oracle_stable(const double* qd, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(-std::fabs(qd[i]));
  return s;
}

inline double oracle_position(const double p[3], const double p0[3]) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = p[i] - p0[i];
    s += d * d;
  }
  return -s;
}

inline double oracle_additional(const double* tau, const double* a_now, const double* a_prev,
                                int n, double w_tau, double w_rate) {
  double tau_sq = 0.0, rate_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    tau_sq += tau[i] * tau[i];
    const double d = a_now[i] - a_prev[i];
    rate_sq += d * d;
  }
  return -w_tau * tau_sq - w_rate * rate_sq;
}

// --- auxiliary table rows ---

inline double oracle_vertical_velocity(double vz) { return vz * vz; }

inline double oracle_horizontal_ang_vel(double wx, double wy) {
  return std::sqrt(wx * wx + wy * wy);
}

inline double oracle_flat_orientation(double roll, double pitch) {
  return std::sqrt(roll * roll + pitch * pitch);
}

inline double oracle_action_rate(const double* a_now, const double* a_prev, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a_now[i] - a_prev[i];
    s += d * d;
  }
  return s;
}

inline double oracle_lin_vel_tracking(const double v[2], const double cmd[2]) {
  const double dx = v[0] - cmd[0], dy = v[1] - cmd[1];
  return std::sqrt(dx * dx + dy * dy);
}

inline double oracle_ang_vel_tracking(double wz, double cmd) { return std::fabs(wz - cmd); }

inline double oracle_feet_air_time(const double* touchdown_air, int n, double target) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (touchdown_air[i] > 0.0) s += touchdown_air[i] - target;
  }
  return s;
}

inline double oracle_stumble(const double forces[4][3], double limit) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double fxy = std::sqrt(forces[i][0] * forces[i][0] + forces[i][1] * forces[i][1]);
    const double fz = std::fabs(forces[i][2]);
    double ratio;
    if (fz > 0.0) {
      ratio = fxy / fz;
    } else {
      ratio = fxy > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    worst = std::max(worst, ratio);
  }
  return worst > limit ? 1.0 : 0.0;
}

inline double oracle_contact_force(const double forces[4][3], double threshold) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double norm = std::sqrt(forces[i][0] * forces[i][0] + forces[i][1] * forces[i][1] +
                                  forces[i][2] * forces[i][2]);
    const double excess = norm - threshold;
    if (excess > 0.0) s += excess * excess;
  }
  return s;
}

inline double oracle_diversity(const double* log_std, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(2.0 * log_std[i]);
  return s / static_cast<double>(n);
}

}  // namespace rebot::testing
