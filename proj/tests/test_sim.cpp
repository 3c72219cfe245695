#include <doctest.h>

#include "rebot/errors.hpp"
#include "rebot/sim.hpp"

using namespace rebot;

TEST_CASE("pd_torque is zero at the target with zero velocity") {
  const Vec12 q = Vec12::Constant(0.4);
  const Vec12 tau = pd_torque(q, q, Vec12::Zero(), 20.0, 0.5, 23.7);
  CHECK(tau.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pd_torque closed form") {
  Vec12 targets = Vec12::Zero(), q = Vec12::Zero(), qd = Vec12::Zero();
  targets[0] = 0.1;
  qd[0] = 1.0;
  const Vec12 tau = pd_torque(targets, q, qd, 20.0, 0.5, 23.7);
  CHECK(tau[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(tau.tail<11>().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pd_torque clamps at the torque limit") {
  Vec12 targets = Vec12::Zero(), q = Vec12::Zero();
  targets[3] = 5.0;  // kp * err = 100 >> 23.7
  const Vec12 tau = pd_torque(targets, q, Vec12::Zero(), 20.0, 0.5, 23.7);
  CHECK(tau[3] == doctest::Approx(23.7));
  targets[3] = -5.0;
  const Vec12 tau2 = pd_torque(targets, q, Vec12::Zero(), 20.0, 0.5, 23.7);
  CHECK(tau2[3] == doctest::Approx(-23.7));
}

TEST_CASE("robot_step rejects non-positive dt") {
  DynamicsConfig cfg;
  const RobotState state = make_default_state(cfg);
  Action act{cfg.default_joint_positions()};
  CHECK_THROWS_AS(robot_step(state, act, 0.0, cfg), InvalidInput);
  CHECK_THROWS_AS(robot_step(state, act, -0.01, cfg), InvalidInput);
}

TEST_CASE("free body advances position by dt * v without gravity or torque") {
  DynamicsConfig cfg;
  cfg.gravity = 0.0;
  cfg.kp = 0.0;
  cfg.kd = 0.0;
  RobotState state = make_default_state(cfg);
  state.base_position = Vec3(0, 0, 5.0);  // no contact
  state.base_linear_velocity = Vec3(1, 0, 0);
  const Action act{cfg.default_joint_positions()};

  auto [next, contacts] = robot_step(state, act, 0.02, cfg);
  CHECK(next.base_position.x() == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(next.base_position.y() == 0.0);
  CHECK(next.base_position.z() == doctest::Approx(5.0).epsilon(1e-12));
  for (int leg = 0; leg < kNumLegs; ++leg) CHECK_FALSE(contacts.in_contact[leg]);
}

TEST_CASE("free body momentum is conserved to 1e-12 per step") {
  DynamicsConfig cfg;
  cfg.gravity = 0.0;
  cfg.kp = 0.0;
  cfg.kd = 0.0;
  RobotState state = make_default_state(cfg);
  state.base_position = Vec3(0, 0, 4.0);
  state.base_linear_velocity = Vec3(0.3, -0.2, 0.1);
  const Action act{cfg.default_joint_positions()};
  for (int i = 0; i < 200; ++i) {
    auto [next, contacts] = robot_step(state, act, cfg.dt, cfg);
    CHECK((next.base_linear_velocity - state.base_linear_velocity).norm() <= 1e-12);
    state = next;
  }
}

TEST_CASE("passive energy is non-increasing without actuation") {
  DynamicsConfig cfg;
  cfg.kp = 0.0;
  cfg.kd = 0.0;
  RobotState state = make_default_state(cfg);
  state.base_position = Vec3(0, 0, 3.0);
  state.base_linear_velocity = Vec3(0.5, 0, 1.0);
  const Action act{cfg.default_joint_positions()};

  auto energy = [&](const RobotState& s) {
    const double kinetic = 0.5 * cfg.base_mass * s.base_linear_velocity.squaredNorm() +
                           0.5 * cfg.joint_reflected_inertia * s.joint_velocities.squaredNorm();
    return kinetic + cfg.base_mass * cfg.gravity * s.base_position.z();
  };

  double prev = energy(state);
  for (int i = 0; i < 100; ++i) {
    state = robot_step(state, act, cfg.dt, cfg).first;
    const double now = energy(state);
    CHECK(now <= prev + 1e-9);
    prev = now;
  }
}

TEST_CASE("default stance settles into static equilibrium") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  const Action act{cfg.default_joint_positions()};
  ContactState contacts;
  for (int i = 0; i < 600; ++i) {
    std::tie(state, contacts) = robot_step(state, act, cfg.dt, cfg, contacts);
  }
  const double h0 = state.base_height();
  std::tie(state, contacts) = robot_step(state, act, cfg.dt, cfg, contacts);
  CHECK(std::abs(state.base_height() - h0) < 1e-3);
  CHECK(state.base_height() > 0.2);
  for (int leg = 0; leg < kNumLegs; ++leg) CHECK(contacts.in_contact[leg]);
}

TEST_CASE("robot_step is deterministic") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  Action act{cfg.default_joint_positions() + Vec12::Constant(0.05)};
  auto [a, ca] = robot_step(state, act, cfg.dt, cfg);
  auto [b, cb] = robot_step(state, act, cfg.dt, cfg);
  CHECK(a.base_position == b.base_position);
  CHECK(a.joint_velocities == b.joint_velocities);
  CHECK(a.orientation.coeffs() == b.orientation.coeffs());
  CHECK(ca.forces == cb.forces);
}

TEST_CASE("vertical foot forces are unilateral") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  state.base_linear_velocity = Vec3(0, 0, 2.0);  // moving up fast: damper would pull down
  const Action act{cfg.default_joint_positions()};
  ContactState contacts;
  for (int i = 0; i < 400; ++i) {
    std::tie(state, contacts) = robot_step(state, act, cfg.dt, cfg, contacts);
    CHECK(contacts.forces.col(2).minCoeff() >= 0.0);
  }
}

TEST_CASE("a static penetrating foot produces the pure spring force") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  const double penetration = 0.002;
  state.base_position.z() = cfg.default_base_height() - penetration;
  const Action act{cfg.default_joint_positions()};

  auto [next, contacts] = robot_step(state, act, cfg.dt, cfg);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    CHECK(contacts.forces(leg, 2) ==
          doctest::Approx(cfg.contact_k * penetration).epsilon(1e-9));
    CHECK(contacts.forces.row(leg).head<2>().norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("air time accumulates while airborne and resets on touchdown") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  state.base_position.z() = 1.0;  // airborne
  const Action act{cfg.default_joint_positions()};
  ContactState contacts;
  int steps_airborne = 0;
  bool saw_touchdown = false;
  for (int i = 0; i < 2000; ++i) {
    std::tie(state, contacts) = robot_step(state, act, cfg.dt, cfg, contacts);
    if (!contacts.in_contact[0]) {
      ++steps_airborne;
      CHECK(contacts.air_time[0] == doctest::Approx(steps_airborne * cfg.dt).epsilon(1e-9));
    } else {
      if (!saw_touchdown && steps_airborne > 0) {
        saw_touchdown = true;
        CHECK(contacts.touchdown_air_time[0] ==
              doctest::Approx((steps_airborne + 1) * cfg.dt).epsilon(1e-9));
      }
      CHECK(contacts.air_time[0] == 0.0);
      break;
    }
  }
  CHECK(saw_touchdown);
}

TEST_CASE("obstacle_step waits for activation") {
  ObstacleState o;
  o.position = Vec3(1, 2, 3);
  o.velocity = Vec3(-3, 0, 0);
  o.activation_time = 1.0;
  const ObstacleState next = obstacle_step(o, 0.02, 0.5);
  CHECK_FALSE(next.active);
  CHECK(next.position == Vec3(1, 2, 3));
}

TEST_CASE("active obstacle integrates velocity") {
  ObstacleState o;
  o.position = Vec3(1, 0, 0.5);
  o.velocity = Vec3(-3, 0, 0);
  o.active = true;
  const ObstacleState next = obstacle_step(o, 0.02, 2.0);
  CHECK(next.position.x() == doctest::Approx(1.0 - 0.06).epsilon(1e-12));
}

TEST_CASE("static obstacle keeps its position after activation") {
  ObstacleState o;
  o.position = Vec3(0.4, 0.2, 0.3);
  o.velocity = Vec3::Zero();
  o.activation_time = 1.0;
  ObstacleState cur = o;
  for (int i = 0; i < 200; ++i) {
    cur = obstacle_step(cur, 0.02, i * 0.02);
  }
  CHECK(cur.active);
  CHECK(cur.position == o.position);
}

TEST_CASE("max_joint_power picks the largest |tau * qdot|") {
  RobotState state;
  CHECK(max_joint_power(state) == 0.0);

  state.joint_torques[2] = 2.0;
  state.joint_velocities[2] = 3.0;
  CHECK(max_joint_power(state) == doctest::Approx(6.0));

  state.joint_torques[5] = -2.0;
  state.joint_velocities[5] = 3.0;
  CHECK(max_joint_power(state) == doctest::Approx(6.0));

  state.joint_torques[7] = -4.0;
  state.joint_velocities[7] = -3.0;
  CHECK(max_joint_power(state) == doctest::Approx(12.0));
}

TEST_CASE("fallen trunk rests on the ground instead of sinking") {
  DynamicsConfig cfg;
  RobotState state = make_default_state(cfg);
  state.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitX()));
  state.base_position.z() = 0.3;
  const Action act{cfg.default_joint_positions()};
  ContactState contacts;
  for (int i = 0; i < 2000; ++i) {
    std::tie(state, contacts) = robot_step(state, act, cfg.dt, cfg, contacts);
  }
  CHECK(state.base_height() > 0.02);
  CHECK(state.base_linear_velocity.norm() < 1.0);
}
