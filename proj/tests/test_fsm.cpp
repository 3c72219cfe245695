#include <doctest.h>

#include <map>

#include "rebot/fsm.hpp"
#include "rebot/rng.hpp"
#include "rebot/sim.hpp"

using namespace rebot;

namespace {

RobotState nominal_robot() {
  RobotState r;
  r.base_position = Vec3(0, 0, 0.3);
  return r;
}

ObstacleState active_obstacle(const Vec3& pos, const Vec3& vel) {
  ObstacleState o;
  o.position = pos;
  o.velocity = vel;
  o.active = true;
  return o;
}

}  // namespace

TEST_CASE("approaching is the strict velocity-offset dot product") {
  const RobotState robot = nominal_robot();

  // offset robot - obstacle = (1,0,0)
  CHECK(approaching(active_obstacle(Vec3(-1, 0, 0.3), Vec3(1, 0, 0)), robot));
  CHECK_FALSE(approaching(active_obstacle(Vec3(-1, 0, 0.3), Vec3(-1, 0, 0)), robot));
  // perpendicular: dot exactly zero, strict comparison says no
  CHECK_FALSE(approaching(active_obstacle(Vec3(-1, 0, 0.3), Vec3(0, 1, 0)), robot));

  ObstacleState inactive = active_obstacle(Vec3(-1, 0, 0.3), Vec3(1, 0, 0));
  inactive.active = false;
  CHECK_FALSE(approaching(inactive, robot));
}

TEST_CASE("approaching is invariant to positive velocity scaling") {
  Rng rng(5);
  const RobotState robot = nominal_robot();
  for (int i = 0; i < 300; ++i) {
    const ObstacleState o = active_obstacle(
        Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2)),
        Vec3(rng.normal(), rng.normal(), rng.normal()));
    const bool base = approaching(o, robot);
    for (double scale : {0.01, 0.5, 3.0, 1000.0}) {
      ObstacleState scaled = o;
      scaled.velocity *= scale;
      CHECK(approaching(scaled, robot) == base);
    }
  }
}

TEST_CASE("unstable ORs the three criteria") {
  FsmThresholds th;  // 0.8 rad, 25 rad/s, 0.15 m
  RobotState r = nominal_robot();
  CHECK_FALSE(unstable(r, th));

  RobotState tilted = r;
  tilted.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(0.9, Vec3::UnitX()));
  CHECK(unstable(tilted, th));

  RobotState fast = r;
  fast.joint_velocities = Vec12::Constant(26.0 / std::sqrt(12.0));
  CHECK(unstable(fast, th));

  RobotState low = r;
  low.base_position.z() = 0.10;
  CHECK(unstable(low, th));
}

TEST_CASE("unstable is monotone in each criterion") {
  FsmThresholds th;
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    RobotState r = nominal_robot();
    const double tilt = rng.uniform(0, 1.5);
    r.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(tilt, Vec3::UnitY()));
    r.joint_velocities = Vec12::Constant(rng.uniform(0, 10));
    r.base_position.z() = rng.uniform(0.05, 0.5);
    if (!unstable(r, th)) continue;

    // Increasing tilt or joint speed, or decreasing height, must keep it true.
    RobotState worse = r;
    worse.orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(std::min(tilt * 1.5, 3.0), Vec3::UnitY()));
    worse.joint_velocities = r.joint_velocities * 1.5;
    worse.base_position.z() = r.base_position.z() * 0.5;
    CHECK(unstable(worse, th));
  }
}

TEST_CASE("fsm transition table is exactly the defined edges") {
  // Expected transitions, written out once by hand.
  auto expected = [](Stage s, bool app, bool unst, bool cleared, bool hold) {
    if (s == Stage::kNormal) return app ? Stage::kAvoidance : Stage::kNormal;
    if (s == Stage::kAvoidance) {
      if (!cleared) return Stage::kAvoidance;
      return unst ? Stage::kRecovery : Stage::kNormal;
    }
    return (hold && !unst) ? Stage::kNormal : Stage::kRecovery;
  };

  std::map<std::pair<Stage, Stage>, int> seen;
  for (Stage s : {Stage::kNormal, Stage::kAvoidance, Stage::kRecovery}) {
    for (bool app : {false, true}) {
      for (bool unst : {false, true}) {
        for (bool cleared : {false, true}) {
          for (bool hold : {false, true}) {
            const Stage got = fsm_transition(s, app, unst, cleared, hold);
            CHECK(got == expected(s, app, unst, cleared, hold));
            ++seen[{s, got}];
          }
        }
      }
    }
  }
  // Reachable edges: self loops plus N->A, A->R, A->N, R->N, nothing else.
  CHECK(seen.count({Stage::kNormal, Stage::kAvoidance}) == 1);
  CHECK(seen.count({Stage::kAvoidance, Stage::kRecovery}) == 1);
  CHECK(seen.count({Stage::kAvoidance, Stage::kNormal}) == 1);
  CHECK(seen.count({Stage::kRecovery, Stage::kNormal}) == 1);
  CHECK(seen.count({Stage::kNormal, Stage::kRecovery}) == 0);
  CHECK(seen.count({Stage::kRecovery, Stage::kAvoidance}) == 0);
}

TEST_CASE("normal goes to avoidance when an obstacle approaches") {
  Fsm fsm;
  FsmThresholds th;
  const RobotState robot = nominal_robot();
  const ObstacleState o = active_obstacle(Vec3(-2, 0, 0.3), Vec3(3, 0, 0));
  CHECK(fsm.step(robot, o, th, 0.0) == Stage::kAvoidance);
}

TEST_CASE("avoidance goes to recovery when the threat passed and the robot is unstable") {
  Fsm fsm(Stage::kAvoidance);
  FsmThresholds th;
  RobotState robot = nominal_robot();
  robot.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(1.0, Vec3::UnitX()));
  const ObstacleState receding = active_obstacle(Vec3(1, 0, 0.3), Vec3(3, 0, 0));
  CHECK(fsm.step(robot, receding, th, 1.0) == Stage::kRecovery);
}

TEST_CASE("avoidance returns to normal when stable after the threat passed") {
  Fsm fsm(Stage::kAvoidance);
  FsmThresholds th;
  const ObstacleState receding = active_obstacle(Vec3(1, 0, 0.3), Vec3(3, 0, 0));
  CHECK(fsm.step(nominal_robot(), receding, th, 1.0) == Stage::kNormal);
}

TEST_CASE("recovery exits only after stability is held for the hold time") {
  Fsm fsm(Stage::kRecovery);
  FsmThresholds th;  // hold 0.5 s
  const RobotState stable_robot = nominal_robot();
  ObstacleState gone;
  gone.active = false;

  double clock = 0.0;
  CHECK(fsm.step(stable_robot, gone, th, clock) == Stage::kRecovery);  // streak starts
  clock = 0.3;
  CHECK(fsm.step(stable_robot, gone, th, clock) == Stage::kRecovery);

  // Instability resets the streak.
  RobotState tipped = stable_robot;
  tipped.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(1.2, Vec3::UnitX()));
  clock = 0.4;
  CHECK(fsm.step(tipped, gone, th, clock) == Stage::kRecovery);
  clock = 0.5;
  CHECK(fsm.step(stable_robot, gone, th, clock) == Stage::kRecovery);
  clock = 0.9;
  CHECK(fsm.step(stable_robot, gone, th, clock) == Stage::kRecovery);
  clock = 1.0;  // 0.5 s after the streak restarted at 0.5
  CHECK(fsm.step(stable_robot, gone, th, clock) == Stage::kNormal);
}

TEST_CASE("avoidance holds while the obstacle is still approaching and near") {
  Fsm fsm(Stage::kAvoidance);
  FsmThresholds th;
  const ObstacleState incoming = active_obstacle(Vec3(-1.0, 0, 0.3), Vec3(4, 0, 0));
  CHECK(fsm.step(nominal_robot(), incoming, th, 0.2) == Stage::kAvoidance);

  // Beyond clear_distance the threat counts as passed even if approaching.
  const ObstacleState distant = active_obstacle(Vec3(-5.0, 0, 0.3), Vec3(4, 0, 0));
  Fsm fsm2(Stage::kAvoidance);
  CHECK(fsm2.step(nominal_robot(), distant, th, 0.2) == Stage::kNormal);
}
