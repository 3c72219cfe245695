#include "rebot/fsm.hpp"

namespace rebot {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kNormal: return "normal";
    case Stage::kAvoidance: return "avoidance";
    case Stage::kRecovery: return "recovery";
  }
  return "?";
}

bool approaching(const ObstacleState& obstacle, const RobotState& robot) {
  if (!obstacle.active) return false;
  return obstacle.velocity.dot(robot.base_position - obstacle.position) > 0.0;
}

bool unstable(const RobotState& robot, const FsmThresholds& thresholds) {
  return robot.rpy().norm() > thresholds.orientation_limit ||
         robot.joint_velocities.norm() > thresholds.joint_velocity_limit ||
         robot.base_height() < thresholds.height_floor;
}

bool threat_cleared(const ObstacleState& obstacle, const RobotState& robot,
                    const FsmThresholds& thresholds) {
  return !obstacle.active || !approaching(obstacle, robot) ||
         (obstacle.position - robot.base_position).norm() > thresholds.clear_distance;
}

Stage fsm_transition(Stage stage, bool is_approaching, bool is_unstable, bool is_threat_cleared,
                     bool hold_elapsed) {
  switch (stage) {
    case Stage::kNormal:
      return is_approaching ? Stage::kAvoidance : Stage::kNormal;
    case Stage::kAvoidance:
      if (!is_threat_cleared) return Stage::kAvoidance;
      return is_unstable ? Stage::kRecovery : Stage::kNormal;
    case Stage::kRecovery:
      return (hold_elapsed && !is_unstable) ? Stage::kNormal : Stage::kRecovery;
  }
  return stage;
}

Stage Fsm::step(const RobotState& robot, const ObstacleState& obstacle,
                const FsmThresholds& thresholds, double clock) {
  const bool is_unstable = unstable(robot, thresholds);

  bool hold_elapsed = false;
  if (stage_ == Stage::kRecovery) {
    if (is_unstable) {
      stable_since_ = -1.0;
    } else if (stable_since_ < 0.0) {
      stable_since_ = clock;
    }
    hold_elapsed = stable_since_ >= 0.0 && clock - stable_since_ >= thresholds.recovery_hold_time;
  }

  const Stage next = fsm_transition(stage_, approaching(obstacle, robot), is_unstable,
                                    threat_cleared(obstacle, robot, thresholds), hold_elapsed);
  if (next != stage_) stable_since_ = -1.0;
  stage_ = next;
  return stage_;
}

void Fsm::reset(Stage stage) {
  stage_ = stage;
  stable_since_ = -1.0;
}

}  // namespace rebot
