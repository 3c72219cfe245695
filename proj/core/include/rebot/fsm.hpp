#pragma once

#include "rebot/types.hpp"

namespace rebot {

enum class Stage { kNormal, kAvoidance, kRecovery };

const char* stage_name(Stage stage);

struct FsmThresholds {
  double orientation_limit = 0.8;     // rad, on ||rpy||
  double joint_velocity_limit = 25.0;  // rad/s, on ||qdot||
  double height_floor = 0.15;          // m
  double recovery_hold_time = 0.5;     // s of continuous stability before Recovery -> Normal
  double clear_distance = 1.5;         // m, obstacle considered past beyond this
};

/// True iff the obstacle is active and moving toward the robot:
/// <v_obstacle, p_robot - p_obstacle> > 0 (strict).
bool approaching(const ObstacleState& obstacle, const RobotState& robot);

/// Instability test: tilt, joint-velocity or height criterion (OR of the
/// three, Euclidean norms).
bool unstable(const RobotState& robot, const FsmThresholds& thresholds);

/// The obstacle no longer threatens: inactive, receding, or far away.
bool threat_cleared(const ObstacleState& obstacle, const RobotState& robot,
                    const FsmThresholds& thresholds);

/// Pure transition core over the four predicates. Reachable edges are exactly
/// Normal->Avoidance, Avoidance->Recovery, Avoidance->Normal, Recovery->Normal
/// and self-loops. The hold flag cannot have elapsed while unstable; the
/// function guards against the contradictory combination by staying in
/// Recovery.
Stage fsm_transition(Stage stage, bool is_approaching, bool is_unstable, bool is_threat_cleared,
                     bool hold_elapsed);

/// Stateful wrapper that tracks the recovery hold timer against a caller
/// supplied clock (monotone, seconds).
class Fsm {
 public:
  explicit Fsm(Stage initial = Stage::kNormal) : stage_(initial) {}

  Stage step(const RobotState& robot, const ObstacleState& obstacle,
             const FsmThresholds& thresholds, double clock);

  Stage stage() const { return stage_; }
  void reset(Stage stage = Stage::kNormal);

 private:
  Stage stage_;
  double stable_since_ = -1.0;  // < 0 means no stable streak in progress
};

}  // namespace rebot
