#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "rebot/checkpoint.hpp"
#include "rebot/config.hpp"
#include "rebot/env.hpp"
#include "rebot/rl.hpp"

namespace rebot {

/// Applies the ablation switches recorded in config.ablations: no_adaptive
/// zeroes the diversity/threat/direction weights, no_curriculum starts the
/// avoidance curriculum at the dynamic stage. no_recovery only affects
/// evaluation-time stage dispatch and is just carried through.
Config ablation_flags(const Config& config);

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path csv_path;
  int iterations = 0;
  double final_probe_success = 0.0;  // last evaluation-probe success rate
};

/// PPO training for one policy kind. Avoidance runs the two-stage obstacle
/// curriculum (stage1_fraction of the iteration budget static, then dynamic);
/// recovery trains on perturbed initial states. Per-iteration stats append to
/// <out_dir>/train_<kind>.csv; checkpoints land in out_dir. Fully
/// deterministic for a fixed (seed, config).
TrainResult train(PolicyKind kind, const Config& config, std::uint64_t seed,
                  const std::optional<std::filesystem::path>& resume,
                  const std::filesystem::path& out_dir, std::ostream* log = nullptr);

}  // namespace rebot
