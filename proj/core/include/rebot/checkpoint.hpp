#pragma once

#include <filesystem>
#include <utility>

#include "rebot/env.hpp"
#include "rebot/rl.hpp"

namespace rebot {

/// Checkpoint file layout, little-endian:
///   "RBOT" magic (4 bytes)
///   u32 format version (currently 1)
///   u8  policy kind (0 avoidance, 1 recovery)
///   u32 obs_dim, u32 action_dim
///   u32 hidden layer count, then u32 per hidden dim
///   u64 update_count, u64 obs-normalizer sample count (rounded)
///   f32 tensors, row-major: actor weights+bias per layer, critic
///   weights+bias per layer, log_std, normalizer mean, normalizer variance.
/// Load validates magic, version and the exact byte size implied by the
/// header; mismatches raise CheckpointError with distinct codes.
void checkpoint_save(const PolicyParams& params, PolicyKind kind,
                     const std::filesystem::path& path);

std::pair<PolicyParams, PolicyKind> checkpoint_load(const std::filesystem::path& path);

}  // namespace rebot
