#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"

#include "dsf/param_store.hpp"

namespace dsf {

struct CheckpointMeta {
  std::size_t epoch = 0;
  double val_iou = 0.0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  nlohmann::json config;  // resolved run configuration
  ParamStore params;
  CheckpointMeta meta;
};

inline constexpr int kCheckpointVersion = 1;

/// Writes <dir>/manifest.json (config, tensor names/shapes/offsets, metadata)
/// and <dir>/weights.bin (little-endian float32 in manifest order).
void save_checkpoint(const std::filesystem::path& dir, const ParamStore& params, const CheckpointMeta& meta,
                     const nlohmann::json& config);

/// Rejects version mismatches, blob length errors and inconsistent shapes.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace dsf
