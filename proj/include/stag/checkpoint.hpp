#pragma once

#include "stag/stages.hpp"

#include <cstdint>
#include <filesystem>

namespace stag {

struct CheckpointError : DataError {
  using DataError::DataError;
};

/// FNV-1a over every ForecastConfig field except the seed.
std::uint64_t config_hash(const ForecastConfig& config);

/// Text header (config, options, skeleton, tensor table) followed by the
/// parameters as little-endian 64-bit floats.
void save_checkpoint(ModelBundle& bundle, const std::filesystem::path& path);

/// Rebuilds the bundle from the stored config and skeleton.
ModelBundle load_checkpoint(const std::filesystem::path& path);
/// Same, refusing the file when its config hash differs from `current`'s.
ModelBundle load_checkpoint(const std::filesystem::path& path, const ForecastConfig& current);

}  // namespace stag
