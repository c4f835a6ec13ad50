#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rmvh/hash_trainer.hpp"

namespace rmvh {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// On-disk model: hash functions, kernel landmarks and bandwidths, the
/// optional base set and the flat-text snapshot of the training config.
///
/// Layout (little-endian): "RMVHMODL", u32 version, payload, u64 FNV-1a of
/// every preceding byte.
struct ModelFile {
  std::uint32_t version = kModelFormatVersion;
  HashModel model;
  std::string config_snapshot;
};

std::vector<std::uint8_t> serialize_model(const ModelFile& file);

/// Throws CorruptFile on truncation, bad magic or checksum mismatch and
/// VersionError when the file is newer than this reader.
ModelFile deserialize_model(const std::vector<std::uint8_t>& bytes, const std::string& context = "model");

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace rmvh
