#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "chestnet/model.hpp"

// Checkpoint layout:
//   "CHESTNET-CKPT\n"                 14-byte magic
//   uint64 little-endian              header length in bytes
//   header                            JSON: format_version, config, params
//                                     [{name, branch, shape, offset}], body_bytes, meta
//   body                              little-endian float32 arrays in manifest order

namespace chestnet {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ParamStore<float> params;
    nlohmann::json meta = nlohmann::json::object();
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes bytes to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace chestnet
