#pragma once

#include <cstdint>
#include <string>

#include "ddk/model.h"

namespace ddk {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// ModelConfig <-> JSON object text. Unknown keys are rejected with
/// ConfigError; missing keys keep the architecture's default value.
std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

/// Binary checkpoint (little-endian):
///   "DDKCKPT\0" | u32 version | u32 json_len | config JSON
///   | u32 n_params | n_params x (u32 name_len | name | u32 ndim | ndim x u32 dim
///   | prod(dims) x f32)
/// Throws DataError on I/O failures.
void save_checkpoint(const std::string& path, const Model<float>& model);

/// Validates magic, version, parameter names and shapes. Throws DataError.
Model<float> load_checkpoint(const std::string& path);

}  // namespace ddk
