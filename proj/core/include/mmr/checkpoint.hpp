// Copyright 2026 The mmr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmr/params.hpp"

namespace mmr {

/// Parameter checkpoints, little-endian:
///   "MPRM" | u32 version | u32 n | n x u64 encoder config fields
///   | u32 tensor count | per tensor: u32 name length, name, u32 ndims,
///     ndims x u64 shape, f64 values in row-major order
/// The config block lets a checkpoint be loaded without a separate config.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_params(const EncoderParams& params);
/// Throws kFormat on a bad magic, kUnsupportedVersion on another version and
/// kCorruption on truncation or a tensor table that does not match the config.
EncoderParams deserialize_params(const std::vector<std::uint8_t>& bytes);

void save_params(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_params(const std::filesystem::path& path);

}  // namespace mmr
