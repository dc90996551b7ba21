/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Binary parameter checkpoints, all fields little-endian:
//
//   "GFCK" | version u16 | spec digest u64 | param count u64 | round u32
//   | count x f64 payload | CRC32 (zlib polynomial) of the payload u32

#ifndef GOLDFISH_CHECKPOINT_H_
#define GOLDFISH_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "goldfish/nn.h"

namespace goldfish::exp {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint16_t version = kCheckpointVersion;
  std::uint64_t spec_digest = 0;
  std::uint64_t param_count = 0;
  std::uint32_t round = 0;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  nn::ParameterVector params;
};

// The digest recorded is params.spec_digest.
void save_checkpoint(const nn::ParameterVector& params, std::uint32_t round,
                     const std::filesystem::path& path);

// Verifies magic, version, length and CRC. Throws FormatError / IoError.
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

// read_checkpoint plus a digest and size check against the active network.
nn::ParameterVector load_checkpoint(const std::filesystem::path& path,
                                    const nn::NetworkSpec& active);

// Human-readable header summary and payload statistics.
std::string describe_checkpoint(const LoadedCheckpoint& checkpoint);

}  // namespace goldfish::exp

#endif  // GOLDFISH_CHECKPOINT_H_
