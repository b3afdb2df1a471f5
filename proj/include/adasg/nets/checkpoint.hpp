// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "adasg/nets/generator.hpp"
#include "adasg/nets/mlp.hpp"

namespace adasg::nets {

/// Checkpoint container, little-endian:
///   "ADSG" | u32 format version | u64 byte length + UTF-8 spec text |
///   f64 arrays in declaration order.
/// The spec text is `key=value` lines describing the architecture, BN
/// settings and quantization; the arrays follow the layer order
/// (weight, bias, then gamma, beta, running mean, running var for BN layers).
/// Generators store their label embedding before the body arrays.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
void save_checkpoint(const Generator& gen, const std::filesystem::path& path);

/// Throws CheckpointError on a bad magic, version mismatch, malformed spec,
/// truncated or oversized payload; never returns a partial network.
Mlp load_mlp_checkpoint(const std::filesystem::path& path);
Generator load_generator_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Mlp& net);
std::string encode_checkpoint(const Generator& gen);
Mlp decode_mlp_checkpoint(const std::string& bytes);
Generator decode_generator_checkpoint(const std::string& bytes);

}  // namespace adasg::nets
