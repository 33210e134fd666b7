#pragma once

#include <cstdint>
#include <filesystem>

#include "sclr/model.hpp"

namespace sclr {

// Binary layout, all integers little-endian:
//   magic "SCLR" | u32 version = 1 | u64 FNV-1a digest of ModelConfig::canonical()
//   | u32 tensor count | per tensor (sorted by name):
//     u16 name length, UTF-8 name | u8 rank | u32 dims[rank] | f32 payload
// Parameters are stored at f32; load widens back to f64.

std::uint64_t fnv1a64(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const ModelConfig& config);

// Refuses files whose stored digest does not match `expected`.
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace sclr
