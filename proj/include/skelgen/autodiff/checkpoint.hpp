// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "skelgen/autodiff/params.hpp"

namespace skelgen::ad {

// Binary layout, all integers little-endian:
//   "SKLG" | version u32 | config length u32 | config bytes (UTF-8)
//   then per parameter, in name order:
//   name length u32 | name bytes | rank u32 | dims u32 x rank | f32 x numel
inline constexpr char kCheckpointMagic[4] = {'S', 'K', 'L', 'G'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config;  // opaque UTF-8 document (JSON in practice)
  ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& config,
                     const ParamStore& params);
std::string encode_checkpoint(const std::string& config, const ParamStore& params);

// Validates magic, version, and that the records consume the file exactly.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace skelgen::ad
