#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stnhcl/params.hpp"

// Binary parameter snapshot, all integers little-endian:
//   "STNH"  u32 version  u32 count
//   count x { u32 name_len, name bytes, u32 rank, rank x u32 extent,
//             numel x f32 payload }
// Entries are written in name order, so equal stores encode to equal bytes.
namespace stnhcl::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

std::string encode(const ParamStore<float>& params);
ParamStore<float> decode(const std::string& bytes);  // FormatError on any malformation

void save(const std::filesystem::path& path, const ParamStore<float>& params);
ParamStore<float> load(const std::filesystem::path& path);

}  // namespace stnhcl::checkpoint
