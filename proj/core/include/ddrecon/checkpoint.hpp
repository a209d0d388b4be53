#pragma once

#include "ddrecon/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ddrecon {

/// "DDRK" container: magic, u32 version, u64 count, then per tensor a u16
/// name length, name bytes, u8 rank, u64 dims and f64 data. Little-endian.
inline constexpr std::uint32_t checkpoint_version = 1;

std::vector<char> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<char>& bytes);

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

} // namespace ddrecon
