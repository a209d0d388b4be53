#pragma once

#include "ddrecon/mri_data.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ddrecon {

/// One stored slice: fully sampled k-space and its sampling mask.
struct DatasetSlice {
  KSpaceVolume kspace;
  SamplingMask mask;
};

using Dataset = std::vector<DatasetSlice>;

/// "DDMK" container, little-endian: magic, u32 version, u64 slice count; per
/// slice a u16-prefixed UTF-8 id, u16 ncoil, u32 height, u32 width, `width`
/// mask bytes (0/1), then k-space as interleaved f32 (re, im) per coil,
/// row-major. Values are narrowed to f32 on write, so a round trip is
/// bit-exact for data that is already f32-representable.
inline constexpr std::uint32_t dataset_version = 1;

std::vector<char> encode_dataset(std::span<const DatasetSlice> slices);
Dataset decode_dataset(const std::vector<char>& bytes);

void write_dataset(const std::filesystem::path& path, std::span<const DatasetSlice> slices);
Dataset read_dataset(const std::filesystem::path& path);

/// Rounds every k-space value to the nearest f32, matching what the
/// container stores.
void quantize_to_f32(KSpaceVolume& volume);

const DatasetSlice& find_slice(const Dataset& dataset, const std::string& slice_id);

} // namespace ddrecon
