#pragma once

#include "ddrecon/cascade.hpp"
#include "ddrecon/training.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace ddrecon {

struct SyntheticDatasetParams {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t ncoil = 4;
  std::size_t slices = 200;
  std::size_t n_ellipses = 10;
  double noise_sigma = 0.0;
  std::uint64_t seed = 42;
};

struct MaskParams {
  double acceleration = 8.0;
  double center_fraction = 0.04;
};

/// Everything one experiment needs. Serialised as flat `section.key=value`
/// lines; `#` starts a comment. Network channel counts are derived from
/// dataset.ncoil and are not part of the text form.
struct ExperimentConfig {
  SyntheticDatasetParams dataset;
  MaskParams mask;
  std::array<double, 3> split = default_split_fractions;
  CascadeConfig cascade;
  TrainConfig train;
  std::filesystem::path output_dir = "ddrecon-run";
  std::filesystem::path dataset_path;   // empty: <output_dir>/dataset.ddmk
  std::filesystem::path checkpoint_dir; // empty: <output_dir>/checkpoints

  ExperimentConfig();

  /// Errors carry the offending line number.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  std::filesystem::path resolved_dataset_path() const;
  std::filesystem::path resolved_checkpoint_dir() const;
  std::filesystem::path split_manifest_path() const;

  /// Re-derives network channel counts from dataset.ncoil and validates all
  /// sections, including that the output paths are distinct.
  void finalize();
};

} // namespace ddrecon
