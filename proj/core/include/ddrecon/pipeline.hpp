#pragma once

#include "ddrecon/config.hpp"
#include "ddrecon/dataset_io.hpp"
#include "ddrecon/metrics.hpp"
#include "ddrecon/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ddrecon {

/// Deterministic synthetic slices: per-slice seeds are mix_seed(seed, index);
/// k-space is rounded to f32 so it survives the container unchanged.
Dataset synthesize_dataset(const SyntheticDatasetParams& params, const MaskParams& mask);

void write_split_manifest(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit read_split_manifest(const std::filesystem::path& path);

struct SimulateResult {
  std::filesystem::path dataset;
  std::filesystem::path manifest;
  std::size_t slices = 0;
};

/// Writes the dataset container and a `<split>\t<slice_id>` manifest.
SimulateResult cmd_simulate(const ExperimentConfig& config);

/// Trains on the dataset and manifest named by `config`.
TrainResult cmd_train(const ExperimentConfig& config, const EpochCallback& on_epoch = {});

/// 16-bit binary PGM (P5, maxval 65535) of `image / scale`, clamped to [0, 1].
void write_pgm16(const std::filesystem::path& path, const Tensor& image, double scale);

/// For each slice writes <id>_recon.pgm, <id>_zerofill.pgm and <id>_truth.pgm,
/// all normalised by the ground-truth maximum. Returns the written paths.
std::vector<std::filesystem::path> cmd_reconstruct(const ExperimentConfig& config,
                                                   const std::filesystem::path& checkpoint,
                                                   const std::vector<std::string>& slice_ids,
                                                   const std::filesystem::path& out_dir);

struct EvaluationReports {
  std::vector<ReconReport> image;  // R_out vs ground-truth RSS
  std::vector<ReconReport> kspace; // K_N vs fully sampled k-space
  std::string image_text;
  std::string kspace_text;
};

/// Metrics for the zero-fill baseline and the cascade on one split
/// ("train", "val" or "test"). Slices are processed in parallel.
EvaluationReports cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                               const std::string& split_name = "test");

std::string method_name(const CascadeConfig& cascade);

} // namespace ddrecon
