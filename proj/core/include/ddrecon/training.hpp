#pragma once

#include "ddrecon/cascade.hpp"
#include "ddrecon/dataset_io.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace ddrecon {

struct LossWeights {
  std::vector<double> image;
  std::vector<double> kspace;

  /// 0.25 for every iteration but the last, 1.0 for the last.
  static LossWeights defaults(std::size_t n_iterations);
  void validate(std::size_t n_iterations) const;
};

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-4;
  std::size_t batch_size = 2;
  std::uint64_t seed = 42;
  std::filesystem::path checkpoint_dir = "checkpoints";
  LossWeights loss_weights = LossWeights::defaults(2);
  /// Continue from `checkpoint_dir/latest.ddrk` when it exists.
  bool resume = false;

  void validate(std::size_t n_iterations) const;
};

/// sum_m image[m] * mse(I_m, I_full) + kspace[m] * mse(K_m, K_full).
Tensor compute_loss(const CascadeOutputs& outputs, const ComplexImage& image_full, const ComplexImage& kspace_full,
                    const LossWeights& weights);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_nmse = 0.0;
};

struct TrainResult {
  CascadeModel model; // parameters after the last epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_nmse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

inline constexpr const char* latest_checkpoint_name = "latest.ddrk";
inline constexpr const char* best_checkpoint_name = "best.ddrk";
inline constexpr const char* history_file_name = "history.tsv";

/// Adam over seeded per-epoch shuffles of `split.train`; after every epoch
/// the mean image NMSE of R_out on `split.val` is recorded, `latest.ddrk` is
/// written, and `best.ddrk` is replaced when validation improves. The history
/// file gets one `epoch\ttrain_loss\tval_nmse` line per epoch.
TrainResult train(const Dataset& dataset, const DatasetSplit& split, const CascadeConfig& cascade,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean image-domain NMSE (percent) of the cascade output against RSS of the
/// fully sampled k-space over `ids`.
double mean_image_nmse(const CascadeModel& model, const Dataset& dataset, std::span<const std::string> ids);

/// Model parameters stored in a checkpoint (optimizer and bookkeeping
/// entries are ignored).
CascadeModel load_model(const std::filesystem::path& checkpoint, const CascadeConfig& cascade);

std::string format_history_line(const EpochRecord& record);

} // namespace ddrecon
