#include "ddrecon/training.hpp"

#include "ddrecon/checkpoint.hpp"
#include "ddrecon/error.hpp"
#include "ddrecon/metrics.hpp"
#include "ddrecon/ops.hpp"
#include "ddrecon/optim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ddrecon {

LossWeights LossWeights::defaults(std::size_t n_iterations) {
  LossWeights w;
  for (std::size_t m = 0; m < n_iterations; ++m) {
    const double v = m + 1 == n_iterations ? 1.0 : 0.25;
    w.image.push_back(v);
    w.kspace.push_back(v);
  }
  return w;
}

void LossWeights::validate(std::size_t n_iterations) const {
  if (image.size() != n_iterations || kspace.size() != n_iterations) {
    throw Error(ErrorCode::invalid_argument, "loss weights: expected " + std::to_string(n_iterations) +
                                                 " image and k-space weights, got " + std::to_string(image.size()) +
                                                 " and " + std::to_string(kspace.size()));
  }
  bool positive = false;
  for (const auto* list : {&image, &kspace}) {
    for (double v : *list) {
      if (!(v >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "loss weights must be non-negative");
      }
      positive = positive || v > 0.0;
    }
  }
  if (!positive) {
    throw Error(ErrorCode::invalid_argument, "loss weights: at least one weight must be positive");
  }
}

void TrainConfig::validate(std::size_t n_iterations) const {
  if (epochs == 0) {
    throw Error(ErrorCode::invalid_argument, "train: epochs must be >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "train: learning_rate must be > 0");
  }
  if (batch_size == 0) {
    throw Error(ErrorCode::invalid_argument, "train: batch_size must be >= 1");
  }
  loss_weights.validate(n_iterations);
}

Tensor compute_loss(const CascadeOutputs& outputs, const ComplexImage& image_full, const ComplexImage& kspace_full,
                    const LossWeights& weights) {
  const auto n = outputs.images.size();
  if (outputs.kspaces.size() != n) {
    throw Error(ErrorCode::invalid_argument, "compute_loss: image and k-space output counts differ");
  }
  weights.validate(n);
  Tensor total;
  auto accumulate = [&total](const Tensor& term) { total = total.defined() ? ops::add(total, term) : term; };
  for (std::size_t m = 0; m < n; ++m) {
    if (weights.image[m] != 0.0) {
      accumulate(ops::scale(ops::l2_loss(outputs.images[m].tensor, image_full.tensor), weights.image[m]));
    }
    if (weights.kspace[m] != 0.0) {
      accumulate(ops::scale(ops::l2_loss(outputs.kspaces[m].tensor, kspace_full.tensor), weights.kspace[m]));
    }
  }
  return total;
}

namespace {

struct PreparedSlice {
  const DatasetSlice* source;
  Tensor sampled;     // masked k-space [1, 2C, H, W]
  Tensor image_full;  // ifft2c of the full k-space
  Tensor rss_full;    // [H, W]
};

PreparedSlice prepare(const DatasetSlice& s) {
  PreparedSlice p;
  p.source = &s;
  p.sampled = apply_mask(s.kspace, s.mask).data.tensor;
  p.image_full = ifft2c(s.kspace.data.tensor.clone());
  p.rss_full = rss_reconstruct(s.kspace);
  return p;
}

Tensor stack(const std::vector<const Tensor*>& parts) {
  Shape shape = parts.front()->shape();
  shape[0] = parts.size();
  std::vector<double> data;
  data.reserve(shape_numel(shape));
  for (const auto* t : parts) {
    data.insert(data.end(), t->data().begin(), t->data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

std::map<std::string, const DatasetSlice*> index_dataset(const Dataset& dataset) {
  std::map<std::string, const DatasetSlice*> out;
  for (const auto& s : dataset) {
    out[s.kspace.slice_id] = &s;
  }
  return out;
}

const DatasetSlice& lookup(const std::map<std::string, const DatasetSlice*>& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw Error(ErrorCode::invalid_argument, "split references unknown slice '" + id + "'");
  }
  return *it->second;
}

double scalar_entry(const std::map<std::string, Tensor>& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) {
    throw Error(ErrorCode::invalid_argument, "checkpoint lacks entry " + name);
  }
  return it->second.item();
}

std::vector<EpochRecord> read_history(const std::filesystem::path& path, std::size_t up_to_epoch) {
  std::vector<EpochRecord> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream fields(line);
    EpochRecord r;
    if (!(fields >> r.epoch >> r.train_loss >> r.val_nmse)) {
      throw Error(ErrorCode::invalid_argument, "malformed history line: " + line);
    }
    if (r.epoch <= up_to_epoch) {
      out.push_back(r);
    }
  }
  return out;
}

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  for (const auto& r : history) {
    out << format_history_line(r) << '\n';
  }
}

} // namespace

std::string format_history_line(const EpochRecord& record) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu\t%.9g\t%.9g", record.epoch, record.train_loss, record.val_nmse);
  return buf;
}

double mean_image_nmse(const CascadeModel& model, const Dataset& dataset, std::span<const std::string> ids) {
  if (ids.empty()) {
    throw Error(ErrorCode::empty_split, "mean_image_nmse: no slices");
  }
  const auto index = index_dataset(dataset);
  double total = 0.0;
  for (const auto& id : ids) {
    const PreparedSlice p = prepare(lookup(index, id));
    const auto out = model.forward({p.sampled, Domain::kspace}, std::span(&p.source->mask, 1));
    total += nmse(out.final_image.data(), p.rss_full.data());
  }
  return total / static_cast<double>(ids.size());
}

CascadeModel load_model(const std::filesystem::path& checkpoint, const CascadeConfig& cascade) {
  CascadeModel model(cascade, 0);
  model.load_parameters(read_checkpoint(checkpoint));
  return model;
}

TrainResult train(const Dataset& dataset, const DatasetSplit& split, const CascadeConfig& cascade,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  cascade.validate();
  config.validate(cascade.n_iterations);
  if (split.train.empty() || split.val.empty()) {
    throw Error(ErrorCode::empty_split, "train: training and validation splits must be non-empty");
  }

  const auto index = index_dataset(dataset);
  std::vector<PreparedSlice> train_slices;
  for (const auto& id : split.train) {
    train_slices.push_back(prepare(lookup(index, id)));
    if (train_slices.back().source->kspace.ncoil() != cascade.ncoil) {
      throw Error(ErrorCode::shape_mismatch, "train: slice " + id + " has " +
                                                 std::to_string(train_slices.back().source->kspace.ncoil()) +
                                                 " coils, cascade expects " + std::to_string(cascade.ncoil));
    }
  }

  TrainResult result;
  result.model = CascadeModel(cascade, config.seed);
  auto named = result.model.parameters();
  std::vector<Tensor> params;
  for (auto& p : named) {
    params.push_back(p.tensor);
  }

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  std::size_t start_epoch = 0;
  result.best_val_nmse = std::numeric_limits<double>::infinity();

  std::filesystem::create_directories(config.checkpoint_dir);
  const auto latest_path = config.checkpoint_dir / latest_checkpoint_name;
  const auto best_path = config.checkpoint_dir / best_checkpoint_name;
  const auto history_path = config.checkpoint_dir / history_file_name;

  if (config.resume && std::filesystem::exists(latest_path)) {
    const auto stored = read_checkpoint(latest_path);
    std::map<std::string, Tensor> entries;
    for (const auto& e : stored) {
      entries[e.name] = e.tensor;
    }
    result.model.load_parameters(stored);
    start_epoch = static_cast<std::size_t>(scalar_entry(entries, "train.epoch"));
    result.best_epoch = static_cast<std::size_t>(scalar_entry(entries, "train.best_epoch"));
    result.best_val_nmse = scalar_entry(entries, "train.best_val_nmse");
    adam.step = static_cast<std::uint64_t>(scalar_entry(entries, "adam.step"));
    if (adam.step > 0) {
      for (const auto& p : named) {
        for (const char* moment : {"adam.m.", "adam.v."}) {
          auto it = entries.find(moment + p.name);
          if (it == entries.end() || it->second.numel() != p.tensor.numel()) {
            throw Error(ErrorCode::invalid_argument, "checkpoint lacks optimizer state for " + p.name);
          }
          auto& target = moment[5] == 'm' ? adam.m : adam.v;
          target.emplace_back(it->second.data().begin(), it->second.data().end());
        }
      }
    }
    result.history = read_history(history_path, start_epoch);
  }

  for (std::size_t epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(train_slices.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = i;
    }
    Rng rng(mix_seed(config.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto end = std::min(order.size(), start + config.batch_size);
      std::vector<const Tensor*> sampled, image_full, kspace_full;
      std::vector<SamplingMask> masks;
      std::string ids;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = train_slices[order[i]];
        sampled.push_back(&s.sampled);
        image_full.push_back(&s.image_full);
        kspace_full.push_back(&s.source->kspace.data.tensor);
        masks.push_back(s.source->mask);
        ids += (ids.empty() ? "" : ",") + s.source->kspace.slice_id;
      }

      zero_grads(params);
      Tape tape;
      Tensor loss;
      {
        Tape::Recording recording(tape);
        const auto outputs = result.model.forward({stack(sampled), Domain::kspace}, masks);
        loss = compute_loss(outputs, {stack(image_full), Domain::image}, {stack(kspace_full), Domain::kspace},
                            config.loss_weights);
      }
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::non_finite, "non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                               std::to_string(batches) + " (slices " + ids + ")");
      }
      tape.backward(loss);
      tape.clear();
      adam_step(params, adam);
      loss_sum += value;
      ++batches;
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(batches),
                       mean_image_nmse(result.model, dataset, split.val)};
    result.history.push_back(record);

    std::vector<NamedTensor> state = result.model.parameters();
    if (record.val_nmse < result.best_val_nmse) {
      result.best_val_nmse = record.val_nmse;
      result.best_epoch = epoch;
      auto best = state;
      best.push_back({"train.epoch", Tensor::scalar(static_cast<double>(epoch))});
      write_checkpoint(best_path, best);
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      state.push_back({"adam.m." + named[i].name, Tensor(named[i].tensor.shape(), adam.m[i])});
      state.push_back({"adam.v." + named[i].name, Tensor(named[i].tensor.shape(), adam.v[i])});
    }
    state.push_back({"adam.step", Tensor::scalar(static_cast<double>(adam.step))});
    state.push_back({"train.epoch", Tensor::scalar(static_cast<double>(epoch))});
    state.push_back({"train.best_epoch", Tensor::scalar(static_cast<double>(result.best_epoch))});
    state.push_back({"train.best_val_nmse", Tensor::scalar(result.best_val_nmse)});
    write_checkpoint(latest_path, state);
    write_history(history_path, result.history);

    if (on_epoch) {
      on_epoch(record);
    }
  }
  return result;
}

} // namespace ddrecon
