#include "ddrecon/pipeline.hpp"

#include "ddrecon/error.hpp"
#include "ddrecon/parallel.hpp"
#include "ddrecon/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddrecon {

Dataset synthesize_dataset(const SyntheticDatasetParams& params, const MaskParams& mask) {
  if (params.slices == 0) {
    throw Error(ErrorCode::invalid_argument, "simulate: dataset.slices must be >= 1");
  }
  Dataset out(params.slices);
  parallel_for(params.slices, [&](std::size_t i) {
    const auto seed = mix_seed(params.seed, i);
    char id[32];
    std::snprintf(id, sizeof id, "slice_%04zu", i);
    const Tensor phantom = generate_phantom(params.height, params.width, params.n_ellipses, mix_seed(seed, 1));
    KSpaceVolume volume = simulate_coils(phantom, params.ncoil, mix_seed(seed, 2), params.noise_sigma, id);
    quantize_to_f32(volume);
    out[i] = {std::move(volume),
              generate_mask(params.width, mask.acceleration, mask.center_fraction, mix_seed(seed, 3))};
  });
  return out;
}

void write_split_manifest(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot write split manifest " + path.string());
  }
  for (const auto& [name, ids] : {std::pair{"train", &split.train}, {"val", &split.val}, {"test", &split.test}}) {
    for (const auto& id : *ids) {
      out << name << '\t' << id << '\n';
    }
  }
}

DatasetSplit read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open split manifest " + path.string());
  }
  DatasetSplit split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto tab = line.find('\t');
    const auto name = line.substr(0, tab);
    const auto id = tab == std::string::npos ? std::string{} : line.substr(tab + 1);
    auto* target = name == "train" ? &split.train : name == "val" ? &split.val : name == "test" ? &split.test : nullptr;
    if (target == nullptr || id.empty()) {
      throw Error(ErrorCode::config, path.string() + " line " + std::to_string(line_no) + ": malformed entry");
    }
    target->push_back(id);
  }
  return split;
}

SimulateResult cmd_simulate(const ExperimentConfig& config) {
  const Dataset dataset = synthesize_dataset(config.dataset, config.mask);
  std::vector<std::string> ids;
  for (const auto& s : dataset) {
    ids.push_back(s.kspace.slice_id);
  }
  const DatasetSplit split = split_dataset(ids, config.split, config.dataset.seed);
  SimulateResult result{config.resolved_dataset_path(), config.split_manifest_path(), dataset.size()};
  write_dataset(result.dataset, dataset);
  write_split_manifest(result.manifest, split);
  return result;
}

TrainResult cmd_train(const ExperimentConfig& config, const EpochCallback& on_epoch) {
  const auto path = config.resolved_dataset_path();
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::io, "dataset " + path.string() + " does not exist; run simulate first");
  }
  const Dataset dataset = read_dataset(path);
  const DatasetSplit split = read_split_manifest(config.split_manifest_path());
  return train(dataset, split, config.cascade, config.train, on_epoch);
}

void write_pgm16(const std::filesystem::path& path, const Tensor& image, double scale) {
  const auto h = image.dim(image.rank() - 2);
  const auto w = image.dim(image.rank() - 1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  out << "P5\n" << w << ' ' << h << "\n65535\n";
  for (double v : image.data()) {
    const double unit = scale > 0.0 ? std::clamp(v / scale, 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(unit * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
}

namespace {

void check_compatible(const CascadeConfig& cascade, const DatasetSlice& s) {
  const auto factor = std::size_t{1} << (std::max(cascade.inet.depth, cascade.knet.depth) - 1);
  if (s.kspace.ncoil() != cascade.ncoil || s.kspace.height() % factor != 0 || s.kspace.width() % factor != 0) {
    throw Error(ErrorCode::shape_mismatch,
                "slice " + s.kspace.slice_id + " has shape " + shape_string(s.kspace.data.tensor.shape()) +
                    " but the model expects [1," + std::to_string(2 * cascade.ncoil) + ",H,W] with H, W divisible by " +
                    std::to_string(factor));
  }
}

} // namespace

std::vector<std::filesystem::path> cmd_reconstruct(const ExperimentConfig& config,
                                                   const std::filesystem::path& checkpoint,
                                                   const std::vector<std::string>& slice_ids,
                                                   const std::filesystem::path& out_dir) {
  const Dataset dataset = read_dataset(config.resolved_dataset_path());
  const CascadeModel model = load_model(checkpoint, config.cascade);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& id : slice_ids) {
    const auto& s = find_slice(dataset, id);
    check_compatible(config.cascade, s);
    const KSpaceVolume sparse = apply_mask(s.kspace, s.mask);
    const Tensor truth = rss_reconstruct(s.kspace);
    const Tensor zero_fill = zero_fill_reconstruct(sparse);
    const auto out = model.forward(sparse.data, std::span(&s.mask, 1));
    const double peak = *std::max_element(truth.data().begin(), truth.data().end());
    for (const auto& [suffix, image] :
         {std::pair{"_recon.pgm", &out.final_image}, {"_zerofill.pgm", &zero_fill}, {"_truth.pgm", &truth}}) {
      const auto path = out_dir / (id + suffix);
      write_pgm16(path, *image, peak);
      written.push_back(path);
    }
  }
  return written;
}

std::string method_name(const CascadeConfig& cascade) {
  return "cascade_N" + std::to_string(cascade.n_iterations) +
         (cascade.use_cross_iteration_residual && cascade.n_iterations > 1 ? "_residual" : "");
}

EvaluationReports cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                               const std::string& split_name) {
  const Dataset dataset = read_dataset(config.resolved_dataset_path());
  const DatasetSplit split = read_split_manifest(config.split_manifest_path());
  const std::vector<std::string>* ids = split_name == "train" ? &split.train
                                        : split_name == "val" ? &split.val
                                        : split_name == "test" ? &split.test
                                                               : nullptr;
  if (ids == nullptr) {
    throw Error(ErrorCode::invalid_argument, "evaluate: unknown split '" + split_name + "'");
  }
  if (ids->empty()) {
    throw Error(ErrorCode::empty_split, "evaluate: split '" + split_name + "' is empty");
  }
  const CascadeModel model = load_model(checkpoint, config.cascade);

  const auto n = ids->size();
  std::vector<MetricRow> zf_image(n), zf_kspace(n), net_image(n), net_kspace(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& s = find_slice(dataset, (*ids)[i]);
    check_compatible(config.cascade, s);
    const KSpaceVolume sparse = apply_mask(s.kspace, s.mask);
    const Tensor truth = rss_reconstruct(s.kspace);
    const Tensor zero_fill = zero_fill_reconstruct(sparse);
    const auto out = model.forward(sparse.data, std::span(&s.mask, 1));
    const Tensor recon(truth.shape(), std::vector<double>(out.final_image.data().begin(), out.final_image.data().end()));
    const auto& id = s.kspace.slice_id;
    zf_image[i] = {id, image_metrics(zero_fill, truth)};
    net_image[i] = {id, image_metrics(recon, truth)};
    zf_kspace[i] = {id, kspace_metrics(sparse.data.tensor, s.kspace.data.tensor)};
    net_kspace[i] = {id, kspace_metrics(out.kspaces.back().tensor, s.kspace.data.tensor)};
  });

  const auto name = method_name(config.cascade);
  EvaluationReports reports;
  reports.image = {{"zero_fill", zf_image}, {name, net_image}};
  reports.kspace = {{"zero_fill", zf_kspace}, {name, net_kspace}};
  const std::vector<std::string> notes = {
      "split: " + split_name + " (" + std::to_string(n) + " slices), checkpoint: " + checkpoint.filename().string(),
      "training loss convention: l2 = mean squared error (squared norm / element count)",
      "NMSE% = 100*||pred-ref||^2/||ref||^2; SSIM window 7, k1 0.01, k2 0.03, range max(ref)-min(ref)"};
  auto kspace_notes = notes;
  kspace_notes.push_back("k-space NMSE over real and imaginary parts; SSIM and PSNR on per-coil magnitudes");
  reports.image_text = format_report("reconstructed image quality (R_out vs RSS of full k-space)", reports.image, notes);
  reports.kspace_text = format_report("predicted k-space quality (K_N vs full k-space)", reports.kspace, kspace_notes);
  return reports;
}

} // namespace ddrecon
