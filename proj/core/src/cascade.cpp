#include "ddrecon/cascade.hpp"

#include "ddrecon/error.hpp"

#include <map>

namespace ddrecon {

void CascadeConfig::validate() const {
  if (n_iterations == 0) {
    throw Error(ErrorCode::invalid_argument, "cascade: n_iterations must be >= 1");
  }
  if (!(dc.lambda >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "cascade: dc lambda must be >= 0");
  }
  if (ncoil == 0) {
    throw Error(ErrorCode::invalid_argument, "cascade: ncoil must be >= 1");
  }
  inet.validate();
  knet.validate();
  const auto channels = 2 * ncoil;
  for (const auto* net : {&inet, &knet}) {
    if (net->in_channels != channels || net->out_channels != channels) {
      throw Error(ErrorCode::invalid_argument, "cascade: networks must map " + std::to_string(channels) +
                                                   " channels to " + std::to_string(channels) + ", got " +
                                                   std::to_string(net->in_channels) + " -> " +
                                                   std::to_string(net->out_channels));
    }
  }
}

ComplexImage data_consistency(const ComplexImage& k_pre, const ComplexImage& k_sampled,
                              std::span<const SamplingMask> masks, double lambda) {
  if (k_pre.domain != Domain::kspace || k_sampled.domain != Domain::kspace) {
    throw Error(ErrorCode::invalid_argument, "data_consistency: operands must be k-space");
  }
  const Tensor& pre = k_pre.tensor;
  const Tensor& meas = k_sampled.tensor;
  if (pre.shape() != meas.shape()) {
    throw Error(ErrorCode::shape_mismatch, "data_consistency: prediction " + shape_string(pre.shape()) +
                                               " vs measurement " + shape_string(meas.shape()));
  }
  if (masks.size() != pre.dim(0)) {
    throw Error(ErrorCode::shape_mismatch, "data_consistency: " + std::to_string(masks.size()) + " masks for batch " +
                                               std::to_string(pre.dim(0)));
  }
  const auto w = pre.dim(3);
  for (const auto& m : masks) {
    if (m.width() != w) {
      throw Error(ErrorCode::shape_mismatch,
                  "data_consistency: mask width " + std::to_string(m.width()) + " != " + std::to_string(w));
    }
  }
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "data_consistency: lambda must be >= 0");
  }

  const auto rows_per_sample = pre.dim(1) * pre.dim(2);
  const double keep = lambda / (lambda + 1.0);
  const double inv = 1.0 / (lambda + 1.0);
  Tensor out(pre.shape());
  auto p = pre.data();
  auto s = meas.data();
  auto o = out.mutable_data();
  for (std::size_t b = 0; b < pre.dim(0); ++b) {
    const auto& mask = masks[b];
    for (std::size_t r = 0; r < rows_per_sample; ++r) {
      const auto base = (b * rows_per_sample + r) * w;
      for (std::size_t c = 0; c < w; ++c) {
        const auto i = base + c;
        o[i] = mask.sampled(c) ? (lambda * p[i] + s[i]) * inv : p[i];
      }
    }
  }
  std::vector<std::vector<std::uint8_t>> lines;
  for (const auto& m : masks) {
    lines.push_back(m.lines);
  }
  record_op({pre}, out, [pre, lines = std::move(lines), keep, rows_per_sample, w](std::span<const double> g) {
    auto gp = Tensor(pre).mutable_grad();
    for (std::size_t b = 0; b < lines.size(); ++b) {
      for (std::size_t r = 0; r < rows_per_sample; ++r) {
        const auto base = (b * rows_per_sample + r) * w;
        for (std::size_t c = 0; c < w; ++c) {
          gp[base + c] += lines[b][c] ? keep * g[base + c] : g[base + c];
        }
      }
    }
  });
  return {out, Domain::kspace};
}

Tensor inet_forward(const ComplexImage& k_in, const std::optional<ComplexImage>& residual_image, const SENet& net,
                    CascadeTrace* trace) {
  ComplexImage x = ifft2c(k_in);
  if (residual_image) {
    if (residual_image->tensor.shape() != x.tensor.shape()) {
      throw Error(ErrorCode::shape_mismatch, "inet: residual " + shape_string(residual_image->tensor.shape()) +
                                                 " vs input " + shape_string(x.tensor.shape()));
    }
    x = add(x, *residual_image);
  }
  if (trace) {
    trace->inet_inputs.push_back(x.tensor);
  }
  return net.forward(x.tensor);
}

Tensor knet_forward(const ComplexImage& i_in, const std::optional<ComplexImage>& residual_kspace,
                    const ComplexImage& k_sampled, std::span<const SamplingMask> masks, const SENet& net, double lambda,
                    CascadeTrace* trace) {
  ComplexImage k = fft2c(i_in);
  if (residual_kspace) {
    if (residual_kspace->tensor.shape() != k.tensor.shape()) {
      throw Error(ErrorCode::shape_mismatch, "knet: residual " + shape_string(residual_kspace->tensor.shape()) +
                                                 " vs input " + shape_string(k.tensor.shape()));
    }
    k = add(k, *residual_kspace);
  }
  if (trace) {
    trace->knet_inputs.push_back(k.tensor);
  }
  const ComplexImage consistent = data_consistency(k, k_sampled, masks, lambda);
  const ComplexImage refined{net.forward(consistent.tensor), Domain::kspace};
  if (trace) {
    trace->knet_net_outputs.push_back(refined.tensor);
  }
  return data_consistency(refined, k_sampled, masks, lambda).tensor;
}

CascadeModel::CascadeModel(CascadeConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  for (std::size_t m = 0; m < config_.n_iterations; ++m) {
    Block block;
    block.inet = SENet(config_.inet, rng);
    block.knet = SENet(config_.knet, rng);
    blocks_.push_back(std::move(block));
  }
}

CascadeOutputs CascadeModel::forward(const ComplexImage& k_sampled, std::span<const SamplingMask> masks,
                                     CascadeTrace* trace) const {
  if (k_sampled.domain != Domain::kspace) {
    throw Error(ErrorCode::invalid_argument, "cascade: input must be k-space");
  }
  if (k_sampled.tensor.rank() != 4 || k_sampled.tensor.dim(1) != 2 * config_.ncoil) {
    throw Error(ErrorCode::shape_mismatch, "cascade: expected [B, " + std::to_string(2 * config_.ncoil) +
                                               ", H, W] k-space, got " + shape_string(k_sampled.tensor.shape()));
  }
  CascadeOutputs out;
  ComplexImage k_prev = k_sampled;
  for (std::size_t m = 0; m < blocks_.size(); ++m) {
    const bool residual = m > 0 && config_.use_cross_iteration_residual;
    std::optional<ComplexImage> image_residual;
    std::optional<ComplexImage> kspace_residual;
    if (residual) {
      image_residual = out.images.back();
      kspace_residual = out.kspaces.back();
    }
    ComplexImage image{inet_forward(k_prev, image_residual, blocks_[m].inet, trace), Domain::image};
    out.images.push_back(image);
    ComplexImage kspace{
        knet_forward(image, kspace_residual, k_sampled, masks, blocks_[m].knet, config_.dc.lambda, trace),
        Domain::kspace};
    out.kspaces.push_back(kspace);
    k_prev = kspace;
  }
  out.final_image = rss_combine(ifft2c(out.kspaces.back().tensor.clone()));
  return out;
}

std::vector<NamedTensor> CascadeModel::parameters() const {
  std::vector<NamedTensor> out;
  for (std::size_t m = 0; m < blocks_.size(); ++m) {
    const auto prefix = "iter" + std::to_string(m + 1);
    for (auto& p : blocks_[m].inet.parameters(prefix + ".inet")) {
      out.push_back(std::move(p));
    }
    for (auto& p : blocks_[m].knet.parameters(prefix + ".knet")) {
      out.push_back(std::move(p));
    }
  }
  return out;
}

void CascadeModel::load_parameters(std::span<const NamedTensor> tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) {
    by_name[t.name] = &t.tensor;
  }
  for (auto& p : parameters()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::shape_mismatch, "checkpoint lacks parameter " + p.name);
    }
    if (it->second->shape() != p.tensor.shape()) {
      throw Error(ErrorCode::shape_mismatch, "parameter " + p.name + ": checkpoint shape " +
                                                 shape_string(it->second->shape()) + " vs model shape " +
                                                 shape_string(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

CascadeOutputs ddcsenet_forward(const ComplexImage& k_sampled, std::span<const SamplingMask> masks,
                                const CascadeModel& model) {
  return model.forward(k_sampled, masks);
}

} // namespace ddrecon
