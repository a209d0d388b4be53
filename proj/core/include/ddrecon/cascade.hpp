#pragma once

#include "ddrecon/fourier.hpp"
#include "ddrecon/mri_data.hpp"
#include "ddrecon/se_net.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ddrecon {

struct DCConfig {
  double lambda = 0.05;
};

struct CascadeConfig {
  std::size_t n_iterations = 2;
  bool use_cross_iteration_residual = true;
  SENetConfig inet;
  SENetConfig knet;
  DCConfig dc;
  std::size_t ncoil = 4;

  /// Checks N >= 1, lambda >= 0, both networks valid, and 2*ncoil channels
  /// at every domain boundary.
  void validate() const;
};

struct CascadeOutputs {
  std::vector<ComplexImage> images;  // I_1 .. I_N
  std::vector<ComplexImage> kspaces; // K_1 .. K_N
  Tensor final_image;                // RSS of K_N, [B, H, W]
};

/// Intermediate tensors recorded for wiring checks.
struct CascadeTrace {
  std::vector<Tensor> inet_inputs;      // network input of each I-Net
  std::vector<Tensor> knet_inputs;      // k-space before the first DC
  std::vector<Tensor> knet_net_outputs; // network output before the second DC
};

/// Sampled columns (per-sample mask) become (lambda*K_pre + K_S)/(lambda+1);
/// unsampled columns pass K_pre through. Differentiable in K_pre only.
ComplexImage data_consistency(const ComplexImage& k_pre, const ComplexImage& k_sampled,
                              std::span<const SamplingMask> masks, double lambda);

Tensor inet_forward(const ComplexImage& k_in, const std::optional<ComplexImage>& residual_image, const SENet& net,
                    CascadeTrace* trace = nullptr);

Tensor knet_forward(const ComplexImage& i_in, const std::optional<ComplexImage>& residual_kspace,
                    const ComplexImage& k_sampled, std::span<const SamplingMask> masks, const SENet& net, double lambda,
                    CascadeTrace* trace = nullptr);

/// Ordered (I-Net, K-Net) blocks with independent parameters per iteration.
class CascadeModel {
public:
  CascadeModel() = default;
  CascadeModel(CascadeConfig config, std::uint64_t seed);

  const CascadeConfig& config() const { return config_; }

  /// `k_sampled` is the masked k-space [B, 2*ncoil, H, W]; `masks` has B
  /// entries.
  CascadeOutputs forward(const ComplexImage& k_sampled, std::span<const SamplingMask> masks,
                         CascadeTrace* trace = nullptr) const;

  std::vector<NamedTensor> parameters() const;

  /// Copies values from `tensors` by name; every model parameter must be
  /// present with a matching shape.
  void load_parameters(std::span<const NamedTensor> tensors);

private:
  struct Block {
    SENet inet;
    SENet knet;
  };
  CascadeConfig config_;
  std::vector<Block> blocks_;
};

CascadeOutputs ddcsenet_forward(const ComplexImage& k_sampled, std::span<const SamplingMask> masks,
                                const CascadeModel& model);

} // namespace ddrecon
