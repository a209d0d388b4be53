#pragma once

#include "ddrecon/random.hpp"
#include "ddrecon/tensor.hpp"

#include <string>
#include <vector>

namespace ddrecon {

struct SENetConfig {
  std::size_t in_channels = 8;
  std::size_t out_channels = 8;
  std::size_t base_width = 32;
  std::size_t depth = 3;
  std::size_t reduction_ratio = 8;

  /// Throws invalid_argument on depth 0, base_width < reduction_ratio, or a
  /// level width that the reduction ratio does not divide.
  void validate() const;
  std::size_t level_width(std::size_t level) const { return base_width << level; }
};

struct ConvParams {
  Tensor weight; // [Cout, Cin, k, k]
  Tensor bias;   // [Cout]
};

/// Two-branch squeeze-excitation parameters for C channels.
struct SEModuleParams {
  Tensor fc1_weight; // [C/r, C]
  Tensor fc1_bias;   // [C/r]
  Tensor fc2_weight; // [C, C/r]
  Tensor fc2_bias;   // [C]
  Tensor spatial_weight; // [1, C, 1, 1]
  Tensor spatial_bias;   // [1]
  std::size_t reduction_ratio = 1;

  std::size_t channels() const { return fc1_weight.dim(1); }
};

/// Uniform +-sqrt(1/fan_in) for weights and biases.
ConvParams init_conv(std::size_t cin, std::size_t cout, std::size_t kernel, Rng& rng);
SEModuleParams init_se_module(std::size_t channels, std::size_t reduction_ratio, Rng& rng);

/// Channel branch: v = mean_{i,j} F; gate = sigmoid(fc2(relu(fc1(v)))); F * gate.
/// Spatial branch: map = sigmoid(conv1x1(F)); F * map. Returns their sum.
Tensor se_module_forward(const Tensor& input, const SEModuleParams& params);

/// Contraction-expansion network: per encoder level two 3x3 conv+relu and an
/// SE module, 2x2 average pooling between levels; mirrored decoder with
/// nearest upsampling and skip concatenation; 1x1 output conv; input added
/// to the output when in_channels == out_channels.
class SENet {
public:
  SENet() = default;
  SENet(SENetConfig config, Rng& rng);

  const SENetConfig& config() const { return config_; }

  Tensor forward(const Tensor& x) const;

  /// Parameters in a fixed order with hierarchical names under `prefix`.
  std::vector<NamedTensor> parameters(const std::string& prefix) const;

private:
  struct Level {
    ConvParams conv1;
    ConvParams conv2;
    SEModuleParams se;
  };

  SENetConfig config_;
  std::vector<Level> encoder_;
  std::vector<Level> decoder_; // decoder_[l] produces level l, l < depth - 1
  ConvParams head_;
};

Tensor senet_forward(const Tensor& x, const SENet& net);

} // namespace ddrecon
