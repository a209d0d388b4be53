#include "ddrecon/se_net.hpp"

#include "ddrecon/error.hpp"
#include "ddrecon/ops.hpp"

#include <cmath>

namespace ddrecon {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.mutable_data()) {
    v = rng.uniform(-bound, bound);
  }
  t.set_requires_grad(true);
  return t;
}

Tensor conv_relu(const Tensor& x, const ConvParams& p) {
  return ops::relu(ops::conv2d(x, p.weight, p.bias, 1, static_cast<int>(p.weight.dim(2) / 2)));
}

void push_conv(std::vector<NamedTensor>& out, const std::string& name, const ConvParams& p) {
  out.push_back({name + ".weight", p.weight});
  out.push_back({name + ".bias", p.bias});
}

void push_se(std::vector<NamedTensor>& out, const std::string& name, const SEModuleParams& p) {
  out.push_back({name + ".fc1.weight", p.fc1_weight});
  out.push_back({name + ".fc1.bias", p.fc1_bias});
  out.push_back({name + ".fc2.weight", p.fc2_weight});
  out.push_back({name + ".fc2.bias", p.fc2_bias});
  out.push_back({name + ".spatial.weight", p.spatial_weight});
  out.push_back({name + ".spatial.bias", p.spatial_bias});
}

} // namespace

void SENetConfig::validate() const {
  if (depth == 0) {
    throw Error(ErrorCode::invalid_argument, "senet: depth must be >= 1");
  }
  if (in_channels == 0 || out_channels == 0) {
    throw Error(ErrorCode::invalid_argument, "senet: channel counts must be positive");
  }
  if (reduction_ratio == 0 || base_width < reduction_ratio) {
    throw Error(ErrorCode::invalid_argument, "senet: base_width " + std::to_string(base_width) +
                                                 " must be >= reduction_ratio " + std::to_string(reduction_ratio));
  }
  for (std::size_t l = 0; l < depth; ++l) {
    if (level_width(l) % reduction_ratio != 0) {
      throw Error(ErrorCode::invalid_argument, "senet: reduction_ratio " + std::to_string(reduction_ratio) +
                                                   " does not divide level width " + std::to_string(level_width(l)));
    }
  }
}

ConvParams init_conv(std::size_t cin, std::size_t cout, std::size_t kernel, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(cin * kernel * kernel));
  ConvParams p;
  p.weight = uniform_tensor({cout, cin, kernel, kernel}, bound, rng);
  p.bias = uniform_tensor({cout}, bound, rng);
  return p;
}

SEModuleParams init_se_module(std::size_t channels, std::size_t reduction_ratio, Rng& rng) {
  if (reduction_ratio == 0 || channels % reduction_ratio != 0) {
    throw Error(ErrorCode::invalid_argument, "se module: reduction ratio " + std::to_string(reduction_ratio) +
                                                 " does not divide " + std::to_string(channels) + " channels");
  }
  const auto hidden = channels / reduction_ratio;
  const double b1 = std::sqrt(1.0 / static_cast<double>(channels));
  const double b2 = std::sqrt(1.0 / static_cast<double>(hidden));
  SEModuleParams p;
  p.fc1_weight = uniform_tensor({hidden, channels}, b1, rng);
  p.fc1_bias = uniform_tensor({hidden}, b1, rng);
  p.fc2_weight = uniform_tensor({channels, hidden}, b2, rng);
  p.fc2_bias = uniform_tensor({channels}, b2, rng);
  p.spatial_weight = uniform_tensor({1, channels, 1, 1}, b1, rng);
  p.spatial_bias = uniform_tensor({1}, b1, rng);
  p.reduction_ratio = reduction_ratio;
  return p;
}

Tensor se_module_forward(const Tensor& input, const SEModuleParams& params) {
  if (input.rank() != 4 || input.dim(1) != params.channels()) {
    throw Error(ErrorCode::shape_mismatch, "se module: input " + shape_string(input.shape()) + " does not have " +
                                               std::to_string(params.channels()) + " channels");
  }
  const Tensor squeezed = ops::global_avg_pool(input);
  const Tensor hidden = ops::relu(ops::fully_connected(squeezed, params.fc1_weight, params.fc1_bias));
  const Tensor channel_gate = ops::sigmoid(ops::fully_connected(hidden, params.fc2_weight, params.fc2_bias));
  const Tensor channel_recal = ops::channelwise_scale(input, channel_gate);

  const Tensor spatial_gate = ops::sigmoid(ops::conv2d(input, params.spatial_weight, params.spatial_bias, 1, 0));
  const Tensor spatial_recal = ops::pointwise_scale(input, spatial_gate);

  return ops::add(channel_recal, spatial_recal);
}

SENet::SENet(SENetConfig config, Rng& rng) : config_(config) {
  config_.validate();
  const auto depth = config_.depth;
  std::size_t cin = config_.in_channels;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto width = config_.level_width(l);
    Level level;
    level.conv1 = init_conv(cin, width, 3, rng);
    level.conv2 = init_conv(width, width, 3, rng);
    level.se = init_se_module(width, config_.reduction_ratio, rng);
    encoder_.push_back(std::move(level));
    cin = width;
  }
  decoder_.resize(depth - 1);
  for (std::size_t l = depth - 1; l-- > 0;) {
    const auto width = config_.level_width(l);
    Level level;
    level.conv1 = init_conv(config_.level_width(l + 1) + width, width, 3, rng);
    level.conv2 = init_conv(width, width, 3, rng);
    level.se = init_se_module(width, config_.reduction_ratio, rng);
    decoder_[l] = std::move(level);
  }
  head_ = init_conv(config_.base_width, config_.out_channels, 1, rng);
}

Tensor SENet::forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != config_.in_channels) {
    throw Error(ErrorCode::shape_mismatch, "senet: input " + shape_string(x.shape()) + " needs " +
                                               std::to_string(config_.in_channels) + " channels");
  }
  const std::size_t factor = std::size_t{1} << (config_.depth - 1);
  if (x.dim(2) % factor != 0 || x.dim(3) % factor != 0) {
    throw Error(ErrorCode::shape_mismatch, "senet: spatial dims " + std::to_string(x.dim(2)) + "x" +
                                               std::to_string(x.dim(3)) + " are not divisible by " +
                                               std::to_string(factor) + " for depth " + std::to_string(config_.depth));
  }

  std::vector<Tensor> skips;
  Tensor h = x;
  for (std::size_t l = 0; l < config_.depth; ++l) {
    const auto& level = encoder_[l];
    h = se_module_forward(conv_relu(conv_relu(h, level.conv1), level.conv2), level.se);
    if (l + 1 < config_.depth) {
      skips.push_back(h);
      h = ops::avg_pool2x2(h);
    }
  }
  for (std::size_t l = config_.depth - 1; l-- > 0;) {
    const auto& level = decoder_[l];
    h = ops::concat_channels(ops::upsample_nearest2x(h), skips[l]);
    h = se_module_forward(conv_relu(conv_relu(h, level.conv1), level.conv2), level.se);
  }
  Tensor out = ops::conv2d(h, head_.weight, head_.bias, 1, 0);
  if (config_.in_channels == config_.out_channels) {
    out = ops::add(out, x);
  }
  return out;
}

std::vector<NamedTensor> SENet::parameters(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const auto name = prefix + ".enc" + std::to_string(l);
    push_conv(out, name + ".conv1", encoder_[l].conv1);
    push_conv(out, name + ".conv2", encoder_[l].conv2);
    push_se(out, name + ".se", encoder_[l].se);
  }
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto name = prefix + ".dec" + std::to_string(l);
    push_conv(out, name + ".conv1", decoder_[l].conv1);
    push_conv(out, name + ".conv2", decoder_[l].conv2);
    push_se(out, name + ".se", decoder_[l].se);
  }
  push_conv(out, prefix + ".head", head_);
  return out;
}

Tensor senet_forward(const Tensor& x, const SENet& net) { return net.forward(x); }

} // namespace ddrecon
