#pragma once

#include "ddrecon/tensor.hpp"

namespace ddrecon::ops {

// Elementwise. Operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// max(x, 0); the derivative at exactly 0 is taken as 0.
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Sum of all elements as a [1] tensor.
Tensor sum(const Tensor& x);

/// Same values, new shape with equal element count.
Tensor reshape(const Tensor& x, Shape shape);

/// 2D cross-correlation over NCHW input with OIHW weights. `bias` may be an
/// undefined tensor. Kernel sides must be odd.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1, int padding = 0);

/// input [N, Cin], weight [Cout, Cin], bias [Cout] -> [N, Cout].
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// [N, C, H, W] -> [N, C], spatial mean per channel.
Tensor global_avg_pool(const Tensor& input);

/// out[n,c,i,j] = input[n,c,i,j] * weights[n,c].
Tensor channelwise_scale(const Tensor& input, const Tensor& weights);

/// out[n,c,i,j] = input[n,c,i,j] * map[n,0,i,j].
Tensor pointwise_scale(const Tensor& input, const Tensor& map);

/// Non-overlapping 2x2 mean; H and W must be even.
Tensor avg_pool2x2(const Tensor& input);

/// Nearest-neighbour 2x spatial upsampling.
Tensor upsample_nearest2x(const Tensor& input);

/// Concatenates along the channel axis of two NCHW tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Mean squared error: ||pred - target||^2 / numel. The target never
/// receives a gradient.
Tensor l2_loss(const Tensor& pred, const Tensor& target);

} // namespace ddrecon::ops
