#pragma once

#include "ddrecon/tensor.hpp"

namespace ddrecon {

enum class Domain { image, kspace };

/// Multi-coil complex data as a real tensor [N, 2*ncoil, H, W]: channel 2k is
/// the real part and 2k+1 the imaginary part of coil k.
struct ComplexImage {
  Tensor tensor;
  Domain domain = Domain::image;

  std::size_t batch() const { return tensor.dim(0); }
  std::size_t ncoil() const { return tensor.dim(1) / 2; }
  std::size_t height() const { return tensor.dim(2); }
  std::size_t width() const { return tensor.dim(3); }
};

/// Centered orthonormal 2D DFT per coil: ifftshift, DFT, fftshift, scaled by
/// 1/sqrt(H*W). Any H, W are accepted. Differentiable: the backward pass is
/// the inverse transform.
Tensor fft2c(const Tensor& x);
Tensor ifft2c(const Tensor& x);

/// Domain-checked wrappers: fft2c needs an image, ifft2c k-space.
ComplexImage fft2c(const ComplexImage& x);
ComplexImage ifft2c(const ComplexImage& x);

/// Elementwise sum of two complex images in the same domain.
ComplexImage add(const ComplexImage& a, const ComplexImage& b);

} // namespace ddrecon
