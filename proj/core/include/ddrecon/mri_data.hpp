#pragma once

#include "ddrecon/fourier.hpp"
#include "ddrecon/tensor.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddrecon {

/// Fully or partially sampled k-space of one slice; `data.tensor` is
/// [1, 2*ncoil, H, W] in the k-space domain.
struct KSpaceVolume {
  ComplexImage data{Tensor{}, Domain::kspace};
  std::string slice_id;

  std::size_t ncoil() const { return data.ncoil(); }
  std::size_t height() const { return data.height(); }
  std::size_t width() const { return data.width(); }
};

KSpaceVolume make_kspace_volume(Tensor kspace, std::string slice_id);

/// Phase-encode line mask over the width (column) axis.
struct SamplingMask {
  std::vector<std::uint8_t> lines;
  double acceleration = 1.0;
  double center_fraction = 0.0;
  std::uint64_t seed = 0;

  std::size_t width() const { return lines.size(); }
  std::size_t kept() const;
  bool sampled(std::size_t column) const { return lines[column] != 0; }
};

/// Column range [first, first + count) of the always-kept central block.
struct CenterBlock {
  std::size_t first = 0;
  std::size_t count = 0;
};

CenterBlock center_block(std::size_t width, double center_fraction);

/// Keeps round(center_fraction*width) central columns plus exactly
/// round(width/acceleration) - center columns chosen uniformly at random
/// from the rest. Throws infeasible when the centre alone exceeds the budget.
SamplingMask generate_mask(std::size_t width, double acceleration, double center_fraction, std::uint64_t seed);

/// Zeroes the unsampled columns of every coil; kept columns are copied
/// unchanged.
KSpaceVolume apply_mask(const KSpaceVolume& k, const SamplingMask& mask);

/// sqrt(sum_c |coil image_c|^2) of a coil-image tensor [N, 2C, H, W] -> [N, H, W].
Tensor rss_combine(const Tensor& coil_images);

/// RSS of ifft2c(k): [H, W], non-negative.
Tensor rss_reconstruct(const KSpaceVolume& k);

/// No-learning baseline: RSS of the masked k-space.
Tensor zero_fill_reconstruct(const KSpaceVolume& k_sparse);

/// Random Shepp-Logan-style phantom in [0, 1]: one large body ellipse and
/// n_ellipses - 1 internal features of random intensity.
Tensor generate_phantom(std::size_t height, std::size_t width, std::size_t n_ellipses, std::uint64_t seed);

/// Complex sensitivity maps [ncoil, 2, H, W]. Magnitudes are Gaussians
/// centred at evenly spaced angles around the field of view with linear
/// phase ramps, normalised so sum_c |S_c|^2 == 1 at every pixel.
Tensor coil_sensitivities(std::size_t height, std::size_t width, std::size_t ncoil, std::uint64_t seed);

/// Fully sampled multi-coil k-space of `image` [H, W]. When noise_sigma > 0,
/// complex Gaussian noise of that standard deviation per component is added.
KSpaceVolume simulate_coils(const Tensor& image, std::size_t ncoil, std::uint64_t seed, double noise_sigma = 0.0,
                            std::string slice_id = {});

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

inline constexpr std::array<double, 3> default_split_fractions{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};

/// Seeded shuffle, then contiguous partition. Train and validation sizes are
/// floor(n * fraction) (with a 1e-9 guard against representation error);
/// test takes the remainder.
DatasetSplit split_dataset(std::span<const std::string> ids, std::array<double, 3> fractions, std::uint64_t seed);

} // namespace ddrecon
