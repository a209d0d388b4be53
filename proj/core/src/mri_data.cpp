#include "ddrecon/mri_data.hpp"

#include "ddrecon/error.hpp"
#include "ddrecon/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

namespace ddrecon {

KSpaceVolume make_kspace_volume(Tensor kspace, std::string slice_id) {
  if (kspace.rank() != 4 || kspace.dim(0) != 1 || kspace.dim(1) % 2 != 0 || kspace.dim(1) < 2) {
    throw Error(ErrorCode::shape_mismatch,
                "k-space volume must be [1, 2*ncoil, H, W] with ncoil >= 1, got " + shape_string(kspace.shape()));
  }
  return KSpaceVolume{ComplexImage{std::move(kspace), Domain::kspace}, std::move(slice_id)};
}

std::size_t SamplingMask::kept() const {
  return static_cast<std::size_t>(std::count_if(lines.begin(), lines.end(), [](auto v) { return v != 0; }));
}

CenterBlock center_block(std::size_t width, double center_fraction) {
  const auto count = static_cast<std::size_t>(std::lround(center_fraction * static_cast<double>(width)));
  if (count == 0) {
    return {width / 2, 0};
  }
  return {width / 2 - count / 2, count};
}

SamplingMask generate_mask(std::size_t width, double acceleration, double center_fraction, std::uint64_t seed) {
  if (width < 8) {
    throw Error(ErrorCode::invalid_argument, "generate_mask: width " + std::to_string(width) + " < 8");
  }
  if (!(acceleration > 1.0)) {
    throw Error(ErrorCode::invalid_argument,
                "generate_mask: acceleration must exceed 1, got " + std::to_string(acceleration));
  }
  if (!(center_fraction >= 0.0 && center_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument,
                "generate_mask: center_fraction must lie in [0, 1), got " + std::to_string(center_fraction));
  }
  const auto target = static_cast<std::size_t>(std::lround(static_cast<double>(width) / acceleration));
  const CenterBlock center = center_block(width, center_fraction);
  if (center.count > target) {
    throw Error(ErrorCode::infeasible, "generate_mask: centre block of " + std::to_string(center.count) +
                                           " lines exceeds the budget of " + std::to_string(target) +
                                           " lines at acceleration " + std::to_string(acceleration));
  }

  SamplingMask mask{std::vector<std::uint8_t>(width, 0), acceleration, center_fraction, seed};
  std::vector<std::size_t> outside;
  for (std::size_t c = 0; c < width; ++c) {
    if (c >= center.first && c < center.first + center.count) {
      mask.lines[c] = 1;
    } else {
      outside.push_back(c);
    }
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(outside));
  for (std::size_t i = 0; i < target - center.count; ++i) {
    mask.lines[outside[i]] = 1;
  }
  return mask;
}

KSpaceVolume apply_mask(const KSpaceVolume& k, const SamplingMask& mask) {
  if (mask.width() != k.width()) {
    throw Error(ErrorCode::shape_mismatch, "apply_mask: mask width " + std::to_string(mask.width()) +
                                               " != k-space width " + std::to_string(k.width()));
  }
  Tensor out = k.data.tensor.clone();
  auto v = out.mutable_data();
  const auto w = k.width();
  const auto rows = v.size() / w;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.sampled(c)) {
        v[r * w + c] = 0.0;
      }
    }
  }
  return KSpaceVolume{ComplexImage{out, Domain::kspace}, k.slice_id};
}

Tensor rss_combine(const Tensor& coil_images) {
  if (coil_images.rank() != 4 || coil_images.dim(1) % 2 != 0) {
    throw Error(ErrorCode::shape_mismatch, "rss: expected [N, 2*ncoil, H, W], got " + shape_string(coil_images.shape()));
  }
  const auto n = coil_images.dim(0);
  const auto ncoil = coil_images.dim(1) / 2;
  const auto hw = coil_images.dim(2) * coil_images.dim(3);
  Tensor out(Shape{n, coil_images.dim(2), coil_images.dim(3)});
  auto x = coil_images.data();
  auto o = out.mutable_data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < hw; ++p) {
      double acc = 0.0;
      for (std::size_t c = 0; c < ncoil; ++c) {
        const double re = x[((b * ncoil + c) * 2) * hw + p];
        const double im = x[((b * ncoil + c) * 2 + 1) * hw + p];
        acc += re * re + im * im;
      }
      o[b * hw + p] = std::sqrt(acc);
    }
  }
  return out;
}

Tensor rss_reconstruct(const KSpaceVolume& k) {
  Tensor images = ifft2c(k.data.tensor.clone());
  Tensor combined = rss_combine(images);
  return Tensor(Shape{k.height(), k.width()}, std::vector<double>(combined.data().begin(), combined.data().end()));
}

Tensor zero_fill_reconstruct(const KSpaceVolume& k_sparse) { return rss_reconstruct(k_sparse); }

Tensor generate_phantom(std::size_t height, std::size_t width, std::size_t n_ellipses, std::uint64_t seed) {
  struct Ellipse {
    double cx, cy, a, b, angle, intensity;
  };
  Rng rng(seed);
  std::vector<Ellipse> ellipses;
  for (std::size_t e = 0; e < n_ellipses; ++e) {
    if (e == 0) {
      ellipses.push_back({rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.6, 0.85),
                          rng.uniform(0.7, 0.9), rng.uniform(-0.3, 0.3), rng.uniform(0.5, 0.9)});
    } else {
      ellipses.push_back({rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45), rng.uniform(0.05, 0.3),
                          rng.uniform(0.05, 0.3), rng.uniform(0.0, std::numbers::pi), rng.uniform(-0.3, 0.4)});
    }
  }

  Tensor image(Shape{height, width});
  auto v = image.mutable_data();
  for (std::size_t i = 0; i < height; ++i) {
    const double y = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(height) - 1.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(width) - 1.0;
      double value = 0.0;
      for (const auto& e : ellipses) {
        const double dx = x - e.cx;
        const double dy = y - e.cy;
        const double u = (dx * std::cos(e.angle) + dy * std::sin(e.angle)) / e.a;
        const double w = (-dx * std::sin(e.angle) + dy * std::cos(e.angle)) / e.b;
        if (u * u + w * w <= 1.0) {
          value += e.intensity;
        }
      }
      v[i * width + j] = std::clamp(value, 0.0, 1.0);
    }
  }
  return image;
}

Tensor coil_sensitivities(std::size_t height, std::size_t width, std::size_t ncoil, std::uint64_t seed) {
  if (ncoil == 0) {
    throw Error(ErrorCode::invalid_argument, "coil_sensitivities: ncoil must be >= 1");
  }
  constexpr double radius = 1.0;
  constexpr double sigma = 0.8;
  Rng rng(seed);
  std::vector<std::array<double, 2>> ramps(ncoil);
  for (auto& r : ramps) {
    r = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
  }

  const auto hw = height * width;
  Tensor maps(Shape{ncoil, 2, height, width});
  auto m = maps.mutable_data();
  std::vector<double> energy(hw, 0.0);
  for (std::size_t c = 0; c < ncoil; ++c) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(ncoil);
    const double ccx = radius * std::cos(theta);
    const double ccy = radius * std::sin(theta);
    for (std::size_t i = 0; i < height; ++i) {
      const double y = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(height) - 1.0;
      for (std::size_t j = 0; j < width; ++j) {
        const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(width) - 1.0;
        const double d2 = (x - ccx) * (x - ccx) + (y - ccy) * (y - ccy);
        const double mag = ncoil == 1 ? 1.0 : std::exp(-d2 / (2.0 * sigma * sigma));
        const double phase = std::numbers::pi * (ramps[c][0] * x + ramps[c][1] * y);
        const auto p = i * width + j;
        m[(2 * c) * hw + p] = mag * std::cos(phase);
        m[(2 * c + 1) * hw + p] = mag * std::sin(phase);
        energy[p] += mag * mag;
      }
    }
  }
  for (std::size_t c = 0; c < ncoil; ++c) {
    for (std::size_t p = 0; p < hw; ++p) {
      const double norm = 1.0 / std::sqrt(energy[p]);
      m[(2 * c) * hw + p] *= norm;
      m[(2 * c + 1) * hw + p] *= norm;
    }
  }
  return maps;
}

KSpaceVolume simulate_coils(const Tensor& image, std::size_t ncoil, std::uint64_t seed, double noise_sigma,
                            std::string slice_id) {
  if (image.rank() != 2) {
    throw Error(ErrorCode::shape_mismatch, "simulate_coils: image must be [H, W], got " + shape_string(image.shape()));
  }
  if (ncoil == 0) {
    throw Error(ErrorCode::invalid_argument, "simulate_coils: ncoil must be >= 1");
  }
  const auto h = image.dim(0);
  const auto w = image.dim(1);
  const auto hw = h * w;
  const Tensor maps = coil_sensitivities(h, w, ncoil, seed);
  Tensor coils(Shape{1, 2 * ncoil, h, w});
  auto c = coils.mutable_data();
  auto s = maps.data();
  auto x = image.data();
  for (std::size_t k = 0; k < 2 * ncoil; ++k) {
    for (std::size_t p = 0; p < hw; ++p) {
      c[k * hw + p] = s[k * hw + p] * x[p];
    }
  }
  Tensor kspace = fft2c(coils);
  if (noise_sigma > 0.0) {
    Rng rng(mix_seed(seed, 0x6e6f697365ULL));
    for (auto& v : kspace.mutable_data()) {
      v += noise_sigma * rng.normal();
    }
  }
  return make_kspace_volume(std::move(kspace), std::move(slice_id));
}

DatasetSplit split_dataset(std::span<const std::string> ids, std::array<double, 3> fractions, std::uint64_t seed) {
  if (ids.size() < 3) {
    throw Error(ErrorCode::invalid_argument,
                "split_dataset: need at least 3 ids, got " + std::to_string(ids.size()));
  }
  if (std::any_of(fractions.begin(), fractions.end(), [](double f) { return !(f >= 0.0); }) ||
      std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "split_dataset: fractions must be non-negative and sum to 1");
  }
  std::unordered_set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) {
    throw Error(ErrorCode::invalid_argument, "split_dataset: slice ids are not unique");
  }
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));

  const double n = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(std::floor(n * fractions[0] + 1e-9));
  const auto n_val = std::min(order.size() - n_train, static_cast<std::size_t>(std::floor(n * fractions[1] + 1e-9)));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

} // namespace ddrecon
