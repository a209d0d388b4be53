#include "ddrecon/fourier.hpp"

#include "ddrecon/error.hpp"
#include "ddrecon/ops.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace ddrecon {

namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (ptr == nullptr) {
      throw std::bad_alloc();
    }
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

// Plan creation is not thread-safe in FFTW; execution with the new-array
// interface is.
fftw_plan plan_for(std::size_t h, std::size_t w, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(h, w, sign);
  if (auto it = plans.find(key); it != plans.end()) {
    return it->second;
  }
  FftwBuffer in(h * w);
  FftwBuffer out(h * w);
  fftw_plan plan =
      fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in.ptr, out.ptr, sign, FFTW_ESTIMATE);
  if (plan == nullptr) {
    throw Error(ErrorCode::invalid_argument,
                "fft2c: FFTW could not plan a " + std::to_string(h) + "x" + std::to_string(w) + " transform");
  }
  plans.emplace(key, plan);
  return plan;
}

void check_complex_layout(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw Error(ErrorCode::shape_mismatch,
                std::string(op) + ": expected [N, 2*ncoil, H, W], got " + shape_string(x.shape()));
  }
  if (x.dim(1) % 2 != 0) {
    throw Error(ErrorCode::shape_mismatch, std::string(op) + ": channel count " + std::to_string(x.dim(1)) +
                                               " is odd; real/imaginary channels must pair up");
  }
}

// ifftshift -> DFT -> fftshift, orthonormal, applied to every coil plane.
void centered_transform(std::span<const double> in, std::span<double> out, const Shape& shape, bool inverse) {
  const auto planes = shape[0] * shape[1] / 2;
  const auto h = shape[2];
  const auto w = shape[3];
  const auto hw = h * w;
  const auto h_half = h / 2;
  const auto w_half = w / 2;
  const double norm = 1.0 / std::sqrt(static_cast<double>(hw));
  fftw_plan plan = plan_for(h, w, inverse ? FFTW_BACKWARD : FFTW_FORWARD);

  FftwBuffer src(hw);
  FftwBuffer dst(hw);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* re = in.data() + 2 * p * hw;
    const double* im = re + hw;
    // ifftshift: shifted[i] = x[(i + n/2) mod n]
    for (std::size_t i = 0; i < h; ++i) {
      const auto si = (i + h_half) % h;
      for (std::size_t j = 0; j < w; ++j) {
        const auto sj = (j + w_half) % w;
        src.ptr[i * w + j][0] = re[si * w + sj];
        src.ptr[i * w + j][1] = im[si * w + sj];
      }
    }
    fftw_execute_dft(plan, src.ptr, dst.ptr);
    double* out_re = out.data() + 2 * p * hw;
    double* out_im = out_re + hw;
    // fftshift: y[(i + n/2) mod n] = x[i]
    for (std::size_t i = 0; i < h; ++i) {
      const auto di = (i + h_half) % h;
      for (std::size_t j = 0; j < w; ++j) {
        const auto dj = (j + w_half) % w;
        out_re[di * w + dj] = dst.ptr[i * w + j][0] * norm;
        out_im[di * w + dj] = dst.ptr[i * w + j][1] * norm;
      }
    }
  }
}

Tensor transform(const Tensor& x, bool inverse) {
  check_complex_layout(x, inverse ? "ifft2c" : "fft2c");
  Tensor out(x.shape());
  centered_transform(x.data(), out.mutable_data(), x.shape(), inverse);
  record_op({x}, out, [x, inverse](std::span<const double> g) {
    std::vector<double> back(g.size());
    centered_transform(g, back, x.shape(), !inverse);
    accumulate_grad(x, back);
  });
  return out;
}

} // namespace

Tensor fft2c(const Tensor& x) { return transform(x, false); }

Tensor ifft2c(const Tensor& x) { return transform(x, true); }

ComplexImage fft2c(const ComplexImage& x) {
  if (x.domain != Domain::image) {
    throw Error(ErrorCode::invalid_argument, "fft2c: input is already in k-space");
  }
  return {fft2c(x.tensor), Domain::kspace};
}

ComplexImage ifft2c(const ComplexImage& x) {
  if (x.domain != Domain::kspace) {
    throw Error(ErrorCode::invalid_argument, "ifft2c: input is already in the image domain");
  }
  return {ifft2c(x.tensor), Domain::image};
}

ComplexImage add(const ComplexImage& a, const ComplexImage& b) {
  if (a.domain != b.domain) {
    throw Error(ErrorCode::invalid_argument, "add: cannot mix image and k-space operands");
  }
  return {ops::add(a.tensor, b.tensor), a.domain};
}

} // namespace ddrecon
