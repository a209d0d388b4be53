#include "ddrecon/error.hpp"
#include "ddrecon/fourier.hpp"
#include "ddrecon/grad_check.hpp"
#include "ddrecon/ops.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace ddrecon;
using ddrecon::testing::direct_centered_dft;
using ddrecon::testing::energy;
using ddrecon::testing::max_abs_diff;
using ddrecon::testing::random_tensor;

namespace {

struct Size {
  std::size_t h;
  std::size_t w;
};

class FourierSizes : public ::testing::TestWithParam<Size> {};

} // namespace

TEST_P(FourierSizes, MatchesDirectDft) {
  const auto [h, w] = GetParam();
  // The oracle is quartic, so the largest size uses a single coil.
  const Tensor x = h * w >= 64 * 64 ? random_tensor({1, 2, h, w}, 1000 + h * w) : random_tensor({2, 4, h, w}, 1000 + h * w);
  EXPECT_LT(max_abs_diff(fft2c(x).data(), direct_centered_dft(x, false).data()), 1e-9);
  EXPECT_LT(max_abs_diff(ifft2c(x).data(), direct_centered_dft(x, true).data()), 1e-9);
}

TEST_P(FourierSizes, RoundTripAndParseval) {
  const auto [h, w] = GetParam();
  const Tensor x = random_tensor({1, 6, h, w}, 2000 + h * w);
  const Tensor k = fft2c(x);
  EXPECT_LT(max_abs_diff(ifft2c(k).data(), x.data()), 1e-9);
  EXPECT_LT(max_abs_diff(fft2c(ifft2c(x)).data(), x.data()), 1e-9);
  EXPECT_NEAR(energy(k.data()), energy(x.data()), 1e-9 * energy(x.data()));
}

TEST_P(FourierSizes, Linearity) {
  const auto [h, w] = GetParam();
  const Tensor a = random_tensor({1, 2, h, w}, 3000 + h);
  const Tensor b = random_tensor({1, 2, h, w}, 3001 + w);
  const double alpha = 0.7;
  const double beta = -1.3;
  const Tensor combo = ops::add(ops::scale(a, alpha), ops::scale(b, beta));
  const Tensor expect = ops::add(ops::scale(fft2c(a), alpha), ops::scale(fft2c(b), beta));
  EXPECT_LT(max_abs_diff(fft2c(combo).data(), expect.data()), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Sizes, FourierSizes,
                         ::testing::Values(Size{8, 8}, Size{16, 16}, Size{32, 32}, Size{64, 64}, Size{15, 16},
                                           Size{9, 7}),
                         [](const ::testing::TestParamInfo<Size>& info) {
                           return std::to_string(info.param.h) + "x" + std::to_string(info.param.w);
                         });

TEST(Fourier, CenteredDeltaIsFlat) {
  // A unit impulse at the centre pixel transforms to the constant 1/sqrt(HW).
  Tensor x(Shape{1, 2, 8, 8}, 0.0);
  x.mutable_data()[4 * 8 + 4] = 1.0;
  const Tensor k = fft2c(x);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_NEAR(k.data()[i], 1.0 / 8.0, 1e-15);
    EXPECT_NEAR(k.data()[64 + i], 0.0, 1e-15);
  }
}

TEST(Fourier, ConstantImageIsCentredImpulse) {
  Tensor x(Shape{1, 2, 8, 8}, 0.0);
  for (std::size_t i = 0; i < 64; ++i) {
    x.mutable_data()[i] = 1.0;
  }
  const Tensor k = fft2c(x);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_NEAR(k.data()[i], i == 4 * 8 + 4 ? 8.0 : 0.0, 1e-12);
  }
}

TEST(Fourier, ShapeAndDomainErrors) {
  EXPECT_THROW(fft2c(Tensor(Shape{1, 3, 4, 4})), Error);
  EXPECT_THROW(fft2c(Tensor(Shape{2, 4, 4})), Error);
  const ComplexImage img{Tensor(Shape{1, 2, 4, 4}), Domain::image};
  const ComplexImage ksp{Tensor(Shape{1, 2, 4, 4}), Domain::kspace};
  EXPECT_THROW(fft2c(ksp), Error);
  EXPECT_THROW(ifft2c(img), Error);
  EXPECT_THROW(add(img, ksp), Error);
  EXPECT_EQ(fft2c(img).domain, Domain::kspace);
  EXPECT_EQ(ifft2c(ksp).domain, Domain::image);
}

TEST(Fourier, GradientsMatchFiniteDifferences) {
  Tensor x = random_tensor({1, 4, 6, 5}, 4000);
  x.set_requires_grad(true);
  const Tensor w1 = random_tensor({1, 4, 6, 5}, 4001);
  const Tensor w2 = random_tensor({1, 4, 6, 5}, 4002);
  GradCheckOptions options;
  options.tolerance = 1e-4;
  const std::vector<NamedTensor> params{{"x", x}};
  auto report = grad_check([&] { return ops::sum(ops::mul(fft2c(x), w1)); }, params, options);
  EXPECT_TRUE(report.passed()) << report.max_relative_error;
  report = grad_check([&] { return ops::sum(ops::mul(ifft2c(x), w2)); }, params, options);
  EXPECT_TRUE(report.passed()) << report.max_relative_error;
}
