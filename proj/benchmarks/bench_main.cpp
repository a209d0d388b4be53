#include "ddrecon/cascade.hpp"
#include "ddrecon/fourier.hpp"
#include "ddrecon/ops.hpp"
#include "ddrecon/optim.hpp"
#include "ddrecon/se_net.hpp"
#include "ddrecon/training.hpp"

#include <benchmark/benchmark.h>

using namespace ddrecon;

namespace {

Tensor filled(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.mutable_data()) {
    v = rng.uniform(-1.0, 1.0);
  }
  return t;
}

SENetConfig net_config(std::size_t base) {
  SENetConfig c;
  c.base_width = base;
  c.reduction_ratio = base >= 32 ? 8 : 4;
  return c;
}

} // namespace

static void BM_Conv2d3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = filled({2, c, 64, 64}, 1);
  const Tensor w = filled({c, c, 3, 3}, 2);
  const Tensor b = filled({c}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1));
  }
}
BENCHMARK(BM_Conv2d3x3)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Fft2c(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor x = filled({2, 8, n, n}, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fft2c(x));
  }
}
BENCHMARK(BM_Fft2c)->Arg(64)->Arg(256)->Arg(368)->Unit(benchmark::kMicrosecond);

static void BM_SENetForwardBackward(benchmark::State& state) {
  Rng rng(5);
  const SENet net(net_config(static_cast<std::size_t>(state.range(0))), rng);
  const Tensor x = filled({2, 8, 64, 64}, 6);
  auto named = net.parameters("net");
  std::vector<Tensor> params;
  for (auto& p : named) {
    params.push_back(p.tensor);
  }
  for (auto _ : state) {
    zero_grads(params);
    Tape tape;
    Tensor loss;
    {
      Tape::Recording rec(tape);
      loss = ops::l2_loss(net.forward(x), x);
    }
    tape.backward(loss);
  }
}
BENCHMARK(BM_SENetForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_CascadeTrainStep(benchmark::State& state) {
  CascadeConfig cfg;
  cfg.inet = net_config(8);
  cfg.knet = net_config(8);
  const CascadeModel model(cfg, 7);
  const ComplexImage full{filled({2, 8, 64, 64}, 8), Domain::kspace};
  const ComplexImage image_full = ifft2c(full);
  std::vector<SamplingMask> masks{generate_mask(64, 8.0, 0.04, 1), generate_mask(64, 8.0, 0.04, 2)};
  const ComplexImage sampled{filled({2, 8, 64, 64}, 9), Domain::kspace};
  auto named = model.parameters();
  std::vector<Tensor> params;
  for (auto& p : named) {
    params.push_back(p.tensor);
  }
  AdamState adam;
  const LossWeights weights = LossWeights::defaults(2);
  for (auto _ : state) {
    zero_grads(params);
    Tape tape;
    Tensor loss;
    {
      Tape::Recording rec(tape);
      loss = compute_loss(model.forward(sampled, masks), image_full, full, weights);
    }
    tape.backward(loss);
    adam_step(params, adam);
  }
}
BENCHMARK(BM_CascadeTrainStep)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
