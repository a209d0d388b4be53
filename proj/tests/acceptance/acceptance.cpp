// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   ddrecon_acceptance [--work-dir DIR] [--only 1,2,...]

#include "ddrecon/cascade.hpp"
#include "ddrecon/checkpoint.hpp"
#include "ddrecon/config.hpp"
#include "ddrecon/dataset_io.hpp"
#include "ddrecon/error.hpp"
#include "ddrecon/grad_check.hpp"
#include "ddrecon/ops.hpp"
#include "ddrecon/pipeline.hpp"
#include "ddrecon/training.hpp"

#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ddrecon;
using ddrecon::testing::direct_centered_dft;
using ddrecon::testing::energy;
using ddrecon::testing::max_abs_diff;
using ddrecon::testing::random_param;
using ddrecon::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, soft_fail };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. gradients

Tensor weighted_sum(const Tensor& t, std::uint64_t seed) {
  return ops::sum(ops::mul(t, random_tensor(t.shape(), seed)));
}

Tensor away_from_zero(Tensor t) {
  for (auto& v : t.mutable_data()) {
    if (std::abs(v) < 1e-3) {
      v = 0.25;
    }
  }
  return t;
}

Outcome gradient_integrity() {
  GradCheckOptions op_options; // h = 1e-5, central differences
  op_options.tolerance = 1e-4;

  struct OpCase {
    std::string name;
    std::function<Tensor()> loss;
    std::vector<NamedTensor> params;
  };
  Tensor x = random_param({2, 3, 6, 6}, 1);
  Tensor y = random_param({2, 3, 6, 6}, 2);
  Tensor xr = away_from_zero(random_param({2, 3, 6, 6}, 3));
  Tensor x7 = random_param({1, 3, 7, 7}, 14);
  Tensor w = random_param({4, 3, 3, 3}, 4);
  Tensor b = random_param({4}, 5);
  Tensor fx = random_param({3, 5}, 6);
  Tensor fw = random_param({2, 5}, 7);
  Tensor fb = random_param({2}, 8);
  Tensor cw = random_param({2, 3}, 9);
  Tensor map = random_param({2, 1, 6, 6}, 10);
  Tensor cplx = random_param({1, 4, 6, 5}, 11);
  const Tensor target = random_tensor({2, 3, 6, 6}, 12);
  SamplingMask mask;
  mask.lines = {1, 0, 1, 1, 0};
  const std::vector<SamplingMask> masks{mask};
  const ComplexImage ks{random_tensor({1, 4, 6, 5}, 13), Domain::kspace};

  std::vector<OpCase> cases{
      {"add", [&] { return weighted_sum(ops::add(x, y), 20); }, {{"x", x}, {"y", y}}},
      {"sub", [&] { return weighted_sum(ops::sub(x, y), 21); }, {{"x", x}, {"y", y}}},
      {"mul", [&] { return weighted_sum(ops::mul(x, y), 22); }, {{"x", x}, {"y", y}}},
      {"scale", [&] { return weighted_sum(ops::scale(x, -1.7), 23); }, {{"x", x}}},
      {"relu", [&] { return weighted_sum(ops::relu(xr), 24); }, {{"x", xr}}},
      {"sigmoid", [&] { return weighted_sum(ops::sigmoid(x), 25); }, {{"x", x}}},
      {"sum", [&] { return ops::sum(x); }, {{"x", x}}},
      {"reshape", [&] { return weighted_sum(ops::reshape(x, {6, 36}), 26); }, {{"x", x}}},
      {"conv2d", [&] { return weighted_sum(ops::conv2d(x, w, b, 1, 1), 27); }, {{"x", x}, {"w", w}, {"b", b}}},
      {"conv2d_stride2", [&] { return weighted_sum(ops::conv2d(x7, w, b, 2, 0), 28); }, {{"x", x7}, {"w", w}}},
      {"fully_connected", [&] { return weighted_sum(ops::fully_connected(fx, fw, fb), 29); },
       {{"x", fx}, {"w", fw}, {"b", fb}}},
      {"global_avg_pool", [&] { return weighted_sum(ops::global_avg_pool(x), 30); }, {{"x", x}}},
      {"channelwise_scale", [&] { return weighted_sum(ops::channelwise_scale(x, cw), 31); }, {{"x", x}, {"w", cw}}},
      {"pointwise_scale", [&] { return weighted_sum(ops::pointwise_scale(x, map), 32); }, {{"x", x}, {"m", map}}},
      {"avg_pool2x2", [&] { return weighted_sum(ops::avg_pool2x2(x), 33); }, {{"x", x}}},
      {"upsample_nearest2x", [&] { return weighted_sum(ops::upsample_nearest2x(x), 34); }, {{"x", x}}},
      {"concat_channels", [&] { return weighted_sum(ops::concat_channels(x, y), 35); }, {{"x", x}, {"y", y}}},
      {"l2_loss", [&] { return ops::l2_loss(x, target); }, {{"x", x}}},
      {"fft2c", [&] { return weighted_sum(fft2c(cplx), 36); }, {{"x", cplx}}},
      {"ifft2c", [&] { return weighted_sum(ifft2c(cplx), 37); }, {{"x", cplx}}},
      {"data_consistency",
       [&] { return weighted_sum(data_consistency({cplx, Domain::kspace}, ks, masks, 0.05).tensor, 38); },
       {{"x", cplx}}},
  };

  Rng se_rng(40);
  const SEModuleParams se = init_se_module(3, 3, se_rng);
  cases.push_back({"se_module",
                   [&] { return weighted_sum(se_module_forward(x, se), 41); },
                   {{"x", x},
                    {"fc1.w", se.fc1_weight},
                    {"fc1.b", se.fc1_bias},
                    {"fc2.w", se.fc2_weight},
                    {"fc2.b", se.fc2_bias},
                    {"sp.w", se.spatial_weight},
                    {"sp.b", se.spatial_bias}}});

  double op_worst = 0.0;
  std::string op_worst_name;
  std::vector<std::string> failed;
  std::size_t checked = 0;
  for (const auto& c : cases) {
    const auto report = grad_check(c.loss, c.params, op_options);
    checked += report.checked;
    if (report.max_relative_error > op_worst) {
      op_worst = report.max_relative_error;
      op_worst_name = c.name;
    }
    if (!report.passed()) {
      failed.push_back(c.name);
    }
  }

  // Full N=2 cascade, 2 coils, 8x8, every parameter entry.
  CascadeConfig cfg;
  cfg.n_iterations = 2;
  cfg.use_cross_iteration_residual = true;
  cfg.ncoil = 2;
  for (SENetConfig* net : {&cfg.inet, &cfg.knet}) {
    net->in_channels = 4;
    net->out_channels = 4;
    net->base_width = 4;
    net->depth = 2;
    net->reduction_ratio = 2;
  }
  const CascadeModel model(cfg, 50);
  const Tensor phantom = generate_phantom(8, 8, 3, 51);
  const KSpaceVolume full = simulate_coils(phantom, 2, 52);
  const SamplingMask m8 = generate_mask(8, 2.0, 0.25, 53);
  const std::vector<SamplingMask> m8s{m8};
  const ComplexImage sampled = apply_mask(full, m8).data;
  const ComplexImage image_full = ifft2c(full.data);
  const LossWeights weights = LossWeights::defaults(2);
  GradCheckOptions cascade_options;
  cascade_options.tolerance = 1e-3;
  const auto params = model.parameters();
  const auto cascade_report = grad_check(
      [&] { return compute_loss(model.forward(sampled, m8s), image_full, full.data, weights); }, params,
      cascade_options);

  Outcome out;
  const bool ok = failed.empty() && op_worst < 1e-4 && cascade_report.passed() &&
                  cascade_report.max_relative_error < 1e-3;
  out.status = ok ? Status::pass : Status::fail;
  out.detail = std::to_string(cases.size()) + " ops, " + std::to_string(checked) + " entries, max rel err " +
               fmt("%.2e", op_worst) + " (" + op_worst_name + ", limit 1e-4); N=2 cascade " +
               std::to_string(cascade_report.checked) + " entries, max rel err " +
               fmt("%.2e", cascade_report.max_relative_error) + " (limit 1e-3)";
  for (const auto& f : failed) {
    out.detail += "; failed op " + f;
  }
  if (!cascade_report.passed()) {
    out.detail += "; cascade worst at " + cascade_report.worst.parameter;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2. fourier

Outcome fourier_correctness() {
  const Tensor x = random_tensor({2, 4, 8, 8}, 100);
  const Tensor y = random_tensor({2, 4, 8, 8}, 101);
  const Tensor kx = fft2c(x);
  const double oracle_fwd = max_abs_diff(kx.data(), direct_centered_dft(x, false).data());
  const double oracle_inv = max_abs_diff(ifft2c(x).data(), direct_centered_dft(x, true).data());
  const double round_trip = std::max(max_abs_diff(ifft2c(kx).data(), x.data()),
                                     max_abs_diff(fft2c(ifft2c(x)).data(), x.data()));
  const double parseval = std::abs(energy(kx.data()) - energy(x.data()));
  const Tensor lhs = fft2c(ops::add(ops::scale(x, 0.3), ops::scale(y, -2.1)));
  const Tensor rhs = ops::add(ops::scale(kx, 0.3), ops::scale(fft2c(y), -2.1));
  const double linearity = max_abs_diff(lhs.data(), rhs.data());
  const double worst = std::max({oracle_fwd, oracle_inv, round_trip, parseval, linearity});
  Outcome out;
  out.status = worst < 1e-9 ? Status::pass : Status::fail;
  out.detail = "8x8: oracle fwd " + fmt("%.1e", oracle_fwd) + ", oracle inv " + fmt("%.1e", oracle_inv) +
               ", round trip " + fmt("%.1e", round_trip) + ", Parseval " + fmt("%.1e", parseval) + ", linearity " +
               fmt("%.1e", linearity) + " (limit 1e-9)";
  return out;
}

// ---------------------------------------------------------------------------
// 3. data consistency

Outcome data_consistency_properties() {
  std::size_t violations = 0;
  std::size_t checked = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const std::size_t batch = 2;
    std::vector<SamplingMask> masks{generate_mask(32, 4.0, 0.08, 200 + trial), generate_mask(32, 4.0, 0.08, 300 + trial)};
    const Tensor full = random_tensor({batch, 8, 16, 32}, 400 + trial);
    Tensor ks_t = full.clone();
    for (std::size_t i = 0; i < ks_t.numel(); ++i) {
      if (!masks[i / (8 * 16 * 32)].sampled(i % 32)) {
        ks_t.mutable_data()[i] = 0.0;
      }
    }
    const ComplexImage ks{ks_t, Domain::kspace};
    const ComplexImage pre{random_tensor({batch, 8, 16, 32}, 500 + trial), Domain::kspace};
    for (double lambda : {0.0, 0.05, 0.5, 3.0}) {
      const Tensor out_t = data_consistency(pre, ks, masks, lambda).tensor;
      const Tensor fixed_t = data_consistency(ks, ks, masks, lambda).tensor;
      const auto out = out_t.data();
      const auto fixed = fixed_t.data();
      const double factor = lambda / (lambda + 1.0);
      for (std::size_t i = 0; i < out.size(); ++i) {
        ++checked;
        const double p = pre.tensor.data()[i];
        const double s = ks_t.data()[i];
        if (masks[i / (8 * 16 * 32)].sampled(i % 32)) {
          // Exact to float precision: a few ulps of the operands.
          const double err = std::abs(std::abs(out[i] - s) - factor * std::abs(p - s));
          const double fp_err = std::abs(fixed[i] - s);
          worst = std::max({worst, err, fp_err});
          const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(p) + std::abs(s) + 1.0);
          if (err > tol || fp_err > tol || (lambda == 0.0 && out[i] != s)) {
            ++violations;
          }
        } else if (out[i] != p || fixed[i] != s) {
          ++violations;
        }
      }
    }
  }
  Outcome out;
  out.status = violations == 0 ? Status::pass : Status::fail;
  out.detail = std::to_string(checked) + " entries over lambda {0, 0.05, 0.5, 3}: contraction, identity, fixed "
               "point, hard replacement; max deviation " +
               fmt("%.1e", worst) + ", violations " + std::to_string(violations);
  return out;
}

// ---------------------------------------------------------------------------
// 4. rss and simulation

Outcome rss_and_simulation() {
  const Tensor c = random_tensor({3, 2, 16, 16}, 600);
  const Tensor r = rss_combine(c);
  double mag_err = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t p = 0; p < 256; ++p) {
      const double re = c.data()[n * 512 + p];
      const double im = c.data()[n * 512 + 256 + p];
      mag_err = std::max(mag_err, std::abs(r.data()[n * 256 + p] - std::hypot(re, im)));
    }
  }
  double sim_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor phantom = generate_phantom(64, 64, 10, 700 + seed);
    KSpaceVolume k = simulate_coils(phantom, 4, 800 + seed);
    quantize_to_f32(k);
    const Tensor back = rss_reconstruct(k);
    for (std::size_t p = 0; p < phantom.numel(); ++p) {
      const double ref = phantom.data()[p];
      if (ref > 0.0) {
        sim_err = std::max(sim_err, std::abs(back.data()[p] - ref) / ref);
      }
    }
  }
  Outcome out;
  out.status = mag_err <= 1e-12 && sim_err < 0.02 ? Status::pass : Status::fail;
  out.detail = "single-coil RSS vs |z| max err " + fmt("%.1e", mag_err) + " (limit 1e-12); 4-coil simulate->RSS max "
               "relative err on support " +
               fmt("%.2e", sim_err) + " over 10 phantoms (limit 0.02)";
  return out;
}

// ---------------------------------------------------------------------------
// 5. mask statistics

Outcome mask_statistics() {
  constexpr std::size_t width = 368;
  constexpr std::size_t trials = 1000;
  const CenterBlock center = center_block(width, 0.04);
  std::vector<std::size_t> counts(width, 0);
  bool geometry_ok = center.count == 15;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const SamplingMask m = generate_mask(width, 8.0, 0.04, seed);
    geometry_ok = geometry_ok && m.kept() == 46;
    for (std::size_t col = 0; col < width; ++col) {
      if (m.sampled(col)) {
        ++counts[col];
      }
    }
  }
  for (std::size_t col = center.first; col < center.first + center.count; ++col) {
    geometry_ok = geometry_ok && counts[col] == trials;
  }
  const double expected = static_cast<double>(trials) * 31.0 / static_cast<double>(width - 15);
  std::size_t outside = 0;
  double worst = 0.0;
  double chi2 = 0.0;
  for (std::size_t col = 0; col < width; ++col) {
    if (col >= center.first && col < center.first + center.count) {
      continue;
    }
    const double dev = (static_cast<double>(counts[col]) - expected) / expected;
    worst = std::max(worst, std::abs(dev));
    chi2 += (static_cast<double>(counts[col]) - expected) * (static_cast<double>(counts[col]) - expected) / expected;
    if (std::abs(dev) > 0.2) {
      ++outside;
    }
  }
  // Lines a perfectly uniform sampler would leave outside the band:
  // 353 * P(|X - np| > 0.2 np) for X ~ Binomial(1000, 31/353).
  const double p = 31.0 / static_cast<double>(width - 15);
  double tail = 0.0;
  for (std::size_t k = 0; k <= trials; ++k) {
    const double kd = static_cast<double>(k);
    if (std::abs(kd - expected) / expected > 0.2) {
      const double log_pmf = std::lgamma(trials + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(trials - kd + 1.0) +
                             kd * std::log(p) + (trials - kd) * std::log1p(-p);
      tail += std::exp(log_pmf);
    }
  }
  Outcome out;
  out.status = geometry_ok && outside == 0 ? Status::pass : Status::fail;
  out.detail = std::string("368/8x/0.04: 15 centre + 46 total lines ") + (geometry_ok ? "exact" : "WRONG") +
               " over 1000 seeds; non-centre selection expected " + fmt("%.2f", expected) + " per line, max "
               "relative deviation " +
               fmt("%.3f", worst) + " (limit 0.2), lines outside band " + std::to_string(outside) + "/353, chi2 " +
               fmt("%.1f", chi2) + " on 352 dof; an ideal uniform sampler expects " + fmt("%.1f", 353.0 * tail) +
               " lines outside";
  return out;
}

// ---------------------------------------------------------------------------
// 6. trend reproduction

ExperimentConfig trend_base(const fs::path& work) {
  // Default synthetic set and cascade layout; narrower networks and a larger
  // step size than the library defaults so that four arms fit the CPU budget.
  ExperimentConfig c = ExperimentConfig::parse(R"(
inet.base_width=8
inet.reduction_ratio=4
knet.base_width=8
knet.reduction_ratio=4
train.epochs=50
train.learning_rate=0.001
)");
  c.output_dir = work;
  c.dataset_path = work / "dataset.ddmk";
  c.finalize();
  return c;
}

struct Arm {
  std::string label;
  std::size_t n;
  bool residual;
  double test_nmse = 0.0;
  double test_nmse_std = 0.0;
  double seconds = 0.0;
  std::vector<EpochRecord> history;
};

Outcome trend_reproduction(const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  ExperimentConfig base = trend_base(work);
  cmd_simulate(base);

  std::vector<Arm> arms{{"N1", 1, false}, {"N2_plain", 2, false}, {"N2_residual", 2, true}};
  double zero_fill = 0.0;
  double zero_fill_std = 0.0;
  for (auto& arm : arms) {
    ExperimentConfig c = base;
    c.output_dir = work / arm.label;
    c.checkpoint_dir.clear();
    c.cascade.n_iterations = arm.n;
    c.cascade.use_cross_iteration_residual = arm.residual;
    c.train.loss_weights = LossWeights::defaults(arm.n);
    c.finalize();
    const auto start = std::chrono::steady_clock::now();
    arm.history = cmd_train(c, [&](const EpochRecord& e) {
      std::printf("  [%s] epoch %zu loss %.6g val NMSE%% %.4f\n", arm.label.c_str(), e.epoch, e.train_loss,
                  e.val_nmse);
      std::fflush(stdout);
    }).history;
    arm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const EvaluationReports rep = cmd_evaluate(c, c.resolved_checkpoint_dir() / best_checkpoint_name, "test");
    std::ofstream(c.output_dir / "report_image.tsv") << rep.image_text;
    std::ofstream(c.output_dir / "report_kspace.tsv") << rep.kspace_text;
    zero_fill = rep.image[0].nmse().mean;
    zero_fill_std = rep.image[0].nmse().std;
    arm.test_nmse = rep.image[1].nmse().mean;
    arm.test_nmse_std = rep.image[1].nmse().std;
  }

  std::printf("  method\ttest image NMSE%% (mean±std)\ttrain seconds\n");
  std::printf("  zero_fill\t%.4f±%.4f\t-\n", zero_fill, zero_fill_std);
  for (const auto& a : arms) {
    std::printf("  %s\t%.4f±%.4f\t%.1f\n", a.label.c_str(), a.test_nmse, a.test_nmse_std, a.seconds);
  }

  // Training-loss trend over the first 20 epochs of the full model.
  const auto& hist = arms[2].history;
  std::size_t decreasing = 0;
  const std::size_t span = std::min<std::size_t>(20, hist.size());
  for (std::size_t e = 1; e < span; ++e) {
    decreasing += hist[e].train_loss < hist[e - 1].train_loss ? 1 : 0;
  }
  std::printf("  N2_residual training loss decreased in %zu of %zu deltas over the first %zu epochs "
              "(expected >= 15 of 19)\n",
              decreasing, span - 1, span);

  const double ratio = arms[2].test_nmse / zero_fill;
  const bool a_ok = ratio <= 0.5;
  const std::vector<std::pair<std::string, std::pair<double, double>>> pairs{
      {"zero_fill > N1", {zero_fill, arms[0].test_nmse}},
      {"N1 >= N2_plain", {arms[0].test_nmse, arms[1].test_nmse}},
      {"N2_plain >= N2_residual", {arms[1].test_nmse, arms[2].test_nmse}},
  };
  bool hard = false;
  std::string inversions;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [hi, lo] = pairs[i].second;
    const bool holds = i == 0 ? hi > lo : hi >= lo;
    if (!holds) {
      const double rel = (lo - hi) / hi;
      inversions += "; inverted " + pairs[i].first + " by " + fmt("%.1f", 100.0 * rel) + "%";
      if (rel >= 0.05) {
        hard = true;
      }
    }
  }
  double total_seconds = 0.0;
  for (const auto& a : arms) {
    total_seconds += a.seconds;
  }
  Outcome out;
  if (!a_ok || hard || total_seconds > 45.0 * 60.0) {
    out.status = Status::fail;
  } else {
    out.status = inversions.empty() ? Status::pass : Status::soft_fail;
  }
  out.detail = "test NMSE% zero_fill " + fmt("%.3f", zero_fill) + ", N1 " + fmt("%.3f", arms[0].test_nmse) +
               ", N2_plain " + fmt("%.3f", arms[1].test_nmse) + ", N2_residual " + fmt("%.3f", arms[2].test_nmse) +
               "; (a) ratio " + fmt("%.3f", ratio) + " (limit 0.5); (b) ordering " +
               (inversions.empty() ? std::string("holds") : inversions.substr(2)) + "; training " +
               fmt("%.0f", total_seconds) + " s (budget 2700 s)";
  return out;
}

// ---------------------------------------------------------------------------
// 7. determinism

struct RunArtifacts {
  std::string dataset;
  std::string manifest;
  std::string latest;
  std::string best;
  std::string history;
  std::string image_report;
  std::string kspace_report;
};

RunArtifacts pipeline_run(const fs::path& dir) {
  fs::remove_all(dir);
  ExperimentConfig c = ExperimentConfig::parse(R"(
dataset.slices=24
inet.base_width=8
inet.reduction_ratio=4
knet.base_width=8
knet.reduction_ratio=4
train.epochs=2
train.learning_rate=0.001
)");
  c.output_dir = dir;
  c.finalize();
  const SimulateResult sim = cmd_simulate(c);
  cmd_train(c);
  const fs::path ckpt = c.resolved_checkpoint_dir();
  const EvaluationReports rep = cmd_evaluate(c, ckpt / best_checkpoint_name, "test");
  return {slurp(sim.dataset),
          slurp(sim.manifest),
          slurp(ckpt / latest_checkpoint_name),
          slurp(ckpt / best_checkpoint_name),
          slurp(ckpt / history_file_name),
          rep.image_text,
          rep.kspace_text};
}

Outcome determinism(const fs::path& work) {
  const RunArtifacts a = pipeline_run(work / "run_a");
  const RunArtifacts b = pipeline_run(work / "run_b");
  std::vector<std::string> differ;
  auto cmp = [&](const std::string& name, const std::string& x, const std::string& y) {
    if (x != y || x.empty()) {
      differ.push_back(name);
    }
  };
  cmp("dataset", a.dataset, b.dataset);
  cmp("split manifest", a.manifest, b.manifest);
  cmp("latest checkpoint", a.latest, b.latest);
  cmp("best checkpoint", a.best, b.best);
  cmp("history", a.history, b.history);
  cmp("image report", a.image_report, b.image_report);
  cmp("k-space report", a.kspace_report, b.kspace_report);
  Outcome out;
  out.status = differ.empty() ? Status::pass : Status::fail;
  out.detail = "simulate -> train (2 epochs) -> evaluate twice, seed 42, 24 slices: ";
  if (differ.empty()) {
    out.detail += "dataset, manifest, both checkpoints, history and both reports byte-identical";
  } else {
    for (const auto& d : differ) {
      out.detail += d + " differs; ";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 8. persistence

template <typename Decode>
std::pair<std::size_t, std::size_t> truncation_sweep(const std::vector<char>& bytes, Decode decode,
                                                     std::uint64_t seed) {
  std::set<std::size_t> cuts;
  for (std::size_t n = 0; n < std::min<std::size_t>(bytes.size(), 1024); ++n) {
    cuts.insert(n);
  }
  Rng rng(seed);
  for (int i = 0; i < 1000; ++i) {
    cuts.insert(static_cast<std::size_t>(rng.below(bytes.size())));
  }
  cuts.insert(bytes.size() - 1);
  std::size_t wrong = 0;
  for (std::size_t n : cuts) {
    const std::vector<char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    try {
      decode(cut);
      ++wrong;
    } catch (const Error& e) {
      wrong += e.code() == ErrorCode::truncated ? 0 : 1;
    }
  }
  return {cuts.size(), wrong};
}

template <typename Decode>
std::size_t header_attacks(const std::vector<char>& bytes, Decode decode) {
  std::size_t wrong = 0;
  auto expect = [&](std::vector<char> data, ErrorCode code) {
    try {
      decode(data);
      ++wrong;
    } catch (const Error& e) {
      wrong += e.code() == code ? 0 : 1;
    }
  };
  for (std::size_t i = 0; i < 4; ++i) {
    auto bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x20);
    expect(bad, ErrorCode::bad_magic);
  }
  auto v0 = bytes;
  v0[4] = 0;
  expect(v0, ErrorCode::version_mismatch);
  auto v2 = bytes;
  v2[4] = 2;
  expect(v2, ErrorCode::version_mismatch);
  return wrong;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    return false;
  }
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) {
      return false;
    }
  }
  return true;
}

Outcome persistence(const fs::path& work) {
  fs::create_directories(work);
  SyntheticDatasetParams params;
  params.slices = 6;
  const Dataset data = synthesize_dataset(params, MaskParams{});
  const fs::path data_path = work / "roundtrip.ddmk";
  write_dataset(data_path, data);
  const Dataset back = read_dataset(data_path);
  bool data_ok = back.size() == data.size();
  for (std::size_t i = 0; data_ok && i < data.size(); ++i) {
    data_ok = back[i].kspace.slice_id == data[i].kspace.slice_id && back[i].mask.lines == data[i].mask.lines &&
              bit_identical(back[i].kspace.data.tensor, data[i].kspace.data.tensor);
  }
  const auto data_bytes = encode_dataset(data);
  data_ok = data_ok && slurp(data_path) == std::string(data_bytes.begin(), data_bytes.end());

  CascadeConfig cfg;
  for (SENetConfig* net : {&cfg.inet, &cfg.knet}) {
    net->base_width = 8;
    net->reduction_ratio = 4;
  }
  const CascadeModel model(cfg, 900);
  auto tensors = model.parameters();
  tensors.push_back({"adam.step", Tensor::scalar(12.0)});
  tensors.push_back({"edge", Tensor(Shape{4}, std::vector<double>{-0.0, std::numeric_limits<double>::denorm_min(),
                                                                   std::numeric_limits<double>::max(),
                                                                   std::numeric_limits<double>::infinity()})});
  const fs::path ckpt_path = work / "roundtrip.ddrk";
  write_checkpoint(ckpt_path, tensors);
  const auto ckpt_back = read_checkpoint(ckpt_path);
  bool ckpt_ok = ckpt_back.size() == tensors.size();
  for (std::size_t i = 0; ckpt_ok && i < tensors.size(); ++i) {
    ckpt_ok = ckpt_back[i].name == tensors[i].name && bit_identical(ckpt_back[i].tensor, tensors[i].tensor);
  }
  CascadeModel reloaded(cfg, 901);
  reloaded.load_parameters(ckpt_back);
  const auto reloaded_params = reloaded.parameters();
  for (std::size_t i = 0; ckpt_ok && i < reloaded_params.size(); ++i) {
    ckpt_ok = bit_identical(reloaded_params[i].tensor, tensors[i].tensor);
  }

  const auto ckpt_bytes = encode_checkpoint(tensors);
  const auto [data_cuts, data_wrong] = truncation_sweep(data_bytes, [](const auto& b) { decode_dataset(b); }, 1);
  const auto [ckpt_cuts, ckpt_wrong] = truncation_sweep(ckpt_bytes, [](const auto& b) { decode_checkpoint(b); }, 2);
  const std::size_t header_wrong = header_attacks(data_bytes, [](const auto& b) { decode_dataset(b); }) +
                                   header_attacks(ckpt_bytes, [](const auto& b) { decode_checkpoint(b); });

  Outcome out;
  out.status = data_ok && ckpt_ok && data_wrong == 0 && ckpt_wrong == 0 && header_wrong == 0 ? Status::pass
                                                                                             : Status::fail;
  out.detail = std::string("dataset round trip ") + (data_ok ? "bit-exact" : "MISMATCH") + ", checkpoint round trip " +
               (ckpt_ok ? "bit-exact" : "MISMATCH") + "; truncations: " + std::to_string(data_cuts) +
               " dataset cuts (" + std::to_string(data_wrong) + " untyped), " + std::to_string(ckpt_cuts) +
               " checkpoint cuts (" + std::to_string(ckpt_wrong) + " untyped); magic/version attacks " +
               std::to_string(header_wrong) + " mistyped";
  return out;
}

} // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "ddrecon_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        only.insert(std::stoi(item));
      }
    } else {
      std::fprintf(stderr, "usage: %s [--work-dir DIR] [--only 1,2,...]\n", argv[0]);
      return 2;
    }
  }

  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient integrity", 120.0, gradient_integrity},
      {2, "fourier correctness", 10.0, fourier_correctness},
      {3, "data consistency", 0.0, data_consistency_properties},
      {4, "rss and simulation", 0.0, rss_and_simulation},
      {5, "mask statistics", 0.0, mask_statistics},
      {6, "trend reproduction", 0.0, [&] { return trend_reproduction(work / "trend"); }},
      {7, "determinism", 0.0, [&] { return determinism(work / "determinism"); }},
      {8, "persistence", 0.0, [&] { return persistence(work / "persistence"); }},
  };

  int failures = 0;
  std::vector<std::string> lines;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) {
      continue;
    }
    const auto wall_start = std::chrono::steady_clock::now();
    const std::clock_t cpu_start = std::clock();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    const double cpu = static_cast<double>(std::clock() - cpu_start) / CLOCKS_PER_SEC;
    if (c.budget_seconds > 0.0 && cpu > c.budget_seconds && o.status == Status::pass) {
      o.status = Status::fail;
      o.detail += "; over CPU budget of " + fmt("%.0f", c.budget_seconds) + " s";
    }
    const char* tag = o.status == Status::pass ? "PASS" : (o.status == Status::soft_fail ? "SOFT-FAIL" : "FAIL");
    failures += o.status == Status::fail ? 1 : 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "criterion %d [%s] %s (%.1f s wall, %.1f s cpu): ", c.id, tag, c.name.c_str(), wall,
                  cpu);
    lines.push_back(buf + o.detail);
    std::printf("%s\n", lines.back().c_str());
    std::fflush(stdout);
  }
  std::printf("\nsummary\n");
  for (const auto& l : lines) {
    std::printf("%s\n", l.c_str());
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
