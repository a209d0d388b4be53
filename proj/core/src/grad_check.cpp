#include "ddrecon/grad_check.hpp"

#include "ddrecon/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ddrecon {

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<const NamedTensor> params,
                           const GradCheckOptions& options) {
  std::vector<Tensor> tensors;
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
    tensors.push_back(t);
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss;
    {
      Tape::Recording recording(tape);
      loss = build_loss();
    }
    tape.backward(loss);
    for (auto& t : tensors) {
      analytic.emplace_back(t.mutable_grad().begin(), t.mutable_grad().end());
    }
  }

  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    auto values = tensors[p].mutable_data();
    std::vector<std::size_t> indices(values.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_entries_per_tensor != 0 && indices.size() > options.max_entries_per_tensor) {
      rng.shuffle(std::span<std::size_t>(indices));
      indices.resize(options.max_entries_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    for (auto i : indices) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = build_loss().item();
      values[i] = saved - options.step;
      const double minus = build_loss().item();
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.relative_floor});
      const double rel = std::abs(a - numeric) / denom;
      GradCheckEntry entry{params[p].name, i, a, numeric, rel};
      ++report.checked;
      if (rel >= report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst = entry;
      }
      if (!(rel < options.tolerance)) {
        report.failures.push_back(entry);
      }
    }
  }
  return report;
}

} // namespace ddrecon
