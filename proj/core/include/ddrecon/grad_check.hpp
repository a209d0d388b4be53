#pragma once

#include "ddrecon/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ddrecon {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so gradients that are zero
  /// up to rounding compare on an absolute scale.
  double relative_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded sample of this many per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> failures;

  bool passed() const { return failures.empty(); }
};

/// Compares tape gradients of `build_loss` with central finite differences
/// for every tensor in `params`. `build_loss` must be deterministic and must
/// read the parameters through the given tensors.
GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::span<const NamedTensor> params,
                           const GradCheckOptions& options = {});

} // namespace ddrecon
