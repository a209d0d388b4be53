#pragma once

#include "ddrecon/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddrecon {

/// 100 * ||pred - ref||^2 / ||ref||^2 over all values. Throws on a zero
/// reference.
double nmse(std::span<const double> pred, std::span<const double> ref);

/// 10*log10(max(ref)^2 / MSE); +infinity when MSE is zero.
double psnr(std::span<const double> pred, std::span<const double> ref);

struct SSIMOptions {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  /// Defaults to max(ref) - min(ref).
  std::optional<double> data_range;
};

/// Mean SSIM over all fully contained window positions of a height x width
/// image, uniform weights, sample (co)variances.
double ssim(std::span<const double> pred, std::span<const double> ref, std::size_t height, std::size_t width,
            const SSIMOptions& options = {});

/// Metrics for complex multi-coil k-space [1, 2C, H, W]: NMSE over real and
/// imaginary parts jointly; PSNR from the peak reference magnitude and the
/// mean complex squared error; SSIM on per-coil magnitudes, averaged over
/// coils.
struct MetricValues {
  double nmse_percent = 0.0;
  double ssim = 0.0;
  double psnr_db = 0.0;
};

MetricValues image_metrics(const Tensor& pred, const Tensor& ref);
MetricValues kspace_metrics(const Tensor& pred, const Tensor& ref);

struct MetricRow {
  std::string slice_id;
  MetricValues values;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Per-slice rows for one method plus their aggregate.
struct ReconReport {
  std::string method;
  std::vector<MetricRow> per_slice;

  MeanStd nmse() const;
  MeanStd ssim() const;
  MeanStd psnr() const;
};

/// Mean and sample standard deviation (0 for a single value).
MeanStd mean_std(std::span<const double> values);

/// Tab-separated rows `method slice_id nmse_percent ssim psnr_db`, one
/// `summary` line per method with `mean±std` at 4 significant digits, and
/// `#` header lines. `title` becomes the first header line.
std::string format_report(const std::string& title, std::span<const ReconReport> reports,
                          std::span<const std::string> notes = {});

} // namespace ddrecon
