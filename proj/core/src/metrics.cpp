#include "ddrecon/metrics.hpp"

#include "ddrecon/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ddrecon {

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::shape_mismatch, std::string(what) + ": sizes " + std::to_string(a.size()) + " and " +
                                               std::to_string(b.size()) + " differ or are empty");
  }
}

std::string sig4(double v) {
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string full(double v) {
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// |coil c| of a [1, 2C, H, W] tensor.
std::vector<double> coil_magnitude(const Tensor& t, std::size_t c) {
  const auto hw = t.dim(2) * t.dim(3);
  std::vector<double> out(hw);
  auto v = t.data();
  for (std::size_t p = 0; p < hw; ++p) {
    out[p] = std::hypot(v[(2 * c) * hw + p], v[(2 * c + 1) * hw + p]);
  }
  return out;
}

} // namespace

double nmse(std::span<const double> pred, std::span<const double> ref) {
  require_same_size(pred, ref, "nmse");
  double err = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = pred[i] - ref[i];
    err += d * d;
    energy += ref[i] * ref[i];
  }
  if (energy == 0.0) {
    throw Error(ErrorCode::invalid_argument, "nmse: reference has zero energy");
  }
  return 100.0 * err / energy;
}

double psnr(std::span<const double> pred, std::span<const double> ref) {
  require_same_size(pred, ref, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = pred[i] - ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double peak = *std::max_element(ref.begin(), ref.end());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(std::span<const double> pred, std::span<const double> ref, std::size_t height, std::size_t width,
            const SSIMOptions& options) {
  require_same_size(pred, ref, "ssim");
  if (pred.size() != height * width) {
    throw Error(ErrorCode::shape_mismatch, "ssim: " + std::to_string(pred.size()) + " values for " +
                                               std::to_string(height) + "x" + std::to_string(width));
  }
  const auto win = options.window;
  if (win < 2 || height < win || width < win) {
    throw Error(ErrorCode::invalid_argument, "ssim: image " + std::to_string(height) + "x" + std::to_string(width) +
                                                 " smaller than window " + std::to_string(win));
  }
  double range = 0.0;
  if (options.data_range) {
    range = *options.data_range;
  } else {
    const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
    range = *hi - *lo;
  }
  if (range <= 0.0) {
    if (std::equal(pred.begin(), pred.end(), ref.begin())) {
      return 1.0;
    }
    range = 1e-12;
  }
  const double c1 = (options.k1 * range) * (options.k1 * range);
  const double c2 = (options.k2 * range) * (options.k2 * range);
  const double np = static_cast<double>(win * win);
  const double cov_norm = np / (np - 1.0);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + win <= height; ++i) {
    for (std::size_t j = 0; j + win <= width; ++j) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t a = 0; a < win; ++a) {
        for (std::size_t b = 0; b < win; ++b) {
          const double x = pred[(i + a) * width + j + b];
          const double y = ref[(i + a) * width + j + b];
          sx += x;
          sy += y;
          sxx += x * x;
          syy += y * y;
          sxy += x * y;
        }
      }
      const double ux = sx / np;
      const double uy = sy / np;
      const double vx = cov_norm * (sxx / np - ux * ux);
      const double vy = cov_norm * (syy / np - uy * uy);
      const double vxy = cov_norm * (sxy / np - ux * uy);
      total += ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MetricValues image_metrics(const Tensor& pred, const Tensor& ref) {
  if (pred.shape() != ref.shape()) {
    throw Error(ErrorCode::shape_mismatch,
                "image metrics: " + shape_string(pred.shape()) + " vs " + shape_string(ref.shape()));
  }
  const auto h = ref.dim(ref.rank() - 2);
  const auto w = ref.dim(ref.rank() - 1);
  return {nmse(pred.data(), ref.data()), ssim(pred.data(), ref.data(), h, w), psnr(pred.data(), ref.data())};
}

MetricValues kspace_metrics(const Tensor& pred, const Tensor& ref) {
  if (pred.shape() != ref.shape() || ref.rank() != 4 || ref.dim(0) != 1) {
    throw Error(ErrorCode::shape_mismatch,
                "k-space metrics: " + shape_string(pred.shape()) + " vs " + shape_string(ref.shape()));
  }
  const auto ncoil = ref.dim(1) / 2;
  const auto h = ref.dim(2);
  const auto w = ref.dim(3);
  MetricValues out;
  out.nmse_percent = nmse(pred.data(), ref.data());

  double peak = 0.0;
  double err = 0.0;
  double ssim_sum = 0.0;
  for (std::size_t c = 0; c < ncoil; ++c) {
    const auto pm = coil_magnitude(pred, c);
    const auto rm = coil_magnitude(ref, c);
    peak = std::max(peak, *std::max_element(rm.begin(), rm.end()));
    ssim_sum += ssim(pm, rm, h, w);
  }
  auto p = pred.data();
  auto r = ref.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    err += (p[i] - r[i]) * (p[i] - r[i]);
  }
  const double mse = err / static_cast<double>(ncoil * h * w);
  out.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(peak * peak / mse);
  out.ssim = ssim_sum / static_cast<double>(ncoil);
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) {
    return out;
  }
  double total = 0.0;
  for (double v : values) {
    total += v;
  }
  out.mean = total / static_cast<double>(values.size());
  if (values.size() > 1 && std::isfinite(out.mean)) {
    double sq = 0.0;
    for (double v : values) {
      sq += (v - out.mean) * (v - out.mean);
    }
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {
template <typename F>
MeanStd column(const std::vector<MetricRow>& rows, F field) {
  std::vector<double> v;
  for (const auto& r : rows) {
    v.push_back(field(r.values));
  }
  return mean_std(v);
}
} // namespace

MeanStd ReconReport::nmse() const {
  return column(per_slice, [](const MetricValues& m) { return m.nmse_percent; });
}
MeanStd ReconReport::ssim() const {
  return column(per_slice, [](const MetricValues& m) { return m.ssim; });
}
MeanStd ReconReport::psnr() const {
  return column(per_slice, [](const MetricValues& m) { return m.psnr_db; });
}

std::string format_report(const std::string& title, std::span<const ReconReport> reports,
                          std::span<const std::string> notes) {
  std::string out = "# " + title + "\n";
  for (const auto& n : notes) {
    out += "# " + n + "\n";
  }
  out += "method\tslice_id\tNMSE%\tSSIM\tPSNR\n";
  for (const auto& r : reports) {
    for (const auto& row : r.per_slice) {
      out += r.method + "\t" + row.slice_id + "\t" + full(row.values.nmse_percent) + "\t" + full(row.values.ssim) +
             "\t" + full(row.values.psnr_db) + "\n";
    }
  }
  for (const auto& r : reports) {
    const auto n = r.nmse();
    const auto s = r.ssim();
    const auto p = r.psnr();
    out += "summary\t" + r.method + "\t" + sig4(n.mean) + "±" + sig4(n.std) + "\t" + sig4(s.mean) + "±" +
           sig4(s.std) + "\t" + sig4(p.mean) + "±" + sig4(p.std) + "\n";
  }
  return out;
}

} // namespace ddrecon
