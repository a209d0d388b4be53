#include "ddrecon/ops.hpp"

#include "ddrecon/error.hpp"

#include <Eigen/Core>

#include <cmath>

namespace ddrecon::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::shape_mismatch,
                std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw Error(ErrorCode::shape_mismatch, std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                                               ", got " + shape_string(t.shape()));
  }
}

struct ConvGeometry {
  std::size_t n, cin, h, w, cout, kh, kw, hout, wout, stride, pad;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return hout * wout; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// col[(c*kh + ki)*kw + kj][oy*wout + ox] = in[c][oy*s + ki - p][ox*s + kj - p]
void im2col(const ConvGeometry& g, const double* in, double* col) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    const double* plane = in + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = col + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oy * g.wout;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wout, 0.0);
            continue;
          }
          const double* src = plane + iy * g.w;
          for (std::size_t ox = 0; ox < g.wout; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* in) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    double* plane = in + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = col + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oy = 0; oy < g.hout; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            continue;
          }
          const double* src = row + oy * g.wout;
          double* dst = plane + iy * g.w;
          for (std::size_t ox = 0; ox < g.wout; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) {
              dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
}

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (stride < 1 || padding < 0) {
    throw Error(ErrorCode::invalid_argument, "conv2d: stride must be >= 1 and padding >= 0, got stride " +
                                                 std::to_string(stride) + " padding " + std::to_string(padding));
  }
  ConvGeometry g{};
  g.n = input.dim(0);
  g.cin = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  g.stride = static_cast<std::size_t>(stride);
  g.pad = static_cast<std::size_t>(padding);
  if (weight.dim(1) != g.cin) {
    throw Error(ErrorCode::shape_mismatch, "conv2d: input channels " + std::to_string(g.cin) +
                                               " != weight input channels " + std::to_string(weight.dim(1)));
  }
  if (g.kh % 2 == 0 || g.kw % 2 == 0) {
    throw Error(ErrorCode::invalid_argument,
                "conv2d: kernel " + std::to_string(g.kh) + "x" + std::to_string(g.kw) + " must have odd sides");
  }
  const auto span_h = g.h + 2 * g.pad;
  const auto span_w = g.w + 2 * g.pad;
  if (span_h < g.kh || span_w < g.kw || (span_h - g.kh) % g.stride != 0 || (span_w - g.kw) % g.stride != 0) {
    throw Error(ErrorCode::shape_mismatch, "conv2d: input " + std::to_string(g.h) + "x" + std::to_string(g.w) +
                                               " with kernel " + std::to_string(g.kh) + "x" + std::to_string(g.kw) +
                                               ", padding " + std::to_string(padding) + ", stride " +
                                               std::to_string(stride) + " does not tile");
  }
  g.hout = (span_h - g.kh) / g.stride + 1;
  g.wout = (span_w - g.kw) / g.stride + 1;
  if (bias.defined() && bias.shape() != Shape{g.cout}) {
    throw Error(ErrorCode::shape_mismatch, "conv2d: bias shape " + shape_string(bias.shape()) + " != [" +
                                               std::to_string(g.cout) + "]");
  }
  return g;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = x[i] + y[i];
  }
  record_op({a, b}, out, [a, b](std::span<const double> g) {
    accumulate_grad(a, g);
    accumulate_grad(b, g);
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = x[i] - y[i];
  }
  record_op({a, b}, out, [a, b](std::span<const double> g) {
    accumulate_grad(a, g);
    if (b.requires_grad()) {
      auto gb = Tensor(b).mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] -= g[i];
      }
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = x[i] * y[i];
  }
  record_op({a, b}, out, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = Tensor(a).mutable_grad();
      auto y = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * y[i];
      }
    }
    if (b.requires_grad()) {
      auto gb = Tensor(b).mutable_grad();
      auto x = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] += g[i] * x[i];
      }
    }
  });
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = x[i] * factor;
  }
  record_op({a}, out, [a, factor](std::span<const double> g) {
    auto ga = Tensor(a).mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * factor;
    }
  });
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = v[i] > 0.0 ? v[i] : 0.0;
  }
  record_op({x}, out, [x](std::span<const double> g) {
    auto gx = Tensor(x).mutable_grad();
    auto v = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > 0.0) {
        gx[i] += g[i];
      }
    }
  });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = v[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-v[i])) : std::exp(v[i]) / (1.0 + std::exp(v[i]));
  }
  record_op({x}, out, [x, out](std::span<const double> g) {
    auto gx = Tensor(x).mutable_grad();
    auto s = out.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * s[i] * (1.0 - s[i]);
    }
  });
  return out;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) {
    total += v;
  }
  Tensor out = Tensor::scalar(total);
  record_op({x}, out, [x](std::span<const double> g) {
    auto gx = Tensor(x).mutable_grad();
    for (auto& v : gx) {
      v += g[0];
    }
  });
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw Error(ErrorCode::shape_mismatch,
                "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  record_op({x}, out, [x](std::span<const double> g) { accumulate_grad(x, g); });
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  const ConvGeometry g = conv_geometry(input, weight, bias, stride, padding);
  Tensor out(Shape{g.n, g.cout, g.hout, g.wout});

  ConstMatrixMap w(weight.data().data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
  std::vector<double> col(g.pointwise() ? 0 : g.patch() * g.pixels());
  const auto in_stride = g.cin * g.h * g.w;
  const auto out_stride = g.cout * g.pixels();
  for (std::size_t n = 0; n < g.n; ++n) {
    const double* in = input.data().data() + n * in_stride;
    const double* cols = in;
    if (!g.pointwise()) {
      im2col(g, in, col.data());
      cols = col.data();
    }
    ConstMatrixMap c(cols, static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.pixels()));
    MatrixMap o(out.mutable_data().data() + n * out_stride, static_cast<Eigen::Index>(g.cout),
                static_cast<Eigen::Index>(g.pixels()));
    o.noalias() = w * c;
    if (bias.defined()) {
      auto b = bias.data();
      for (std::size_t k = 0; k < g.cout; ++k) {
        o.row(static_cast<Eigen::Index>(k)).array() += b[k];
      }
    }
  }

  record_op({input, weight, bias}, out, [input, weight, bias, g](std::span<const double> grad) {
    const auto in_stride = g.cin * g.h * g.w;
    const auto out_stride = g.cout * g.pixels();
    const auto patch = static_cast<Eigen::Index>(g.patch());
    const auto pixels = static_cast<Eigen::Index>(g.pixels());
    const auto cout = static_cast<Eigen::Index>(g.cout);
    std::vector<double> col(g.pointwise() ? 0 : g.patch() * g.pixels());
    std::vector<double> dcol(g.patch() * g.pixels());
    ConstMatrixMap w(weight.data().data(), cout, patch);
    for (std::size_t n = 0; n < g.n; ++n) {
      ConstMatrixMap dout(grad.data() + n * out_stride, cout, pixels);
      if (weight.requires_grad()) {
        const double* in = input.data().data() + n * in_stride;
        const double* cols = in;
        if (!g.pointwise()) {
          im2col(g, in, col.data());
          cols = col.data();
        }
        ConstMatrixMap c(cols, patch, pixels);
        MatrixMap dw(Tensor(weight).mutable_grad().data(), cout, patch);
        dw.noalias() += dout * c.transpose();
      }
      if (bias.defined() && bias.requires_grad()) {
        auto db = Tensor(bias).mutable_grad();
        // Plain loop: Eigen's vectorised sum over a Map depends on the
        // buffer's alignment, which breaks bitwise reproducibility.
        const double* go = grad.data() + n * out_stride;
        for (std::size_t k = 0; k < g.cout; ++k) {
          double acc = 0.0;
          for (std::size_t p = 0; p < g.pixels(); ++p) {
            acc += go[k * g.pixels() + p];
          }
          db[k] += acc;
        }
      }
      if (input.requires_grad()) {
        double* din = Tensor(input).mutable_grad().data() + n * in_stride;
        if (g.pointwise()) {
          MatrixMap di(din, patch, pixels);
          di.noalias() += w.transpose() * dout;
        } else {
          MatrixMap dc(dcol.data(), patch, pixels);
          dc.noalias() = w.transpose() * dout;
          col2im_add(g, dcol.data(), din);
        }
      }
    }
  });
  return out;
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "fully_connected", "input");
  require_rank(weight, 2, "fully_connected", "weight");
  const auto n = input.dim(0);
  const auto cin = input.dim(1);
  const auto cout = weight.dim(0);
  if (weight.dim(1) != cin) {
    throw Error(ErrorCode::shape_mismatch, "fully_connected: input features " + std::to_string(cin) +
                                               " != weight columns " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) {
    throw Error(ErrorCode::shape_mismatch, "fully_connected: bias shape " + shape_string(bias.shape()) + " != [" +
                                               std::to_string(cout) + "]");
  }
  Tensor out(Shape{n, cout});
  auto x = input.data();
  auto w = weight.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < cout; ++k) {
      double acc = bias.defined() ? bias.data()[k] : 0.0;
      for (std::size_t j = 0; j < cin; ++j) {
        acc += w[k * cin + j] * x[i * cin + j];
      }
      o[i * cout + k] = acc;
    }
  }
  record_op({input, weight, bias}, out, [input, weight, bias, n, cin, cout](std::span<const double> g) {
    auto x = input.data();
    auto w = weight.data();
    if (input.requires_grad()) {
      auto gx = Tensor(input).mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < cout; ++k) {
          for (std::size_t j = 0; j < cin; ++j) {
            gx[i * cin + j] += g[i * cout + k] * w[k * cin + j];
          }
        }
      }
    }
    if (weight.requires_grad()) {
      auto gw = Tensor(weight).mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < cout; ++k) {
          for (std::size_t j = 0; j < cin; ++j) {
            gw[k * cin + j] += g[i * cout + k] * x[i * cin + j];
          }
        }
      }
    }
    if (bias.defined() && bias.requires_grad()) {
      auto gb = Tensor(bias).mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < cout; ++k) {
          gb[k] += g[i * cout + k];
        }
      }
    }
  });
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 4, "global_avg_pool", "input");
  const auto nc = input.dim(0) * input.dim(1);
  const auto hw = input.dim(2) * input.dim(3);
  Tensor out(Shape{input.dim(0), input.dim(1)});
  auto x = input.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < nc; ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      acc += x[i * hw + p];
    }
    o[i] = acc / static_cast<double>(hw);
  }
  record_op({input}, out, [input, nc, hw](std::span<const double> g) {
    auto gx = Tensor(input).mutable_grad();
    for (std::size_t i = 0; i < nc; ++i) {
      const double share = g[i] / static_cast<double>(hw);
      for (std::size_t p = 0; p < hw; ++p) {
        gx[i * hw + p] += share;
      }
    }
  });
  return out;
}

Tensor channelwise_scale(const Tensor& input, const Tensor& weights) {
  require_rank(input, 4, "channelwise_scale", "input");
  if (weights.shape() != Shape{input.dim(0), input.dim(1)}) {
    throw Error(ErrorCode::shape_mismatch, "channelwise_scale: weights " + shape_string(weights.shape()) +
                                               " do not match batch/channels of " + shape_string(input.shape()));
  }
  const auto nc = input.dim(0) * input.dim(1);
  const auto hw = input.dim(2) * input.dim(3);
  Tensor out(input.shape());
  auto x = input.data();
  auto s = weights.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t p = 0; p < hw; ++p) {
      o[i * hw + p] = x[i * hw + p] * s[i];
    }
  }
  record_op({input, weights}, out, [input, weights, nc, hw](std::span<const double> g) {
    auto x = input.data();
    auto s = weights.data();
    if (input.requires_grad()) {
      auto gx = Tensor(input).mutable_grad();
      for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t p = 0; p < hw; ++p) {
          gx[i * hw + p] += g[i * hw + p] * s[i];
        }
      }
    }
    if (weights.requires_grad()) {
      auto gs = Tensor(weights).mutable_grad();
      for (std::size_t i = 0; i < nc; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < hw; ++p) {
          acc += g[i * hw + p] * x[i * hw + p];
        }
        gs[i] += acc;
      }
    }
  });
  return out;
}

Tensor pointwise_scale(const Tensor& input, const Tensor& map) {
  require_rank(input, 4, "pointwise_scale", "input");
  if (map.shape() != Shape{input.dim(0), 1, input.dim(2), input.dim(3)}) {
    throw Error(ErrorCode::shape_mismatch, "pointwise_scale: map " + shape_string(map.shape()) +
                                               " does not match spatial dims of " + shape_string(input.shape()));
  }
  const auto n = input.dim(0);
  const auto c = input.dim(1);
  const auto hw = input.dim(2) * input.dim(3);
  Tensor out(input.shape());
  auto x = input.data();
  auto m = map.data();
  auto o = out.mutable_data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t k = 0; k < c; ++k) {
      const auto base = (b * c + k) * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        o[base + p] = x[base + p] * m[b * hw + p];
      }
    }
  }
  record_op({input, map}, out, [input, map, n, c, hw](std::span<const double> g) {
    auto x = input.data();
    auto m = map.data();
    if (input.requires_grad()) {
      auto gx = Tensor(input).mutable_grad();
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t k = 0; k < c; ++k) {
          const auto base = (b * c + k) * hw;
          for (std::size_t p = 0; p < hw; ++p) {
            gx[base + p] += g[base + p] * m[b * hw + p];
          }
        }
      }
    }
    if (map.requires_grad()) {
      auto gm = Tensor(map).mutable_grad();
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t k = 0; k < c; ++k) {
          const auto base = (b * c + k) * hw;
          for (std::size_t p = 0; p < hw; ++p) {
            gm[b * hw + p] += g[base + p] * x[base + p];
          }
        }
      }
    }
  });
  return out;
}

Tensor avg_pool2x2(const Tensor& input) {
  require_rank(input, 4, "avg_pool2x2", "input");
  const auto h = input.dim(2);
  const auto w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorCode::shape_mismatch,
                "avg_pool2x2: spatial dims " + std::to_string(h) + "x" + std::to_string(w) + " must be even");
  }
  const auto planes = input.dim(0) * input.dim(1);
  const auto ho = h / 2;
  const auto wo = w / 2;
  Tensor out(Shape{input.dim(0), input.dim(1), ho, wo});
  auto x = input.data();
  auto o = out.mutable_data();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data() + p * h * w;
    double* dst = o.data() + p * ho * wo;
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        dst[i * wo + j] = 0.25 * (src[2 * i * w + 2 * j] + src[2 * i * w + 2 * j + 1] + src[(2 * i + 1) * w + 2 * j] +
                                  src[(2 * i + 1) * w + 2 * j + 1]);
      }
    }
  }
  record_op({input}, out, [input, planes, h, w](std::span<const double> g) {
    auto gx = Tensor(input).mutable_grad();
    const auto ho = h / 2;
    const auto wo = w / 2;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = g.data() + p * ho * wo;
      double* dst = gx.data() + p * h * w;
      for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          const double share = 0.25 * src[i * wo + j];
          dst[2 * i * w + 2 * j] += share;
          dst[2 * i * w + 2 * j + 1] += share;
          dst[(2 * i + 1) * w + 2 * j] += share;
          dst[(2 * i + 1) * w + 2 * j + 1] += share;
        }
      }
    }
  });
  return out;
}

Tensor upsample_nearest2x(const Tensor& input) {
  require_rank(input, 4, "upsample_nearest2x", "input");
  const auto planes = input.dim(0) * input.dim(1);
  const auto h = input.dim(2);
  const auto w = input.dim(3);
  const auto wo = 2 * w;
  Tensor out(Shape{input.dim(0), input.dim(1), 2 * h, wo});
  auto x = input.data();
  auto o = out.mutable_data();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data() + p * h * w;
    double* dst = o.data() + p * 4 * h * w;
    for (std::size_t i = 0; i < 2 * h; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        dst[i * wo + j] = src[(i / 2) * w + j / 2];
      }
    }
  }
  record_op({input}, out, [input, planes, h, w](std::span<const double> g) {
    auto gx = Tensor(input).mutable_grad();
    const auto wo = 2 * w;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = g.data() + p * 4 * h * w;
      double* dst = gx.data() + p * h * w;
      for (std::size_t i = 0; i < 2 * h; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          dst[(i / 2) * w + j / 2] += src[i * wo + j];
        }
      }
    }
  });
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels", "first operand");
  require_rank(b, 4, "concat_channels", "second operand");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw Error(ErrorCode::shape_mismatch,
                "concat_channels: " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " disagree");
  }
  const auto n = a.dim(0);
  const auto sa = a.dim(1) * a.dim(2) * a.dim(3);
  const auto sb = b.dim(1) * b.dim(2) * b.dim(3);
  Tensor out(Shape{n, a.dim(1) + b.dim(1), a.dim(2), a.dim(3)});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * sa, sa, o.data() + i * (sa + sb));
    std::copy_n(b.data().data() + i * sb, sb, o.data() + i * (sa + sb) + sa);
  }
  record_op({a, b}, out, [a, b, n, sa, sb](std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = Tensor(a).mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < sa; ++k) {
          ga[i * sa + k] += g[i * (sa + sb) + k];
        }
      }
    }
    if (b.requires_grad()) {
      auto gb = Tensor(b).mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < sb; ++k) {
          gb[i * sb + k] += g[i * (sa + sb) + sa + k];
        }
      }
    }
  });
  return out;
}

Tensor l2_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "l2_loss");
  auto p = pred.data();
  auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += d * d;
  }
  const double count = static_cast<double>(p.size());
  Tensor out = Tensor::scalar(acc / count);
  record_op({pred}, out, [pred, target, count](std::span<const double> g) {
    auto gp = Tensor(pred).mutable_grad();
    auto p = pred.data();
    auto t = target.data();
    const double factor = 2.0 * g[0] / count;
    for (std::size_t i = 0; i < gp.size(); ++i) {
      gp[i] += factor * (p[i] - t[i]);
    }
  });
  return out;
}

} // namespace ddrecon::ops
