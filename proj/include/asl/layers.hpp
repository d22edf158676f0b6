#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "asl/errors.hpp"
#include "asl/rng.hpp"
#include "asl/tensor.hpp"

namespace asl {

enum class Mode { Train, Eval };

// 3x3 kernels, stride 1, zero padding 1 ("same" spatial size).
template <typename T>
struct ConvParams {
  Tensor<T> kernels;  // (out_ch, in_ch, 3, 3)
  Tensor<T> bias;     // (out_ch,)
};

template <typename T>
struct DenseParams {
  Tensor<T> weights;  // (in_features, out_features)
  Tensor<T> bias;     // (out_features,)
};

namespace detail {

// col is (cin*9) x (h*w): row (c, ki, kj) holds the input plane c shifted by
// (ki-1, kj-1) with zero fill at the borders.
template <typename T>
void im2col_3x3(const T* x, std::size_t cin, std::size_t h, std::size_t w,
                T* col) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < cin; ++c) {
    const T* plane = x + c * hw;
    for (int ki = 0; ki < 3; ++ki) {
      for (int kj = 0; kj < 3; ++kj) {
        T* row = col + ((c * 3 + ki) * 3 + kj) * hw;
        const int dy = ki - 1;
        const int dx = kj - 1;
        for (std::size_t oy = 0; oy < h; ++oy) {
          const long long iy = static_cast<long long>(oy) + dy;
          T* dst = row + oy * w;
          if (iy < 0 || iy >= static_cast<long long>(h)) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * w;
          if (dx < 0) {
            dst[0] = T(0);
            std::copy(src, src + (w - 1), dst + 1);
          } else if (dx > 0) {
            std::copy(src + 1, src + w, dst);
            dst[w - 1] = T(0);
          } else {
            std::copy(src, src + w, dst);
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-adds col rows back into the (cin, h, w)
// gradient plane. x must be zero-initialized.
template <typename T>
void col2im_3x3(const T* col, std::size_t cin, std::size_t h, std::size_t w,
                T* x) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < cin; ++c) {
    T* plane = x + c * hw;
    for (int ki = 0; ki < 3; ++ki) {
      for (int kj = 0; kj < 3; ++kj) {
        const T* row = col + ((c * 3 + ki) * 3 + kj) * hw;
        const int dy = ki - 1;
        const int dx = kj - 1;
        for (std::size_t oy = 0; oy < h; ++oy) {
          const long long iy = static_cast<long long>(oy) + dy;
          if (iy < 0 || iy >= static_cast<long long>(h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * w;
          const T* src = row + oy * w;
          if (dx < 0) {
            for (std::size_t ox = 1; ox < w; ++ox) dst[ox - 1] += src[ox];
          } else if (dx > 0) {
            for (std::size_t ox = 0; ox + 1 < w; ++ox) dst[ox + 1] += src[ox];
          } else {
            for (std::size_t ox = 0; ox < w; ++ox) dst[ox] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& im2col_buffer() {
  static thread_local std::vector<T> ws;
  return ws;
}

template <typename T>
std::vector<T>& col_grad_buffer() {
  static thread_local std::vector<T> ws;
  return ws;
}

}  // namespace detail

template <typename T>
void check_conv_shapes(const Tensor<T>& input, const ConvParams<T>& params) {
  if (input.shape().rank() != 4) {
    raise(ErrorCode::Shape, "conv2d input must be (B, C, H, W)");
  }
  if (params.kernels.shape().rank() != 4 || params.kernels.shape()[2] != 3 ||
      params.kernels.shape()[3] != 3) {
    raise(ErrorCode::Shape, "conv2d kernels must be (out_ch, in_ch, 3, 3)");
  }
  if (input.shape()[1] != params.kernels.shape()[1]) {
    raise(ErrorCode::Shape,
          "conv2d channel mismatch: input has " +
              std::to_string(input.shape()[1]) + ", kernels expect " +
              std::to_string(params.kernels.shape()[1]));
  }
  if (params.bias.shape() != Shape{params.kernels.shape()[0]}) {
    raise(ErrorCode::Shape, "conv2d bias must be (out_ch,)");
  }
}

// Cross-correlation, stride 1, zero padding 1, plus per-channel bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvParams<T>& params) {
  check_conv_shapes(input, params);
  const std::size_t b = input.shape()[0];
  const std::size_t cin = input.shape()[1];
  const std::size_t h = input.shape()[2];
  const std::size_t w = input.shape()[3];
  const std::size_t cout = params.kernels.shape()[0];
  const std::size_t hw = h * w;
  const std::size_t krows = cin * 9;

  Tensor<T> out(Shape{b, cout, h, w});
#pragma omp parallel for schedule(static)
  for (long long s = 0; s < static_cast<long long>(b); ++s) {
    auto& col = detail::im2col_buffer<T>();
    col.resize(krows * hw);
    detail::im2col_3x3(input.data() + s * cin * hw, cin, h, w, col.data());
    T* y = out.data() + s * cout * hw;
    detail::gemm(false, false, cout, hw, krows, params.kernels.data(),
                 col.data(), T(0), y);
    for (std::size_t oc = 0; oc < cout; ++oc) {
      const T bias = params.bias[oc];
      T* p = y + oc * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] += bias;
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> dinput;
  Tensor<T> dkernels;
  Tensor<T> dbias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input,
                             const ConvParams<T>& params,
                             const Tensor<T>& dout) {
  check_conv_shapes(input, params);
  const std::size_t b = input.shape()[0];
  const std::size_t cin = input.shape()[1];
  const std::size_t h = input.shape()[2];
  const std::size_t w = input.shape()[3];
  const std::size_t cout = params.kernels.shape()[0];
  if (dout.shape() != Shape{b, cout, h, w}) {
    raise(ErrorCode::Shape, "conv2d_backward: upstream gradient shape " +
                                dout.shape().str() + " is wrong");
  }
  const std::size_t hw = h * w;
  const std::size_t krows = cin * 9;

  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(params.kernels.shape()),
                 Tensor<T>(params.bias.shape())};

  // Per-sample weight/bias contributions, reduced in sample order afterwards
  // so the result does not depend on thread scheduling.
  std::vector<std::vector<T>> dk(b), db(b);
#pragma omp parallel for schedule(static)
  for (long long s = 0; s < static_cast<long long>(b); ++s) {
    auto& col = detail::im2col_buffer<T>();
    auto& dcol = detail::col_grad_buffer<T>();
    col.resize(krows * hw);
    dcol.resize(krows * hw);
    detail::im2col_3x3(input.data() + s * cin * hw, cin, h, w, col.data());
    const T* dy = dout.data() + s * cout * hw;

    dk[s].resize(cout * krows);
    detail::gemm(false, true, cout, krows, hw, dy, col.data(), T(0),
                 dk[s].data());

    db[s].resize(cout);
    for (std::size_t oc = 0; oc < cout; ++oc) {
      T sum = T(0);
      const T* p = dy + oc * hw;
      for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      db[s][oc] = sum;
    }

    detail::gemm(true, false, krows, hw, cout, params.kernels.data(), dy, T(0),
                 dcol.data());
    detail::col2im_3x3(dcol.data(), cin, h, w, g.dinput.data() + s * cin * hw);
  }

  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < cout * krows; ++i) g.dkernels[i] += dk[s][i];
    for (std::size_t oc = 0; oc < cout; ++oc) g.dbias[oc] += db[s][oc];
  }
  return g;
}

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// Window max; ties go to the first element in row-major scan order.
template <typename T>
MaxPoolResult<T> maxpool2d(const Tensor<T>& input, std::size_t window,
                           std::size_t stride) {
  if (input.shape().rank() != 4) {
    raise(ErrorCode::Shape, "maxpool2d input must be (B, C, H, W)");
  }
  const std::size_t b = input.shape()[0];
  const std::size_t c = input.shape()[1];
  const std::size_t h = input.shape()[2];
  const std::size_t w = input.shape()[3];
  if (window == 0 || stride == 0 || window > h || window > w ||
      (h - window) % stride != 0 || (w - window) % stride != 0) {
    raise(ErrorCode::Shape, "maxpool2d: " + std::to_string(h) + "x" +
                                std::to_string(w) + " not tileable by window " +
                                std::to_string(window) + " stride " +
                                std::to_string(stride));
  }
  const std::size_t ho = (h - window) / stride + 1;
  const std::size_t wo = (w - window) / stride + 1;

  MaxPoolResult<T> res{Tensor<T>(Shape{b, c, ho, wo}),
                       std::vector<std::size_t>(b * c * ho * wo)};
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (s * c + ch) * h * w;
      const std::size_t obase = (s * c + ch) * ho * wo;
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          std::size_t best = base + oy * stride * w + ox * stride;
          T best_val = input[best];
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx =
                  base + (oy * stride + ky) * w + ox * stride + kx;
              if (input[idx] > best_val) {
                best_val = input[idx];
                best = idx;
              }
            }
          }
          res.output[obase + oy * wo + ox] = best_val;
          res.argmax[obase + oy * wo + ox] = best;
        }
      }
    }
  }
  return res;
}

// Routes each upstream gradient to its window's argmax.
template <typename T>
Tensor<T> maxpool2d_backward(const Shape& input_shape,
                             const std::vector<std::size_t>& argmax,
                             const Tensor<T>& dout) {
  if (argmax.size() != dout.size()) {
    raise(ErrorCode::Shape, "maxpool2d_backward: argmax/gradient mismatch");
  }
  Tensor<T> dinput(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    dinput[argmax[i]] += dout[i];
  }
  return dinput;
}

template <typename T>
void check_dense_shapes(const Tensor<T>& input, const DenseParams<T>& params) {
  if (input.shape().rank() != 2) {
    raise(ErrorCode::Shape, "dense input must be (B, features)");
  }
  if (params.weights.shape().rank() != 2 ||
      input.shape()[1] != params.weights.shape()[0]) {
    raise(ErrorCode::Shape,
          "dense: input features " + std::to_string(input.shape()[1]) +
              " do not match weights " + params.weights.shape().str());
  }
  if (params.bias.shape() != Shape{params.weights.shape()[1]}) {
    raise(ErrorCode::Shape, "dense bias must be (out_features,)");
  }
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const DenseParams<T>& params) {
  check_dense_shapes(input, params);
  const std::size_t b = input.shape()[0];
  const std::size_t fin = input.shape()[1];
  const std::size_t fout = params.weights.shape()[1];
  Tensor<T> out(Shape{b, fout});
  detail::gemm(false, false, b, fout, fin, input.data(), params.weights.data(),
               T(0), out.data());
  for (std::size_t r = 0; r < b; ++r) {
    T* row = out.data() + r * fout;
    for (std::size_t j = 0; j < fout; ++j) row[j] += params.bias[j];
  }
  return out;
}

template <typename T>
struct DenseGrads {
  Tensor<T> dinput;
  Tensor<T> dweights;
  Tensor<T> dbias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input,
                             const DenseParams<T>& params,
                             const Tensor<T>& dout) {
  check_dense_shapes(input, params);
  const std::size_t b = input.shape()[0];
  const std::size_t fin = input.shape()[1];
  const std::size_t fout = params.weights.shape()[1];
  if (dout.shape() != Shape{b, fout}) {
    raise(ErrorCode::Shape, "dense_backward: upstream gradient shape " +
                                dout.shape().str() + " is wrong");
  }
  DenseGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(params.weights.shape()),
                  Tensor<T>(params.bias.shape())};
  detail::gemm(false, true, b, fin, fout, dout.data(), params.weights.data(),
               T(0), g.dinput.data());
  detail::gemm(true, false, fin, fout, b, input.data(), dout.data(), T(0),
               g.dweights.data());
  for (std::size_t r = 0; r < b; ++r) {
    const T* row = dout.data() + r * fout;
    for (std::size_t j = 0; j < fout; ++j) g.dbias[j] += row[j];
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  return map(input, [](T v) { return v > T(0) ? v : T(0); });
}

// Subgradient at 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& dout) {
  require_same_shape(input, dout, "relu_backward");
  Tensor<T> g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    g[i] = input[i] > T(0) ? dout[i] : T(0);
  }
  return g;
}

// Row-wise exp(x - max) / sum, stable for logits up to +-1e4.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.shape().rank() != 2) {
    raise(ErrorCode::Shape, "softmax input must be (B, K)");
  }
  const std::size_t b = logits.shape()[0];
  const std::size_t k = logits.shape()[1];
  Tensor<T> probs(logits.shape());
  for (std::size_t r = 0; r < b; ++r) {
    const T* in = logits.data() + r * k;
    T* out = probs.data() + r * k;
    T mx = in[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, in[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < k; ++j) out[j] *= inv;
  }
  return probs;
}

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // entries in {0, 1/(1-p)}; all ones in eval mode
};

// Inverted dropout: survivors are scaled by 1/(1-p) so eval is an identity.
// Mask entries are drawn sequentially from the generator for reproducibility.
template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double p_drop, Mode mode,
                         Rng& rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    raise(ErrorCode::Parameter, "dropout rate must be in [0, 1)");
  }
  if (mode == Mode::Eval || p_drop == 0.0) {
    return {input, Tensor<T>(input.shape(), T(1))};
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p_drop));
  DropoutResult<T> res{Tensor<T>(input.shape()), Tensor<T>(input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T m = rng.uniform() < p_drop ? T(0) : keep_scale;
    res.mask[i] = m;
    res.output[i] = input[i] * m;
  }
  return res;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double p_drop, Mode mode,
                         std::uint64_t seed) {
  Rng rng(seed);
  return dropout(input, p_drop, mode, rng);
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& dout) {
  return mul(mask, dout);
}

}  // namespace asl
