#pragma once

// Single-sample layer kernels with reverse-mode gradients. Tensors are
// channel-major (c, h, w).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uhs/error.hpp"

namespace uhs::nn {

template <std::floating_point T>
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int channels, int height, int width, T fill = T(0))
      : c(channels), h(height), w(width), data(static_cast<std::size_t>(channels) * height * width, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  T& at(int ch, int y, int x) { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  T at(int ch, int y, int x) const { return data[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  bool same_shape(const Tensor& o) const noexcept { return c == o.c && h == o.h && w == o.w; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

template <std::floating_point T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <std::floating_point T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <std::floating_point T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// ---------------------------------------------------------------------------
// Convolution

struct ConvShape {
  int in = 0;
  int out = 0;
  int k = 3;
  int stride = 1;

  int pad() const noexcept { return k / 2; }
  int out_size(int n) const noexcept { return (n + 2 * pad() - k) / stride + 1; }
  std::size_t weight_count() const noexcept { return static_cast<std::size_t>(out) * in * k * k; }
};

namespace detail {

/// Column matrix (in*k*k, ho*wo) of zero-padded input patches.
template <std::floating_point T>
void im2col(const ConvShape& s, const Tensor<T>& x, int ho, int wo, std::vector<T>& col) {
  const int k = s.k;
  const int pad = s.pad();
  const auto cols = static_cast<std::size_t>(ho) * wo;
  col.assign(static_cast<std::size_t>(s.in) * k * k * cols, T(0));
  for (int ci = 0; ci < s.in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          if (iy < 0 || iy >= x.h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            if (ix >= 0 && ix < x.w) row[oy * wo + ox] = x.at(ci, iy, ix);
          }
        }
      }
    }
  }
}

template <std::floating_point T>
void col2im(const ConvShape& s, const std::vector<T>& col, int ho, int wo, Tensor<T>& dx) {
  const int k = s.k;
  const int pad = s.pad();
  const auto cols = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < s.in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          if (iy < 0 || iy >= dx.h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            if (ix >= 0 && ix < dx.w) dx.at(ci, iy, ix) += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// y = W * x + b with zero padding k/2. `weight` is (out, in, k, k).
template <std::floating_point T>
Tensor<T> conv_forward(const ConvShape& s, const T* weight, const T* bias, const Tensor<T>& x) {
  if (x.c != s.in) throw InvalidArgument("convolution expects " + std::to_string(s.in) + " channels, got " + std::to_string(x.c));
  const int ho = s.out_size(x.h);
  const int wo = s.out_size(x.w);
  Tensor<T> y(s.out, ho, wo);
  const auto cols = static_cast<Eigen::Index>(ho) * wo;
  const auto depth = static_cast<Eigen::Index>(s.in) * s.k * s.k;
  ConstMatMap<T> W(weight, s.out, depth);
  MatMap<T> Y(y.data.data(), s.out, cols);
  if (s.k == 1 && s.stride == 1) {
    Y.noalias() = W * ConstMatMap<T>(x.data.data(), depth, cols);
  } else {
    std::vector<T> col;
    detail::im2col(s, x, ho, wo, col);
    Y.noalias() = W * ConstMatMap<T>(col.data(), depth, cols);
  }
  for (int o = 0; o < s.out; ++o) Y.row(o).array() += bias[o];
  return y;
}

/// Accumulates dW and db; writes dx when requested.
template <std::floating_point T>
void conv_backward(const ConvShape& s, const T* weight, const Tensor<T>& x, const Tensor<T>& dy, T* dweight,
                   T* dbias, Tensor<T>* dx) {
  const int ho = dy.h;
  const int wo = dy.w;
  const auto cols = static_cast<Eigen::Index>(ho) * wo;
  const auto depth = static_cast<Eigen::Index>(s.in) * s.k * s.k;
  ConstMatMap<T> dY(dy.data.data(), s.out, cols);
  MatMap<T> dW(dweight, s.out, depth);
  for (int o = 0; o < s.out; ++o) dbias[o] += dY.row(o).sum();
  const bool direct = s.k == 1 && s.stride == 1;
  std::vector<T> col;
  if (direct) {
    dW.noalias() += dY * ConstMatMap<T>(x.data.data(), depth, cols).transpose();
  } else {
    detail::im2col(s, x, ho, wo, col);
    dW.noalias() += dY * ConstMatMap<T>(col.data(), depth, cols).transpose();
  }
  if (dx == nullptr) return;
  *dx = Tensor<T>(x.c, x.h, x.w);
  ConstMatMap<T> W(weight, s.out, depth);
  if (direct) {
    MatMap<T>(dx->data.data(), depth, cols).noalias() = W.transpose() * dY;
  } else {
    col.resize(static_cast<std::size_t>(depth * cols));
    MatMap<T>(col.data(), depth, cols).noalias() = W.transpose() * dY;
    detail::col2im(s, col, ho, wo, *dx);
  }
}

// ---------------------------------------------------------------------------
// Pointwise and structural layers

template <std::floating_point T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.data) v = std::max(v, T(0));
}

/// Gradient through a rectifier given its output y.
template <std::floating_point T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.size(); ++i) {
    if (!(y.data[i] > T(0))) dy.data[i] = T(0);
  }
}

template <std::floating_point T>
Tensor<T> upsample2(const Tensor<T>& x) {
  Tensor<T> y(x.c, 2 * x.h, 2 * x.w);
  for (int c = 0; c < x.c; ++c) {
    for (int i = 0; i < y.h; ++i) {
      for (int j = 0; j < y.w; ++j) y.at(c, i, j) = x.at(c, i / 2, j / 2);
    }
  }
  return y;
}

template <std::floating_point T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.c, dy.h / 2, dy.w / 2);
  for (int c = 0; c < dy.c; ++c) {
    for (int i = 0; i < dy.h; ++i) {
      for (int j = 0; j < dy.w; ++j) dx.at(c, i / 2, j / 2) += dy.at(c, i, j);
    }
  }
  return dx;
}

template <std::floating_point T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.h != b.h || a.w != b.w) throw InvalidArgument("concatenated tensors differ in spatial shape");
  Tensor<T> y(a.c + b.c, a.h, a.w);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

/// Splits a concatenation gradient back into its parts (first `channels_a`).
template <std::floating_point T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& dy, int channels_a) {
  Tensor<T> da(channels_a, dy.h, dy.w);
  Tensor<T> db(dy.c - channels_a, dy.h, dy.w);
  const auto split = static_cast<std::ptrdiff_t>(da.size());
  std::copy(dy.data.begin(), dy.data.begin() + split, da.data.begin());
  std::copy(dy.data.begin() + split, dy.data.end(), db.data.begin());
  return {std::move(da), std::move(db)};
}

template <std::floating_point T>
T sigmoid(T z) noexcept {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

enum class Head { sigmoid, tanhshrink };

inline const char* to_string(Head h) { return h == Head::sigmoid ? "sigmoid" : "tanhshrink"; }

inline Head head_from_string(const std::string& s) {
  if (s == "sigmoid") return Head::sigmoid;
  if (s == "tanhshrink") return Head::tanhshrink;
  throw InvalidArgument("unknown head '" + s + "'");
}

template <std::floating_point T>
Tensor<T> head_forward(Head head, const Tensor<T>& z) {
  Tensor<T> y = z;
  for (auto& v : y.data) v = head == Head::sigmoid ? sigmoid(v) : v - std::tanh(v);
  return y;
}

/// dz from dy; sigmoid uses the output y, tanhshrink the input z.
template <std::floating_point T>
Tensor<T> head_backward(Head head, const Tensor<T>& z, const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dz = dy;
  for (std::size_t i = 0; i < dz.size(); ++i) {
    if (head == Head::sigmoid) {
      dz.data[i] *= y.data[i] * (T(1) - y.data[i]);
    } else {
      const T t = std::tanh(z.data[i]);
      dz.data[i] *= t * t;
    }
  }
  return dz;
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
int sign(T r) noexcept {
  return (r > T(0)) - (r < T(0));
}

template <std::floating_point T, typename U>
T mae(std::span<const T> pred, std::span<const U> target) {
  require(pred.size() == target.size() && !pred.empty(), "MAE needs equal, non-empty inputs");
  T sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - static_cast<T>(target[i]));
  return sum / static_cast<T>(pred.size());
}

/// d mean|pred - target| / d pred, scaled by `scale`; sign(0) = 0.
template <std::floating_point T, typename U>
Tensor<T> mae_backward(const Tensor<T>& pred, std::span<const U> target, T scale = T(1)) {
  Tensor<T> g(pred.c, pred.h, pred.w);
  const T w = scale / static_cast<T>(pred.size());
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = w * static_cast<T>(sign(pred.data[i] - static_cast<T>(target[i])));
  return g;
}

}  // namespace uhs::nn
