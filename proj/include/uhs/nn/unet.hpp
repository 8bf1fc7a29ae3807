#pragma once

// U-shaped encoder-decoder with skip connections.
//
//   encoder level l:  conv3x3 + ReLU, conv3x3 + ReLU (skip), stride-2 conv3x3 + ReLU
//   bottleneck:       conv3x3 + ReLU, conv3x3 + ReLU
//   decoder level l:  nearest upsample x2, conv3x3 + ReLU, concat skip,
//                     conv3x3 + ReLU, conv3x3 + ReLU
//   head:             conv1x1 to one channel, sigmoid or tanhshrink
//
// Level l has width * 2^l channels. Parameters live in one flat vector.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "uhs/nn/layers.hpp"
#include "uhs/rng.hpp"

namespace uhs::nn {

struct NetSpec {
  int levels = 3;
  int width = 16;
  int in_channels = 5;
  Head head = Head::sigmoid;

  void validate() const {
    require(levels >= 1, "levels must be >= 1");
    require(width >= 1, "width must be >= 1");
    require(in_channels >= 1, "input channels must be >= 1");
  }
  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct ParamInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool is_weight = false;  // biases are excluded from L2
};

template <std::floating_point T>
class UNet {
 public:
  struct Layer {
    ConvShape shape;
    std::size_t weight = 0;  // offsets into the flat parameter vector
    std::size_t bias = 0;
  };

  /// Activations kept for the backward pass.
  struct Cache {
    Tensor<T> input;
    std::vector<Tensor<T>> enc_a, enc_b, down;
    Tensor<T> bott_a, bott_b;
    std::vector<Tensor<T>> up_in, up, cat, dec_a, dec_b;
    Tensor<T> z, out;
  };

  UNet() = default;

  /// He-normal weights from per-layer seeded streams, zero biases.
  UNet(const NetSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec.validate();
    const int L = spec.levels;
    auto width = [&](int l) { return spec.width << l; };
    for (int l = 0; l < L; ++l) {
      add_layer("enc" + std::to_string(l) + "a", {l == 0 ? spec.in_channels : width(l - 1), width(l), 3, 1});
      add_layer("enc" + std::to_string(l) + "b", {width(l), width(l), 3, 1});
      add_layer("down" + std::to_string(l), {width(l), width(l), 3, 2});
    }
    add_layer("bott_a", {width(L - 1), width(L), 3, 1});
    add_layer("bott_b", {width(L), width(L), 3, 1});
    for (int l = L - 1; l >= 0; --l) {
      add_layer("up" + std::to_string(l), {width(l + 1), width(l), 3, 1});
      add_layer("dec" + std::to_string(l) + "a", {2 * width(l), width(l), 3, 1});
      add_layer("dec" + std::to_string(l) + "b", {width(l), width(l), 3, 1});
    }
    add_layer("head", {width(0), 1, 1, 1});
    params_.assign(size_, T(0));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& ly = layers_[i];
      const int fan_in = ly.shape.in * ly.shape.k * ly.shape.k;
      const double std = i + 1 == layers_.size() ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in);
      CounterRng rng(hash_seed(seed, i));
      for (std::size_t w = 0; w < ly.shape.weight_count(); ++w) params_[ly.weight + w] = static_cast<T>(std * rng.normal());
    }
  }

  const NetSpec& spec() const noexcept { return spec_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const std::vector<ParamInfo>& layout() const noexcept { return layout_; }
  std::vector<T>& params() noexcept { return params_; }
  const std::vector<T>& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return size_; }

  /// Zero head weights and the given head bias: a constant initial output
  /// that lets the decoder features grow from zero.
  void reset_head(T bias) {
    const auto& head = layers_.back();
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(head.weight), head.shape.weight_count(), T(0));
    params_[head.bias] = bias;
  }

  void check_input(const Tensor<T>& x) const {
    const int m = 1 << spec_.levels;
    if (x.c != spec_.in_channels) {
      throw InvalidArgument("net expects " + std::to_string(spec_.in_channels) + " input channels, got " +
                            std::to_string(x.c));
    }
    if (x.h <= 0 || x.w <= 0 || x.h % m != 0 || x.w % m != 0) {
      throw InvalidArgument("input resolution must be divisible by " + std::to_string(m));
    }
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Cache c;
    forward(x, c);
    return std::move(c.out);
  }

  const Tensor<T>& forward(const Tensor<T>& x, Cache& c) const {
    check_input(x);
    const int L = spec_.levels;
    std::size_t li = 0;
    auto conv = [&](const Tensor<T>& in, bool relu) {
      const auto& ly = layers_[li++];
      auto y = conv_forward(ly.shape, &params_[ly.weight], &params_[ly.bias], in);
      if (relu) relu_inplace(y);
      return y;
    };
    c.input = x;
    c.enc_a.resize(L);
    c.enc_b.resize(L);
    c.down.resize(L);
    const Tensor<T>* h = &c.input;
    for (int l = 0; l < L; ++l) {
      c.enc_a[l] = conv(*h, true);
      c.enc_b[l] = conv(c.enc_a[l], true);
      c.down[l] = conv(c.enc_b[l], true);
      h = &c.down[l];
    }
    c.bott_a = conv(*h, true);
    c.bott_b = conv(c.bott_a, true);
    c.up_in.resize(L);
    c.up.resize(L);
    c.cat.resize(L);
    c.dec_a.resize(L);
    c.dec_b.resize(L);
    h = &c.bott_b;
    for (int l = L - 1; l >= 0; --l) {
      c.up_in[l] = upsample2(*h);
      c.up[l] = conv(c.up_in[l], true);
      c.cat[l] = concat(c.up[l], c.enc_b[l]);
      c.dec_a[l] = conv(c.cat[l], true);
      c.dec_b[l] = conv(c.dec_a[l], true);
      h = &c.dec_b[l];
    }
    c.z = conv(*h, false);
    c.out = head_forward(spec_.head, c.z);
    return c.out;
  }

  /// Accumulates parameter gradients of <dout, output> into `grad`.
  void backward(const Cache& c, const Tensor<T>& dout, std::vector<T>& grad) const {
    require(grad.size() == size_, "gradient buffer has the wrong size");
    require(dout.same_shape(c.out), "output gradient has the wrong shape");
    const int L = spec_.levels;
    std::size_t li = layers_.size();
    // Walks the layers in reverse creation order.
    auto conv_back = [&](const Tensor<T>& in, const Tensor<T>& dy, bool want_dx) {
      const auto& ly = layers_[--li];
      Tensor<T> dx;
      conv_backward(ly.shape, &params_[ly.weight], in, dy, &grad[ly.weight], &grad[ly.bias], want_dx ? &dx : nullptr);
      return dx;
    };

    Tensor<T> d = head_backward(spec_.head, c.z, c.out, dout);
    d = conv_back(c.dec_b[0], d, true);
    std::vector<Tensor<T>> dskip(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      relu_backward_inplace(c.dec_b[l], d);
      d = conv_back(c.dec_a[l], d, true);
      relu_backward_inplace(c.dec_a[l], d);
      d = conv_back(c.cat[l], d, true);
      auto [dup, ds] = concat_backward(d, c.up[l].c);
      dskip[static_cast<std::size_t>(l)] = std::move(ds);
      relu_backward_inplace(c.up[l], dup);
      d = conv_back(c.up_in[l], dup, true);
      d = upsample2_backward(d);
    }
    relu_backward_inplace(c.bott_b, d);
    d = conv_back(c.bott_a, d, true);
    relu_backward_inplace(c.bott_a, d);
    d = conv_back(L > 0 ? c.down[L - 1] : c.input, d, true);
    for (int l = L - 1; l >= 0; --l) {
      relu_backward_inplace(c.down[l], d);
      d = conv_back(c.enc_b[l], d, true);
      auto& s = dskip[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += s.data[i];
      relu_backward_inplace(c.enc_b[l], d);
      d = conv_back(c.enc_a[l], d, true);
      relu_backward_inplace(c.enc_a[l], d);
      d = conv_back(l == 0 ? c.input : c.down[l - 1], d, l > 0);
    }
  }

 private:
  void add_layer(const std::string& name, ConvShape shape) {
    Layer ly{shape, size_, size_ + shape.weight_count()};
    layout_.push_back({name + ".weight", {shape.out, shape.in, shape.k, shape.k}, ly.weight, shape.weight_count(), true});
    layout_.push_back({name + ".bias", {shape.out}, ly.bias, static_cast<std::size_t>(shape.out), false});
    size_ = ly.bias + static_cast<std::size_t>(shape.out);
    layers_.push_back(ly);
  }

  NetSpec spec_;
  std::vector<Layer> layers_;
  std::vector<ParamInfo> layout_;
  std::vector<T> params_;
  std::size_t size_ = 0;
};

}  // namespace uhs::nn
