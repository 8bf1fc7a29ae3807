#pragma once

// Mini-batch training with a halving learning rate, periodic validation,
// best-validation checkpointing and early stopping on the training error.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "uhs/dataset.hpp"
#include "uhs/nn/optim.hpp"
#include "uhs/nn/unet.hpp"
#include "uhs/rng.hpp"

namespace uhs::nn {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  int halving_period = 25;
  int max_epochs = 200;
  int patience = 10;
  int validation_cadence = 10;
  double l2 = 1e-5;  // coefficient of sum(w^2) over weights, biases excluded
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  int workers = 1;
  long max_steps = 0;  // optimizer step budget, 0 = unlimited

  void validate() const {
    require(batch_size > 0, "batch size must be positive");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(halving_period > 0, "halving period must be positive");
    require(max_epochs > 0, "max epochs must be positive");
    require(patience > 0 && patience <= max_epochs, "patience must lie in [1, max epochs]");
    require(validation_cadence > 0, "validation cadence must be positive");
    require(l2 >= 0.0, "L2 coefficient must be non-negative");
    require(workers >= 1, "worker count must be positive");
    require(max_steps >= 0, "step budget must be non-negative");
  }
};

struct HistoryRow {
  int epoch = 0;
  double train_mae = 0.0;
  std::optional<double> val_mae;
  double lr = 0.0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

template <std::floating_point T>
struct TrainResult {
  std::vector<T> params;  // best validation checkpoint
  std::vector<HistoryRow> history;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  long steps = 0;
  bool early_stopped = false;
};

template <std::floating_point T>
Tensor<T> to_tensor(std::span<const float> v, int c, int h, int w) {
  Tensor<T> t(c, h, w);
  require(v.size() == t.size(), "tensor data has the wrong size");
  std::copy(v.begin(), v.end(), t.data.begin());
  return t;
}

template <std::floating_point T>
std::vector<float> predict(const UNet<T>& net, std::span<const float> input, int h, int w) {
  const auto out = net.forward(to_tensor<T>(input, net.spec().in_channels, h, w));
  std::vector<float> y(out.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>(out.data[i]);
  return y;
}

/// Mean per-sample MAE.
template <std::floating_point T>
double evaluate_mae(const UNet<T>& net, const std::vector<Sample>& samples, int h, int w) {
  require(!samples.empty(), "no samples to evaluate");
  double sum = 0.0;
  for (const auto& s : samples) {
    const auto y = predict(net, s.input, h, w);
    sum += static_cast<double>(mae<float, float>(y, s.target));
  }
  return sum / static_cast<double>(samples.size());
}

/// Data loss (mean over the batch of per-sample MAE) and its gradient,
/// summed over samples in batch order so the result does not depend on the
/// worker count.
template <std::floating_point T>
T batch_loss_and_grad(const UNet<T>& net, const std::vector<Sample>& samples, std::span<const std::size_t> batch,
                      int h, int w, std::vector<T>& grad, int workers = 1) {
  require(!batch.empty(), "empty batch");
  const auto P = net.parameter_count();
  grad.assign(P, T(0));
  const auto scale = T(1) / static_cast<T>(batch.size());
  const auto wave = std::min<std::size_t>(static_cast<std::size_t>(workers), batch.size());
  std::vector<std::vector<T>> slot(wave, std::vector<T>(P));
  std::vector<T> losses(batch.size());

  auto work = [&](std::size_t b, std::vector<T>& g) {
    const auto& s = samples[batch[b]];
    typename UNet<T>::Cache cache;
    const auto& y = net.forward(to_tensor<T>(s.input, net.spec().in_channels, h, w), cache);
    losses[b] = mae<T, float>(y.data, s.target);
    std::fill(g.begin(), g.end(), T(0));
    net.backward(cache, mae_backward<T, float>(y, s.target, scale), g);
  };

  for (std::size_t first = 0; first < batch.size(); first += wave) {
    const auto count = std::min(wave, batch.size() - first);
    if (count == 1 || workers == 1) {
      for (std::size_t k = 0; k < count; ++k) {
        work(first + k, slot[0]);
        for (std::size_t i = 0; i < P; ++i) grad[i] += slot[0][i];
      }
      continue;
    }
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < count; ++k) threads.emplace_back(work, first + k, std::ref(slot[k]));
    for (auto& t : threads) t.join();
    for (std::size_t k = 0; k < count; ++k) {
      for (std::size_t i = 0; i < P; ++i) grad[i] += slot[k][i];
    }
  }
  T loss = 0;
  for (T l : losses) loss += l;
  return loss * scale;
}

/// Adds the gradient of l2 * sum(w^2) over weight tensors; returns the term.
template <std::floating_point T>
T add_l2(const UNet<T>& net, double l2, std::vector<T>& grad) {
  if (l2 == 0.0) return T(0);
  const auto& p = net.params();
  T term = 0;
  for (const auto& info : net.layout()) {
    if (!info.is_weight) continue;
    for (std::size_t i = info.offset; i < info.offset + info.size; ++i) {
      term += p[i] * p[i];
      grad[i] += static_cast<T>(2.0 * l2) * p[i];
    }
  }
  return static_cast<T>(l2) * term;
}

template <std::floating_point T>
TrainResult<T> train(UNet<T>& net, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, int h,
                     int w, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) throw InvalidArgument("training and validation sets must be non-empty");

  TrainResult<T> r;
  r.params = net.params();
  Optimizer<T> opt(cfg.optimizer, net.parameter_count());
  std::vector<std::size_t> order(train_set.size());
  std::vector<T> grad;
  double best_train = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = learning_rate(cfg.learning_rate, epoch, cfg.halving_period);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(hash_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool budget_hit = false;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
      const auto count = std::min(order.size() - first, static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> batch(order.data() + first, count);
      const T loss = batch_loss_and_grad(net, train_set, batch, h, w, grad, cfg.workers);
      const T reg = add_l2(net, cfg.l2, grad);
      if (!std::isfinite(static_cast<double>(loss + reg))) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(first) + " (data " + std::to_string(static_cast<double>(loss)) +
                             ", l2 " + std::to_string(static_cast<double>(reg)) + ")");
      }
      opt.step(net.params(), grad, lr);
      ++r.steps;
      loss_sum += static_cast<double>(loss) * static_cast<double>(count);
      seen += count;
      if (cfg.max_steps > 0 && r.steps >= cfg.max_steps) {
        budget_hit = true;
        break;
      }
    }

    HistoryRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_mae = loss_sum / static_cast<double>(seen);
    if (row.train_mae < best_train) {
      best_train = row.train_mae;
      stale = 0;
    } else {
      ++stale;
    }
    const bool stop = stale >= cfg.patience || budget_hit || epoch + 1 == cfg.max_epochs;
    if ((epoch + 1) % cfg.validation_cadence == 0 || stop) {
      const double v = evaluate_mae(net, val_set, h, w);
      row.val_mae = v;
      if (v < r.best_val || r.best_epoch < 0) {
        r.best_val = v;
        r.best_epoch = epoch;
        r.params = net.params();
      }
    }
    r.history.push_back(row);
    if (stop) {
      r.early_stopped = stale >= cfg.patience;
      break;
    }
  }
  return r;
}

}  // namespace uhs::nn
