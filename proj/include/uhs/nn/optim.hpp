#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include "uhs/error.hpp"

namespace uhs::nn {

enum class OptimizerKind { adam, sgd };

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw InvalidArgument("unknown optimizer '" + s + "' (expected adam|sgd)");
}

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

/// lr0 * 0.5^floor(epoch / period), epochs counted from 0.
inline double learning_rate(double lr0, int epoch, int halving_period) {
  require(halving_period > 0, "halving period must be positive");
  return lr0 * std::ldexp(1.0, -(epoch / halving_period));
}

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain gradient descent.
template <std::floating_point T>
class Optimizer {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Optimizer() = default;
  Optimizer(OptimizerKind kind, std::size_t size) : kind_(kind) {
    if (kind == OptimizerKind::adam) {
      m_.assign(size, T(0));
      v_.assign(size, T(0));
    }
  }

  OptimizerKind kind() const noexcept { return kind_; }
  long steps() const noexcept { return t_; }

  void step(std::vector<T>& params, const std::vector<T>& grads, double lr) {
    require(params.size() == grads.size(), "parameter and gradient sizes differ");
    ++t_;
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= static_cast<T>(lr) * grads[i];
      return;
    }
    require(m_.size() == params.size(), "optimizer state has the wrong size");
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const auto b1 = static_cast<T>(kBeta1);
    const auto b2 = static_cast<T>(kBeta2);
    const auto step_size = static_cast<T>(lr / c1);
    const auto root_c2 = static_cast<T>(std::sqrt(c2));
    const auto eps = static_cast<T>(kEps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const T g = grads[i];
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
      params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) / root_c2 + eps);
    }
  }

 private:
  OptimizerKind kind_ = OptimizerKind::adam;
  std::vector<T> m_;
  std::vector<T> v_;
  long t_ = 0;
};

}  // namespace uhs::nn
