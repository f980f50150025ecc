#pragma once

// Adam with bias correction and a per-step exponential learning-rate decay.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slottrack/core/tensor.hpp"

namespace slottrack::core {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_decay = 1.0;  // multiplicative per-step factor
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.size(), T(0));
      v_.emplace_back(p.size(), T(0));
    }
  }

  // Applies one update from the gradients accumulated on the parameters.
  // Parameters without an accumulated gradient are treated as zero-gradient.
  void step() {
    ++t_;
    const double lr_t = cfg_.lr * std::pow(cfg_.lr_decay, static_cast<double>(t_ - 1));
    const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      auto& val = p.mutable_value();
      auto& m = m_[k];
      auto& v = v_[k];
      const bool has = p.has_grad();
      if (has && p.grad().size() != val.size())
        throw std::invalid_argument("adam: gradient shape mismatch");
      for (long i = 0; i < p.size(); ++i) {
        const T g = has ? p.grad()[i] : T(0);
        if (!std::isfinite(static_cast<double>(g)))
          throw std::runtime_error("adam: non-finite gradient");
        m[i] = static_cast<T>(cfg_.beta1) * m[i] + static_cast<T>(1 - cfg_.beta1) * g;
        v[i] = static_cast<T>(cfg_.beta2) * v[i] + static_cast<T>(1 - cfg_.beta2) * g * g;
        const T mhat = m[i] / c1;
        const T vhat = v[i] / c2;
        val[i] -= static_cast<T>(lr_t) * mhat / (std::sqrt(vhat) + static_cast<T>(cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }
  const std::vector<Tensor<T>>& params() const { return params_; }
  std::vector<T>& moment1(size_t k) { return m_[k]; }
  std::vector<T>& moment2(size_t k) { return v_[k]; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace slottrack::core
