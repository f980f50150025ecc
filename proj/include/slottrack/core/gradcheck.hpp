#pragma once

// Central-difference gradient verification. The closure builds a fresh graph
// from the given leaf tensors on every call, so perturbing a leaf value and
// re-running the closure yields the numeric directional derivative.

#include <functional>
#include <vector>

#include "slottrack/core/tensor.hpp"

namespace slottrack::core {

inline double relative_error(double a, double b) {
  const double denom = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / denom;
}

// Checks d loss / d x for a single input; `f` must treat `x` as a leaf.
inline double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                         const std::vector<double>& point, int rows, int cols,
                         double eps = 1e-5) {
  if (eps < 1e-7 || eps > 1e-3) throw std::invalid_argument("grad_check: eps out of range");
  auto x = Tensor<double>::param(rows, cols, point);
  auto loss = f(x);
  backward(loss);
  if (!x.has_grad()) throw std::runtime_error("grad_check: no gradient reached the input");
  std::vector<double> analytic = x.grad();

  double max_err = 0.0;
  for (size_t i = 0; i < point.size(); ++i) {
    auto plus = point, minus = point;
    plus[i] += eps;
    minus[i] -= eps;
    const double fp = f(Tensor<double>::constant(rows, cols, plus)).item();
    const double fm = f(Tensor<double>::constant(rows, cols, minus)).item();
    const double numeric = (fp - fm) / (2.0 * eps);
    if (!std::isfinite(numeric)) throw std::runtime_error("grad_check: non-smooth point");
    max_err = std::max(max_err, relative_error(analytic[i], numeric));
  }
  return max_err;
}

// Checks d loss / d p for every listed parameter tensor. The builder reads the
// parameters' current values, so coordinates are perturbed in place.
inline double grad_check_params(const std::function<Tensor<double>()>& build,
                                std::vector<Tensor<double>> params, double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  auto loss = build();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& p : params)
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.size(), 0.0));

  double max_err = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    auto& val = params[k].mutable_value();
    for (size_t i = 0; i < val.size(); ++i) {
      const double saved = val[i];
      val[i] = saved + eps;
      const double fp = build().item();
      val[i] = saved - eps;
      const double fm = build().item();
      val[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw std::runtime_error("grad_check_params: non-smooth point");
      max_err = std::max(max_err, relative_error(analytic[k][i], numeric));
    }
  }
  return max_err;
}

}  // namespace slottrack::core
