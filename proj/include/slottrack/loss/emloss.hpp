#pragma once

// Assignment cost between a slot and a memory representation, and the
// expectation-style association loss: the index-weighted double sum of
// per-pair costs, applied to both the merged memory and the rollout. The
// normative definition is the explicit double loop; this vectorized form is
// checked against it in the tests.

#include <stdexcept>

#include "slottrack/core/tensor.hpp"
#include "slottrack/world/decoder.hpp"

namespace slottrack::loss {

struct LossWeights {
  double mask_bce = 1.0;    // lambda_1
  double pixel_mse = 0.1;   // lambda_2
  double feature_mse = 0.0; // lambda_3

  void validate() const {
    if (mask_bce < 0 || pixel_mse < 0 || feature_mse < 0)
      throw std::invalid_argument("loss weights must be nonnegative");
    if (mask_bce == 0 && pixel_mse == 0 && feature_mse == 0)
      throw std::invalid_argument("at least one loss weight must be positive");
  }
};

inline constexpr double kBceEps = 1e-6;

// Pairwise cost matrix C[i][j] = assign_cost(target row i, prediction row j).
// Targets are the slots (pseudo-labels from the frozen grouping module),
// predictions are memory representations; both sides stay differentiable.
template <typename T>
core::Tensor<T> assign_cost_matrix(const core::Tensor<T>& targets, const core::Tensor<T>& preds,
                                   const LossWeights& w, const world::DecoderSpec& spec) {
  using core::Tensor;
  w.validate();
  if (targets.cols() != preds.cols()) throw std::invalid_argument("assign_cost: width mismatch");
  const int n = targets.rows(), m = preds.rows();

  Tensor<T> cost;
  bool have = false;
  auto accumulate = [&](const Tensor<T>& term, double weight) {
    auto scaled = mul_scalar(term, static_cast<T>(weight));
    cost = have ? add(cost, scaled) : scaled;
    have = true;
  };

  if (w.mask_bce > 0 || w.pixel_mse > 0) {
    auto dec_t = world::decode(targets, spec);
    auto dec_p = world::decode(preds, spec);
    if (w.mask_bce > 0) {
      // mean-over-pixel BCE with the slot mask as target:
      // B = -(1/P) [ T log(P') + (1-T) log(1-P') ], P' clamped away from {0,1}
      const int P = spec.pixels();
      auto pc = clamp(dec_p.mask, static_cast<T>(kBceEps), static_cast<T>(1.0 - kBceEps));
      auto t1 = matmul(dec_t.mask, transpose(log(pc)));
      auto one_minus_t = add_scalar(neg(dec_t.mask), T(1));
      auto t2 = matmul(one_minus_t, transpose(log(add_scalar(neg(pc), T(1)))));
      accumulate(mul_scalar(add(t1, t2), T(-1.0 / P)), w.mask_bce);
    }
    if (w.pixel_mse > 0) {
      // mean squared error over the 3*P reconstruction values
      const int R = dec_t.recon.cols();
      auto sq_t = rowsum(mul(dec_t.recon, dec_t.recon));
      auto sq_p = rowsum(mul(dec_p.recon, dec_p.recon));
      auto cross = matmul(dec_t.recon, transpose(dec_p.recon));
      auto dist = add(sub(broadcast_col(sq_t, m), mul_scalar(cross, T(2))),
                      broadcast_row(transpose(sq_p), n));
      accumulate(mul_scalar(dist, T(1.0 / R)), w.pixel_mse);
    }
  }
  if (w.feature_mse > 0) {
    const int d = targets.cols();
    auto sq_t = rowsum(mul(targets, targets));
    auto sq_p = rowsum(mul(preds, preds));
    auto cross = matmul(targets, transpose(preds));
    auto dist = add(sub(broadcast_col(sq_t, m), mul_scalar(cross, T(2))),
                    broadcast_row(transpose(sq_p), n));
    accumulate(mul_scalar(dist, T(1.0 / d)), w.feature_mse);
  }
  return cost;
}

// Single-pair cost (1x1 tensor).
template <typename T>
core::Tensor<T> assign_cost(const core::Tensor<T>& s, const core::Tensor<T>& m,
                            const LossWeights& w, const world::DecoderSpec& spec) {
  if (s.rows() != 1 || m.rows() != 1) throw std::invalid_argument("assign_cost: expected row vectors");
  return assign_cost_matrix(s, m, w, spec);
}

// sum_i sum_j I[i,j] * (cost(s_i, merged_j) + cost(s_i, rollout_j)).
// `grad_through_index` keeps the weighting term on the tape; switching it off
// fixes the posterior per step (strict E-step reading).
template <typename T>
core::Tensor<T> em_loss(const core::Tensor<T>& slots, const core::Tensor<T>& merged,
                        const core::Tensor<T>& rollout, const core::Tensor<T>& index,
                        const LossWeights& w, const world::DecoderSpec& spec,
                        bool grad_through_index = true) {
  if (index.rows() != slots.rows() || index.cols() != merged.rows() ||
      merged.rows() != rollout.rows())
    throw std::invalid_argument("em_loss: shape mismatch");
  auto cost = add(assign_cost_matrix(slots, merged, w, spec),
                  assign_cost_matrix(slots, rollout, w, spec));
  auto weights = grad_through_index ? index : stop_gradient(index);
  auto total = sum(mul(weights, cost));
  if (!std::isfinite(static_cast<double>(total.item())))
    throw std::runtime_error("em_loss: non-finite value");
  return total;
}

}  // namespace slottrack::loss
