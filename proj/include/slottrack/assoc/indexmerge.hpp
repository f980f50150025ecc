#pragma once

// The discrete interface between slots and memory. Indexing scores each slot
// against the rollout (slots as query, rollout as key/value) and reads the
// head-averaged attention weights as a row-stochastic slot-to-buffer
// assignment. Merging runs attention the other way around (rollout as query,
// slots as key/value) with the transposed index as attention mask, pooling the
// slots assigned to each buffer. Buffers whose mask row has no support fall
// back to their rollout row.

#include <string>
#include <vector>

#include "slottrack/core/attention.hpp"
#include "slottrack/core/tensor.hpp"

namespace slottrack::assoc {

enum class IndexVariant { TwoMha, OneMhaShared, DotProduct };

inline const char* to_string(IndexVariant v) {
  switch (v) {
    case IndexVariant::TwoMha: return "two_mha";
    case IndexVariant::OneMhaShared: return "one_mha_shared";
    case IndexVariant::DotProduct: return "dot_product";
  }
  return "two_mha";
}

inline IndexVariant index_variant_from_string(const std::string& s) {
  if (s == "two_mha") return IndexVariant::TwoMha;
  if (s == "one_mha_shared") return IndexVariant::OneMhaShared;
  if (s == "dot_product") return IndexVariant::DotProduct;
  throw std::invalid_argument("unknown index variant: " + s);
}

template <typename T>
struct AssocParams {
  core::MhaParams<T> index_mha, merge_mha;
  IndexVariant variant = IndexVariant::TwoMha;

  static AssocParams init(int dim, int heads, IndexVariant variant, core::Rng& rng) {
    AssocParams p;
    p.variant = variant;
    p.index_mha = core::MhaParams<T>::init(dim, heads, rng);
    // shared-weights ablation: both steps alias one parameter set
    p.merge_mha = (variant == IndexVariant::OneMhaShared) ? p.index_mha
                                                          : core::MhaParams<T>::init(dim, heads, rng);
    return p;
  }

  std::vector<std::pair<std::string, core::Tensor<T>>> named_params() const {
    std::vector<std::pair<std::string, core::Tensor<T>>> out;
    auto push = [&out](const std::string& prefix, const core::MhaParams<T>& m) {
      out.emplace_back(prefix + ".wq", m.wq);
      out.emplace_back(prefix + ".bq", m.bq);
      out.emplace_back(prefix + ".wk", m.wk);
      out.emplace_back(prefix + ".bk", m.bk);
      out.emplace_back(prefix + ".wv", m.wv);
      out.emplace_back(prefix + ".bv", m.bv);
      out.emplace_back(prefix + ".wo", m.wo);
      out.emplace_back(prefix + ".bo", m.bo);
    };
    push("assoc.index", index_mha);
    if (variant != IndexVariant::OneMhaShared) push("assoc.merge", merge_mha);
    return out;
  }
};

// Soft slot-to-buffer index over the alive buffers (rows: slots, columns:
// buffers in rollout row order). Each row is a distribution.
template <typename T>
core::Tensor<T> index(const core::Tensor<T>& slots, const core::Tensor<T>& rollout,
                      const AssocParams<T>& params) {
  if (rollout.rows() < 1) throw std::invalid_argument("index: no active buffers");
  if (params.variant == IndexVariant::DotProduct) {
    const T scale = T(1) / std::sqrt(static_cast<T>(slots.cols()));
    return core::softmax_rows(mul_scalar(matmul(slots, transpose(rollout)), scale));
  }
  return core::multi_head_attention(slots, rollout, rollout, params.index_mha).weights;
}

// Merged buffer representations; `idx` is the (soft or binarized) index used
// as the transposed attention mask.
template <typename T>
core::Tensor<T> merge(const core::Tensor<T>& slots, const core::Tensor<T>& rollout,
                      const core::Tensor<T>& idx, const AssocParams<T>& params) {
  const int n = slots.rows(), m = rollout.rows();
  if (idx.rows() != n || idx.cols() != m) throw std::invalid_argument("merge: index shape mismatch");

  std::vector<char> support(m, 0);
  bool all_supported = true;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i)
      if (idx.at(i, j) > T(0)) {
        support[j] = 1;
        break;
      }
    all_supported = all_supported && support[j];
  }

  auto mask = transpose(idx);
  if (all_supported)
    return core::multi_head_attention(rollout, slots, slots, &mask, params.merge_mha).output;

  // Buffers that received no slot keep their rollout row. Their mask rows are
  // replaced by a uniform row so the attention stays well defined; a gate then
  // swaps those output rows back to the rollout.
  std::vector<T> gate_v(m), inv_v(m), fill_v(static_cast<size_t>(m) * n, T(0));
  for (int j = 0; j < m; ++j) {
    gate_v[j] = support[j] ? T(1) : T(0);
    inv_v[j] = support[j] ? T(0) : T(1);
    if (!support[j])
      for (int i = 0; i < n; ++i) fill_v[static_cast<long>(j) * n + i] = T(1);
  }
  auto gate_col = core::Tensor<T>::constant(m, 1, gate_v);
  auto safe_mask = add(mul(mask, broadcast_col(gate_col, n)),
                       core::Tensor<T>::constant(m, n, std::move(fill_v)));
  auto attn = core::multi_head_attention(rollout, slots, slots, &safe_mask, params.merge_mha).output;
  return add(mul(attn, broadcast_col(gate_col, rollout.cols())),
             mul(rollout, broadcast_col(core::Tensor<T>::constant(m, 1, inv_v), rollout.cols())));
}

// Row-wise one-hot at the argmax; ties break toward the lowest buffer index.
template <typename T>
core::Tensor<T> binarize(const core::Tensor<T>& soft) {
  const int n = soft.rows(), m = soft.cols();
  std::vector<T> hard(static_cast<size_t>(n) * m, T(0));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < m; ++j)
      if (soft.at(i, j) > soft.at(i, best)) best = j;
    hard[static_cast<long>(i) * m + best] = T(1);
  }
  return core::Tensor<T>::constant(n, m, std::move(hard));
}

}  // namespace slottrack::assoc
