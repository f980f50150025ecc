#pragma once

// Multi-head attention with learned projections and the gate-then-renormalize
// mask semantics: positions with mask value 0 get a -1e9 logit sentinel (their
// weight underflows to exactly 0), mask values in (0,1) scale the post-softmax
// weights, and rows are renormalized over the surviving support. The returned
// weight matrix is the head average.

#include <optional>
#include <vector>

#include "slottrack/core/rng.hpp"
#include "slottrack/core/tensor.hpp"

namespace slottrack::core {

template <typename T>
struct MhaParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  int dim = 0;
  int heads = 1;

  static MhaParams init(int dim, int heads, Rng& rng) {
    if (heads <= 0 || dim % heads != 0)
      throw std::invalid_argument("mha: heads must divide dim");
    MhaParams p;
    p.dim = dim;
    p.heads = heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto w = [&](int r, int c) {
      std::vector<T> v(static_cast<size_t>(r) * c);
      for (auto& x : v) x = static_cast<T>(rng.uniform(-scale, scale));
      return Tensor<T>::param(r, c, std::move(v));
    };
    p.wq = w(dim, dim);
    p.wk = w(dim, dim);
    p.wv = w(dim, dim);
    p.wo = w(dim, dim);
    p.bq = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bk = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bv = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bo = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    return p;
  }

  // Identity projections, zero bias; test hook.
  static MhaParams identity(int dim, int heads = 1) {
    MhaParams p;
    p.dim = dim;
    p.heads = heads;
    std::vector<T> eye(static_cast<size_t>(dim) * dim, T(0));
    for (int i = 0; i < dim; ++i) eye[static_cast<long>(i) * dim + i] = T(1);
    p.wq = Tensor<T>::param(dim, dim, eye);
    p.wk = Tensor<T>::param(dim, dim, eye);
    p.wv = Tensor<T>::param(dim, dim, eye);
    p.wo = Tensor<T>::param(dim, dim, eye);
    p.bq = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bk = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bv = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    p.bo = Tensor<T>::from(1, dim, std::vector<T>(dim, T(0)), true);
    return p;
  }

  std::vector<Tensor<T>> params() const { return {wq, bq, wk, bk, wv, bv, wo, bo}; }
};

template <typename T>
struct AttnOutput {
  Tensor<T> output;   // queries x dim
  Tensor<T> weights;  // queries x keys, head-averaged, rows sum to 1
};

template <typename T>
AttnOutput<T> multi_head_attention(const Tensor<T>& query, const Tensor<T>& key,
                                   const Tensor<T>& value, const MhaParams<T>& p);

template <typename T>
AttnOutput<T> multi_head_attention(const Tensor<T>& query, const Tensor<T>& key,
                                   const Tensor<T>& value, const Tensor<T>* attn_mask,
                                   const MhaParams<T>& p) {
  if (query.cols() != p.dim || key.cols() != p.dim || value.cols() != p.dim)
    throw std::invalid_argument("mha: input width does not match params");
  if (key.rows() != value.rows()) throw std::invalid_argument("mha: key/value length mismatch");
  if (attn_mask) {
    if (attn_mask->rows() != query.rows() || attn_mask->cols() != key.rows())
      throw std::invalid_argument("mha: mask shape mismatch");
    for (const auto& x : attn_mask->value())
      if (x < T(0)) throw std::invalid_argument("mha: mask entries must be nonnegative");
  }

  const int dh = p.dim / p.heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  auto q = add(matmul(query, p.wq), broadcast_row(p.bq, query.rows()));
  auto k = add(matmul(key, p.wk), broadcast_row(p.bk, key.rows()));
  auto v = add(matmul(value, p.wv), broadcast_row(p.bv, value.rows()));

  std::vector<Tensor<T>> head_outs;
  Tensor<T> weight_sum;
  for (int h = 0; h < p.heads; ++h) {
    auto qh = slice_cols(q, h * dh, dh);
    auto kh = slice_cols(k, h * dh, dh);
    auto vh = slice_cols(v, h * dh, dh);
    auto logits = mul_scalar(matmul(qh, transpose(kh)), scale);
    auto w = softmax_rows(logits, attn_mask);
    head_outs.push_back(matmul(w, vh));
    weight_sum = (h == 0) ? w : add(weight_sum, w);
  }

  AttnOutput<T> out;
  out.output = add(matmul(concat_cols(head_outs), p.wo), broadcast_row(p.bo, query.rows()));
  out.weights = mul_scalar(weight_sum, T(1) / static_cast<T>(p.heads));
  return out;
}

template <typename T>
AttnOutput<T> multi_head_attention(const Tensor<T>& query, const Tensor<T>& key,
                                   const Tensor<T>& value, const MhaParams<T>& p) {
  return multi_head_attention(query, key, value, static_cast<const Tensor<T>*>(nullptr), p);
}

}  // namespace slottrack::core
