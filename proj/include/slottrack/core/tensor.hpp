#pragma once

// Reverse-mode autodiff over dense 2-D tensors. Each op records its parents
// and a backward closure on a tape node; backward() walks reachable nodes in
// reverse creation order (creation order is a topological order by
// construction), so gradient accumulation is deterministic. Values are
// immutable once an op has produced them. Ops whose inputs carry no gradient
// requirement skip the tape entirely and behave as eager kernel calls.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "slottrack/core/kernels.hpp"

namespace slottrack::core {

template <typename T>
struct TensorNode {
  int rows = 0, cols = 0;
  bool requires_grad = false;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;
  std::uint64_t id = 0;
  std::uint64_t visit_epoch = 0;

  long size() const { return static_cast<long>(rows) * cols; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;

  static Tensor from(int rows, int cols, std::vector<T> data, bool requires_grad = false) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("tensor: non-positive shape");
    if (data.size() != static_cast<size_t>(rows) * cols)
      throw std::invalid_argument("tensor: data length does not match shape");
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    n->id = next_node_id();
    return Tensor(std::move(n));
  }

  static Tensor constant(int rows, int cols, std::vector<T> data) {
    return from(rows, cols, std::move(data), false);
  }
  static Tensor param(int rows, int cols, std::vector<T> data) {
    return from(rows, cols, std::move(data), true);
  }
  static Tensor zeros(int rows, int cols) {
    return constant(rows, cols, std::vector<T>(static_cast<size_t>(rows) * cols, T(0)));
  }
  static Tensor full(int rows, int cols, T v) {
    return constant(rows, cols, std::vector<T>(static_cast<size_t>(rows) * cols, v));
  }
  static Tensor scalar(T v) { return constant(1, 1, {v}); }

  bool defined() const { return static_cast<bool>(node_); }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  long size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<T>& value() const { return node_->value; }
  const std::vector<T>& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  T at(int i, int j) const { return node_->value[static_cast<long>(i) * cols() + j]; }

  T item() const {
    if (size() != 1) throw std::invalid_argument("item: tensor is not scalar");
    return node_->value[0];
  }

  void zero_grad() { node_->grad.clear(); }

  // Parameter update path; only meaningful for leaf tensors between graphs.
  std::vector<T>& mutable_value() { return node_->value; }

  std::shared_ptr<Node> node() const { return node_; }
  bool same_node(const Tensor& o) const { return node_.get() == o.node_.get(); }

  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

template <typename T>
Tensor<T> make_result(int rows, int cols, std::vector<T> value,
                      std::vector<Tensor<T>> parents,
                      std::function<void(TensorNode<T>&)> backward_fn) {
  auto n = std::make_shared<TensorNode<T>>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  n->id = next_node_id();
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(n));
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---- elementwise ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> v(a.size());
  kernels::zip(a.value().data(), b.value().data(), v.data(), a.size(),
               [](T x, T y) { return x + y; });
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>(a.rows(), a.cols(), std::move(v), {a, b},
                                [an, bn](TensorNode<T>& out) {
                                  if (an->requires_grad) {
                                    an->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i) an->grad[i] += out.grad[i];
                                  }
                                  if (bn->requires_grad) {
                                    bn->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i) bn->grad[i] += out.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> v(a.size());
  kernels::zip(a.value().data(), b.value().data(), v.data(), a.size(),
               [](T x, T y) { return x - y; });
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>(a.rows(), a.cols(), std::move(v), {a, b},
                                [an, bn](TensorNode<T>& out) {
                                  if (an->requires_grad) {
                                    an->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i) an->grad[i] += out.grad[i];
                                  }
                                  if (bn->requires_grad) {
                                    bn->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i) bn->grad[i] -= out.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> v(a.size());
  kernels::zip(a.value().data(), b.value().data(), v.data(), a.size(),
               [](T x, T y) { return x * y; });
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>(a.rows(), a.cols(), std::move(v), {a, b},
                                [an, bn](TensorNode<T>& out) {
                                  if (an->requires_grad) {
                                    an->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i)
                                      an->grad[i] += out.grad[i] * bn->value[i];
                                  }
                                  if (bn->requires_grad) {
                                    bn->ensure_grad();
                                    for (long i = 0; i < out.size(); ++i)
                                      bn->grad[i] += out.grad[i] * an->value[i];
                                  }
                                });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.size());
  kernels::map(a.value().data(), v.data(), a.size(), [c](T x) { return x + c; });
  auto an = a.node();
  return detail::make_result<T>(a.rows(), a.cols(), std::move(v), {a},
                                [an](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (long i = 0; i < out.size(); ++i) an->grad[i] += out.grad[i];
                                });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.size());
  kernels::map(a.value().data(), v.data(), a.size(), [c](T x) { return x * c; });
  auto an = a.node();
  return detail::make_result<T>(a.rows(), a.cols(), std::move(v), {a},
                                [an, c](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (long i = 0; i < out.size(); ++i) an->grad[i] += c * out.grad[i];
                                });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return mul_scalar(a, T(-1));
}

namespace detail {

// Elementwise unary op; dfn(x, y) returns dy/dx.
template <typename T, class V, class D>
Tensor<T> unary(const Tensor<T>& a, V vfn, D dfn) {
  std::vector<T> v(a.size());
  kernels::map(a.value().data(), v.data(), a.size(), vfn);
  auto an = a.node();
  return make_result<T>(a.rows(), a.cols(), std::move(v), {a},
                        [an, dfn](TensorNode<T>& out) {
                          an->ensure_grad();
                          for (long i = 0; i < out.size(); ++i)
                            an->grad[i] += out.grad[i] * dfn(an->value[i], out.value[i]);
                        });
}

}  // namespace detail

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::sqrt(x); }, [](T, T y) { return T(0.5) / y; });
}

template <typename T>
Tensor<T> reciprocal(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return T(1) / x; }, [](T, T y) { return -y * y; });
}

// Gaussian-CDF form of GELU with its exact derivative.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T kInvSqrt2 = T(0.7071067811865475244);
  constexpr T kInvSqrt2Pi = T(0.3989422804014326779);
  return detail::unary(
      a,
      [](T x) { return T(0.5) * x * (T(1) + std::erf(x * kInvSqrt2)); },
      [](T x, T) {
        const T phi = T(0.5) * (T(1) + std::erf(x * kInvSqrt2));
        const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * x * x);
        return phi + x * pdf;
      });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  return detail::unary(
      a, [lo, hi](T x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](T x, T) { return (x > lo && x < hi) ? T(1) : T(0); });
}

// ---- matrix ops ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> v(static_cast<size_t>(m) * n);
  kernels::gemm_nn(a.value().data(), b.value().data(), v.data(), m, k, n);
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>(m, n, std::move(v), {a, b},
                                [an, bn, m, k, n](TensorNode<T>& out) {
                                  if (an->requires_grad) {
                                    an->ensure_grad();
                                    kernels::gemm_nt(out.grad.data(), bn->value.data(),
                                                     an->grad.data(), m, n, k, true);
                                  }
                                  if (bn->requires_grad) {
                                    bn->ensure_grad();
                                    kernels::gemm_tn(an->value.data(), out.grad.data(),
                                                     bn->grad.data(), m, k, n, true);
                                  }
                                });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const int m = a.rows(), n = a.cols();
  std::vector<T> v(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<long>(j) * m + i] = a.value()[static_cast<long>(i) * n + j];
  auto an = a.node();
  return detail::make_result<T>(n, m, std::move(v), {a},
                                [an, m, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (int i = 0; i < n; ++i)
                                    for (int j = 0; j < m; ++j)
                                      an->grad[static_cast<long>(j) * n + i] +=
                                          out.grad[static_cast<long>(i) * m + j];
                                });
}

// ---- reductions and broadcasts ----

template <typename T>
Tensor<T> rowsum(const Tensor<T>& a) {
  std::vector<T> v(a.rows());
  kernels::rowsum(a.value().data(), v.data(), a.rows(), a.cols());
  auto an = a.node();
  const int n = a.cols();
  return detail::make_result<T>(a.rows(), 1, std::move(v), {a},
                                [an, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (int i = 0; i < out.rows; ++i) {
                                    const T g = out.grad[i];
                                    T* gi = an->grad.data() + static_cast<long>(i) * n;
                                    for (int j = 0; j < n; ++j) gi[j] += g;
                                  }
                                });
}

template <typename T>
Tensor<T> colsum(const Tensor<T>& a) {
  std::vector<T> v(a.cols());
  kernels::colsum(a.value().data(), v.data(), a.rows(), a.cols());
  auto an = a.node();
  const int m = a.rows(), n = a.cols();
  return detail::make_result<T>(1, a.cols(), std::move(v), {a},
                                [an, m, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (int i = 0; i < m; ++i)
                                    for (int j = 0; j < n; ++j)
                                      an->grad[static_cast<long>(i) * n + j] += out.grad[j];
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (long i = 0; i < a.size(); ++i) s += a.value()[i];
  auto an = a.node();
  return detail::make_result<T>(1, 1, {s}, {a},
                                [an](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  const T g = out.grad[0];
                                  for (auto& x : an->grad) x += g;
                                });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return mul_scalar(sum(a), T(1) / static_cast<T>(a.size()));
}

// Row maxima as a detached constant (used for softmax stabilization; softmax
// is shift invariant so treating the max as constant is exact).
template <typename T>
Tensor<T> rowmax_detached(const Tensor<T>& a) {
  std::vector<T> v(a.rows());
  kernels::rowmax(a.value().data(), v.data(), a.rows(), a.cols());
  return Tensor<T>::constant(a.rows(), 1, std::move(v));
}

// v (m x 1) -> (m x cols)
template <typename T>
Tensor<T> broadcast_col(const Tensor<T>& v, int cols) {
  if (v.cols() != 1) throw std::invalid_argument("broadcast_col: expected column vector");
  const int m = v.rows();
  std::vector<T> val(static_cast<size_t>(m) * cols);
  for (int i = 0; i < m; ++i)
    std::fill(val.begin() + static_cast<long>(i) * cols, val.begin() + static_cast<long>(i + 1) * cols,
              v.value()[i]);
  auto vn = v.node();
  return detail::make_result<T>(m, cols, std::move(val), {v},
                                [vn, cols](TensorNode<T>& out) {
                                  vn->ensure_grad();
                                  for (int i = 0; i < out.rows; ++i) {
                                    T s = 0;
                                    const T* gi = out.grad.data() + static_cast<long>(i) * cols;
                                    for (int j = 0; j < cols; ++j) s += gi[j];
                                    vn->grad[i] += s;
                                  }
                                });
}

// v (1 x n) -> (rows x n)
template <typename T>
Tensor<T> broadcast_row(const Tensor<T>& v, int rows) {
  if (v.rows() != 1) throw std::invalid_argument("broadcast_row: expected row vector");
  const int n = v.cols();
  std::vector<T> val(static_cast<size_t>(rows) * n);
  for (int i = 0; i < rows; ++i)
    std::copy(v.value().begin(), v.value().end(), val.begin() + static_cast<long>(i) * n);
  auto vn = v.node();
  return detail::make_result<T>(rows, n, std::move(val), {v},
                                [vn, rows, n](TensorNode<T>& out) {
                                  vn->ensure_grad();
                                  for (int i = 0; i < rows; ++i)
                                    for (int j = 0; j < n; ++j)
                                      vn->grad[j] += out.grad[static_cast<long>(i) * n + j];
                                });
}

// ---- slicing and concatenation ----

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, int r0, int count) {
  if (r0 < 0 || count <= 0 || r0 + count > a.rows())
    throw std::invalid_argument("slice_rows: out of range");
  const int n = a.cols();
  std::vector<T> v(a.value().begin() + static_cast<long>(r0) * n,
                   a.value().begin() + static_cast<long>(r0 + count) * n);
  auto an = a.node();
  return detail::make_result<T>(count, n, std::move(v), {a},
                                [an, r0, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (int i = 0; i < out.rows; ++i)
                                    for (int j = 0; j < n; ++j)
                                      an->grad[static_cast<long>(r0 + i) * n + j] +=
                                          out.grad[static_cast<long>(i) * n + j];
                                });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, int c0, int count) {
  if (c0 < 0 || count <= 0 || c0 + count > a.cols())
    throw std::invalid_argument("slice_cols: out of range");
  const int m = a.rows(), n = a.cols();
  std::vector<T> v(static_cast<size_t>(m) * count);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < count; ++j)
      v[static_cast<long>(i) * count + j] = a.value()[static_cast<long>(i) * n + c0 + j];
  auto an = a.node();
  return detail::make_result<T>(m, count, std::move(v), {a},
                                [an, c0, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (int i = 0; i < out.rows; ++i)
                                    for (int j = 0; j < out.cols; ++j)
                                      an->grad[static_cast<long>(i) * n + c0 + j] +=
                                          out.grad[static_cast<long>(i) * out.cols + j];
                                });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  const int n = parts[0].cols();
  int m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) throw std::invalid_argument("concat_rows: column mismatch");
    m += p.rows();
  }
  std::vector<T> v;
  v.reserve(static_cast<size_t>(m) * n);
  for (const auto& p : parts) v.insert(v.end(), p.value().begin(), p.value().end());
  std::vector<std::shared_ptr<TensorNode<T>>> nodes;
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.rows();
  }
  return detail::make_result<T>(m, n, std::move(v), parts,
                                [nodes, offsets, n](TensorNode<T>& out) {
                                  for (size_t k = 0; k < nodes.size(); ++k) {
                                    auto& pn = nodes[k];
                                    if (!pn->requires_grad) continue;
                                    pn->ensure_grad();
                                    const long base = static_cast<long>(offsets[k]) * n;
                                    for (long i = 0; i < pn->size(); ++i) pn->grad[i] += out.grad[base + i];
                                  }
                                });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const int m = parts[0].rows();
  int n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
    n += p.cols();
  }
  std::vector<T> v(static_cast<size_t>(m) * n);
  int c0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < m; ++i)
      std::copy(p.value().begin() + static_cast<long>(i) * p.cols(),
                p.value().begin() + static_cast<long>(i + 1) * p.cols(),
                v.begin() + static_cast<long>(i) * n + c0);
    c0 += p.cols();
  }
  std::vector<std::shared_ptr<TensorNode<T>>> nodes;
  std::vector<int> coffs;
  c0 = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    coffs.push_back(c0);
    c0 += p.cols();
  }
  return detail::make_result<T>(m, n, std::move(v), parts,
                                [nodes, coffs, m, n](TensorNode<T>& out) {
                                  for (size_t k = 0; k < nodes.size(); ++k) {
                                    auto& pn = nodes[k];
                                    if (!pn->requires_grad) continue;
                                    pn->ensure_grad();
                                    const int pc = pn->cols;
                                    for (int i = 0; i < m; ++i)
                                      for (int j = 0; j < pc; ++j)
                                        pn->grad[static_cast<long>(i) * pc + j] +=
                                            out.grad[static_cast<long>(i) * n + coffs[k] + j];
                                  }
                                });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, const std::vector<int>& idx) {
  const int n = a.cols();
  std::vector<T> v(idx.size() * n);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.rows()) throw std::invalid_argument("gather_rows: index out of range");
    std::copy(a.value().begin() + static_cast<long>(idx[i]) * n,
              a.value().begin() + static_cast<long>(idx[i] + 1) * n,
              v.begin() + static_cast<long>(i) * n);
  }
  auto an = a.node();
  auto indices = idx;
  return detail::make_result<T>(static_cast<int>(idx.size()), n, std::move(v), {a},
                                [an, indices, n](TensorNode<T>& out) {
                                  an->ensure_grad();
                                  for (size_t i = 0; i < indices.size(); ++i)
                                    for (int j = 0; j < n; ++j)
                                      an->grad[static_cast<long>(indices[i]) * n + j] +=
                                          out.grad[static_cast<long>(i) * n + j];
                                });
}

template <typename T>
Tensor<T> stop_gradient(const Tensor<T>& a) {
  return Tensor<T>::constant(a.rows(), a.cols(), a.value());
}

// ---- backward ----

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw std::runtime_error("backward: non-finite loss");
  if (!loss.requires_grad()) return;

  // Reverse creation order over the reachable subgraph is a topological order.
  static std::atomic<std::uint64_t> epoch_counter{1};
  const std::uint64_t epoch = epoch_counter.fetch_add(1, std::memory_order_relaxed);
  std::vector<TensorNode<T>*> reachable;
  std::vector<TensorNode<T>*> stack{loss.node().get()};
  loss.node()->visit_epoch = epoch;
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    reachable.push_back(n);
    for (auto& p : n->parents)
      if (p->requires_grad && p->visit_epoch != epoch) {
        p->visit_epoch = epoch;
        stack.push_back(p.get());
      }
  }
  std::sort(reachable.begin(), reachable.end(),
            [](const TensorNode<T>* a, const TensorNode<T>* b) { return a->id > b->id; });

  loss.node()->ensure_grad();
  loss.node()->grad[0] = T(1);
  for (auto* n : reachable) {
    if (!n->backward_fn || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
}

// ---- composites ----

// Numerically stable row softmax. When `mask` is given, entries where
// mask == 0 are pushed to -1e9 before the softmax (their weight underflows to
// exactly zero), the surviving weights are scaled by the mask values, and each
// row is renormalized over its support. Rows of `mask` that are entirely zero
// are rejected.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits, const Tensor<T>* mask = nullptr) {
  Tensor<T> shifted;
  if (mask) {
    detail::check_same_shape(logits, *mask, "softmax_rows(mask)");
    const int m = logits.rows(), n = logits.cols();
    std::vector<T> sent(static_cast<size_t>(m) * n, T(0));
    for (int i = 0; i < m; ++i) {
      bool any = false;
      for (int j = 0; j < n; ++j) {
        if (mask->value()[static_cast<long>(i) * n + j] == T(0))
          sent[static_cast<long>(i) * n + j] = T(-1e9);
        else
          any = true;
      }
      if (!any) throw std::invalid_argument("softmax_rows: mask row has no support");
    }
    shifted = add(logits, Tensor<T>::constant(m, n, std::move(sent)));
  } else {
    shifted = logits;
  }
  auto z = exp(sub(shifted, broadcast_col(rowmax_detached(shifted), shifted.cols())));
  auto w = mul(z, broadcast_col(reciprocal(rowsum(z)), z.cols()));
  if (mask) {
    auto gated = mul(w, *mask);
    w = mul(gated, broadcast_col(reciprocal(rowsum(gated)), gated.cols()));
  }
  return w;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const int n = x.cols();
  auto mu = mul_scalar(rowsum(x), T(1) / static_cast<T>(n));
  auto xc = sub(x, broadcast_col(mu, n));
  auto var = mul_scalar(rowsum(mul(xc, xc)), T(1) / static_cast<T>(n));
  auto inv = reciprocal(sqrt(add_scalar(var, eps)));
  auto xhat = mul(xc, broadcast_col(inv, n));
  return add(mul(xhat, broadcast_row(gamma, x.rows())), broadcast_row(beta, x.rows()));
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace slottrack::core
