#pragma once

// Dense numeric kernels. Every kernel exists twice: a plain serial reference
// under kernels::ref and an OpenMP version under kernels::par that partitions
// work over independent output rows/elements. The parallel versions keep the
// per-element evaluation order of the reference, so both paths produce
// bitwise identical results for any thread count. The dispatchers below pick
// a path by work size and the global switch.

#include <algorithm>
#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slottrack::kernels {

inline bool& parallel_flag() {
  static bool flag = true;
  return flag;
}
inline bool parallel_enabled() { return parallel_flag(); }
inline void set_parallel(bool on) { parallel_flag() = on; }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Work below these sizes is not worth a parallel region.
inline constexpr long kGemmGrain = 1 << 15;
inline constexpr long kMapGrain = 1 << 15;

namespace ref {

// c (m x n) = a (m x k) * b (k x n), optionally accumulating into c
template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<long>(i) * n;
    if (!acc) std::fill(ci, ci + n, T(0));
    const T* ai = a + static_cast<long>(i) * k;
    for (int p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c (m x n) = a (m x k) * b^T, b given as (n x k)
template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * k;
    T* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<long>(j) * k;
      T s = 0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + s : s;
    }
  }
}

// c (k x n) = a^T * b, a given as (m x k), b as (m x n)
template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < k; ++i) {
    T* ci = c + static_cast<long>(i) * n;
    if (!acc) std::fill(ci, ci + n, T(0));
    for (int p = 0; p < m; ++p) {
      const T api = a[static_cast<long>(p) * k + i];
      const T* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <class T, class F>
void map(const T* x, T* y, long n, F f) {
  for (long i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class T, class F>
void zip(const T* a, const T* b, T* c, long n, F f) {
  for (long i = 0; i < n; ++i) c[i] = f(a[i], b[i]);
}

template <class T>
void rowsum(const T* a, T* out, int m, int n) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * n;
    T s = 0;
    for (int j = 0; j < n; ++j) s += ai[j];
    out[i] = s;
  }
}

template <class T>
void rowmax(const T* a, T* out, int m, int n) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<long>(i) * n;
    T s = ai[0];
    for (int j = 1; j < n; ++j) s = std::max(s, ai[j]);
    out[i] = s;
  }
}

template <class T>
void colsum(const T* a, T* out, int m, int n, bool acc) {
  for (int j = 0; j < n; ++j) {
    T s = 0;
    for (int i = 0; i < m; ++i) s += a[static_cast<long>(i) * n + j];
    out[j] = acc ? out[j] + s : s;
  }
}

}  // namespace ref

namespace par {

template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    ref::gemm_nn(a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * n, 1, k, n, acc);
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    ref::gemm_nt(a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * n, 1, k, n, acc);
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    T* ci = c + static_cast<long>(i) * n;
    if (!acc) std::fill(ci, ci + n, T(0));
    for (int p = 0; p < m; ++p) {
      const T api = a[static_cast<long>(p) * k + i];
      const T* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <class T, class F>
void map(const T* x, T* y, long n, F f) {
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class T, class F>
void zip(const T* a, const T* b, T* c, long n, F f) {
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) c[i] = f(a[i], b[i]);
}

template <class T>
void rowsum(const T* a, T* out, int m, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) ref::rowsum(a + static_cast<long>(i) * n, out + i, 1, n);
}

template <class T>
void rowmax(const T* a, T* out, int m, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) ref::rowmax(a + static_cast<long>(i) * n, out + i, 1, n);
}

template <class T>
void colsum(const T* a, T* out, int m, int n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    T s = 0;
    for (int i = 0; i < m; ++i) s += a[static_cast<long>(i) * n + j];
    out[j] = acc ? out[j] + s : s;
  }
}

}  // namespace par

template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && m > 1 && static_cast<long>(m) * k * n >= kGemmGrain)
    par::gemm_nn(a, b, c, m, k, n, acc);
  else
    ref::gemm_nn(a, b, c, m, k, n, acc);
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && m > 1 && static_cast<long>(m) * k * n >= kGemmGrain)
    par::gemm_nt(a, b, c, m, k, n, acc);
  else
    ref::gemm_nt(a, b, c, m, k, n, acc);
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc = false) {
  if (parallel_enabled() && k > 1 && static_cast<long>(m) * k * n >= kGemmGrain)
    par::gemm_tn(a, b, c, m, k, n, acc);
  else
    ref::gemm_tn(a, b, c, m, k, n, acc);
}

template <class T, class F>
void map(const T* x, T* y, long n, F f) {
  if (parallel_enabled() && n >= kMapGrain)
    par::map(x, y, n, f);
  else
    ref::map(x, y, n, f);
}

template <class T, class F>
void zip(const T* a, const T* b, T* c, long n, F f) {
  if (parallel_enabled() && n >= kMapGrain)
    par::zip(a, b, c, n, f);
  else
    ref::zip(a, b, c, n, f);
}

template <class T>
void rowsum(const T* a, T* out, int m, int n) {
  if (parallel_enabled() && m > 1 && static_cast<long>(m) * n >= kMapGrain)
    par::rowsum(a, out, m, n);
  else
    ref::rowsum(a, out, m, n);
}

template <class T>
void rowmax(const T* a, T* out, int m, int n) {
  if (parallel_enabled() && m > 1 && static_cast<long>(m) * n >= kMapGrain)
    par::rowmax(a, out, m, n);
  else
    ref::rowmax(a, out, m, n);
}

template <class T>
void colsum(const T* a, T* out, int m, int n, bool acc = false) {
  if (parallel_enabled() && n > 1 && static_cast<long>(m) * n >= kMapGrain)
    par::colsum(a, out, m, n, acc);
  else
    ref::colsum(a, out, m, n, acc);
}

}  // namespace slottrack::kernels
