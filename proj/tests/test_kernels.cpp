#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "slottrack/core/kernels.hpp"
#include "slottrack/core/rng.hpp"

using namespace slottrack;

namespace {

std::vector<float> random_vec(size_t n, core::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

}  // namespace

TEST_CASE("parallel gemm paths are bitwise identical to the serial reference") {
  core::Rng rng(11);
  for (auto [m, k, n] : {std::tuple{7, 5, 9}, std::tuple{64, 64, 64}, std::tuple{130, 33, 70}}) {
    auto a = random_vec(static_cast<size_t>(m) * k, rng);
    auto b = random_vec(static_cast<size_t>(k) * n, rng);
    auto bt = random_vec(static_cast<size_t>(n) * k, rng);

    std::vector<float> c0(static_cast<size_t>(m) * n), c1 = c0;
    kernels::ref::gemm_nn(a.data(), b.data(), c0.data(), m, k, n, false);
    kernels::par::gemm_nn(a.data(), b.data(), c1.data(), m, k, n, false);
    CHECK(c0 == c1);

    kernels::ref::gemm_nt(a.data(), bt.data(), c0.data(), m, k, n, false);
    kernels::par::gemm_nt(a.data(), bt.data(), c1.data(), m, k, n, false);
    CHECK(c0 == c1);

    std::vector<float> d0(static_cast<size_t>(k) * n), d1 = d0;
    auto g = random_vec(static_cast<size_t>(m) * n, rng);
    kernels::ref::gemm_tn(a.data(), g.data(), d0.data(), m, k, n, false);
    kernels::par::gemm_tn(a.data(), g.data(), d1.data(), m, k, n, false);
    CHECK(d0 == d1);
  }
}

TEST_CASE("accumulating gemm adds onto the destination") {
  core::Rng rng(3);
  const int m = 4, k = 6, n = 5;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<float> base = random_vec(m * n, rng);
  auto c0 = base, c1 = base;
  kernels::ref::gemm_nn(a.data(), b.data(), c0.data(), m, k, n, true);
  std::vector<float> prod(m * n);
  kernels::ref::gemm_nn(a.data(), b.data(), prod.data(), m, k, n, false);
  for (int i = 0; i < m * n; ++i)
    CHECK(c0[i] == doctest::Approx(c1[i] + prod[i]).epsilon(1e-5));
}

TEST_CASE("map/zip/rowsum/rowmax/colsum parallel paths match the reference") {
  core::Rng rng(5);
  const int m = 37, n = 211;
  auto a = random_vec(static_cast<size_t>(m) * n, rng);
  auto b = random_vec(static_cast<size_t>(m) * n, rng);

  std::vector<float> y0(a.size()), y1(a.size());
  auto f = [](float x) { return x * x + 1.0f; };
  kernels::ref::map(a.data(), y0.data(), static_cast<long>(a.size()), f);
  kernels::par::map(a.data(), y1.data(), static_cast<long>(a.size()), f);
  CHECK(y0 == y1);

  auto g = [](float x, float y) { return x * y - x; };
  kernels::ref::zip(a.data(), b.data(), y0.data(), static_cast<long>(a.size()), g);
  kernels::par::zip(a.data(), b.data(), y1.data(), static_cast<long>(a.size()), g);
  CHECK(y0 == y1);

  std::vector<float> r0(m), r1(m);
  kernels::ref::rowsum(a.data(), r0.data(), m, n);
  kernels::par::rowsum(a.data(), r1.data(), m, n);
  CHECK(r0 == r1);

  kernels::ref::rowmax(a.data(), r0.data(), m, n);
  kernels::par::rowmax(a.data(), r1.data(), m, n);
  CHECK(r0 == r1);

  std::vector<float> s0(n), s1(n);
  kernels::ref::colsum(a.data(), s0.data(), m, n, false);
  kernels::par::colsum(a.data(), s1.data(), m, n, false);
  CHECK(s0 == s1);
}

TEST_CASE("dispatcher result does not depend on the parallel switch") {
  core::Rng rng(7);
  const int m = 96, k = 96, n = 96;
  auto a = random_vec(static_cast<size_t>(m) * k, rng);
  auto b = random_vec(static_cast<size_t>(k) * n, rng);
  std::vector<float> c0(static_cast<size_t>(m) * n), c1 = c0;
  kernels::set_parallel(false);
  kernels::gemm_nn(a.data(), b.data(), c0.data(), m, k, n);
  kernels::set_parallel(true);
  kernels::gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
  CHECK(c0 == c1);
}
