// Times the serial reference kernels against the OpenMP versions on the
// matrix shapes this project actually runs (attention projections, decoder
// grids, pairwise cost matrices), plus a square gemm for scaling context.

#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "slottrack/core/kernels.hpp"
#include "slottrack/core/rng.hpp"

using namespace slottrack;

namespace {

std::vector<float> random_vec(size_t n, core::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

template <class F>
double time_ms(F f, int reps) {
  f();  // warm up
  const double t0 = omp_get_wtime();
  for (int i = 0; i < reps; ++i) f();
  return (omp_get_wtime() - t0) * 1000.0 / reps;
}

void row(const char* name, double ref_ms, double par_ms) {
  std::printf("%-34s %10.4f %10.4f %8.2fx\n", name, ref_ms, par_ms,
              par_ms > 0 ? ref_ms / par_ms : 0.0);
}

}  // namespace

int main() {
  core::Rng rng(7);
  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-34s %10s %10s %9s\n", "kernel", "ref ms", "omp ms", "speedup");

  struct GemmCase {
    const char* name;
    int m, k, n;
    int reps;
  };
  const GemmCase cases[] = {
      {"gemm_nn 72x64 * 64x64 (rollout)", 72, 64, 64, 400},
      {"gemm_nn 72x64 * 64x256 (ff)", 72, 64, 256, 200},
      {"gemm_nn 12x1024 * 1024x12 (cost)", 12, 1024, 12, 400},
      {"gemm_nn 256x256 * 256x256", 256, 256, 256, 20},
      {"gemm_nn 512x512 * 512x512", 512, 512, 512, 4},
  };
  for (const auto& c : cases) {
    auto a = random_vec(static_cast<size_t>(c.m) * c.k, rng);
    auto b = random_vec(static_cast<size_t>(c.k) * c.n, rng);
    std::vector<float> out(static_cast<size_t>(c.m) * c.n);
    const double r = time_ms(
        [&] { kernels::ref::gemm_nn(a.data(), b.data(), out.data(), c.m, c.k, c.n, false); },
        c.reps);
    const double p = time_ms(
        [&] { kernels::par::gemm_nn(a.data(), b.data(), out.data(), c.m, c.k, c.n, false); },
        c.reps);
    row(c.name, r, p);
  }

  {
    const long n = 40L * 1024;  // decoder-scale elementwise block
    auto a = random_vec(n, rng);
    std::vector<float> out(n);
    auto f = [](float x) { return std::exp(-0.5f * x * x); };
    const double r = time_ms([&] { kernels::ref::map(a.data(), out.data(), n, f); }, 400);
    const double p = time_ms([&] { kernels::par::map(a.data(), out.data(), n, f); }, 400);
    row("map exp (40k, decoder grid)", r, p);
  }

  {
    const int m = 512, n = 1024;
    auto a = random_vec(static_cast<size_t>(m) * n, rng);
    std::vector<float> out(m);
    const double r = time_ms([&] { kernels::ref::rowsum(a.data(), out.data(), m, n); }, 400);
    const double p = time_ms([&] { kernels::par::rowsum(a.data(), out.data(), m, n); }, 400);
    row("rowsum 512x1024", r, p);
  }

  return 0;
}
