#include "slottrack/runtime.hpp"

#include "slottrack/core/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slottrack {

void set_threads(int n) {
  if (n == 1) {
    kernels::set_parallel(false);
    return;
  }
  kernels::set_parallel(true);
#ifdef _OPENMP
  if (n > 1) omp_set_num_threads(n);
#endif
}

int thread_count() {
  if (!kernels::parallel_enabled()) return 1;
  return kernels::max_threads();
}

}  // namespace slottrack
