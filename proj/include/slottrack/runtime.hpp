#pragma once

namespace slottrack {

// n = 0 keeps the OpenMP default; n = 1 forces the serial kernel path.
void set_threads(int n);
int thread_count();

}  // namespace slottrack
