#pragma once

#include <omp.h>

namespace dff {

/// Caps the worker count used by the per-pixel loops. 0 restores the runtime default.
void set_thread_count(int threads);
int thread_count();

/// Runs body(row) for every row in [0, rows). Each row is written by exactly one
/// worker, so results do not depend on the thread count.
template <typename Body>
void parallel_rows(int rows, Body&& body) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < rows; ++y) {
    body(y);
  }
}

}  // namespace dff
