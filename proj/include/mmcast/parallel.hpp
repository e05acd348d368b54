#pragma once

// Loop helper shared by the OpenMP kernels.

#include <cstddef>
#include <exception>

namespace mmcast {

/// Runs body(i) for i in [0, n), under OpenMP when `parallel` is set. The
/// first exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(std::ptrdiff_t n, bool parallel, Body&& body) {
  std::exception_ptr error;
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(mmcast_parallel_error)
        if (!error) error = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mmcast
