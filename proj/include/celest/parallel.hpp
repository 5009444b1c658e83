#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace celest::par {

// Execution mode for the data-parallel kernels. Every parallel kernel has a
// serial reference path; both must produce bit-identical results because each
// loop iteration is pure and writes only its own output slot. The OpenMP path
// is the default when compiled with OpenMP support.
enum class Mode { serial, openmp };

inline Mode& mode() {
#ifdef _OPENMP
  static Mode m = Mode::openmp;
#else
  static Mode m = Mode::serial;
#endif
  return m;
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Parallel map over [0, n). Body must not touch shared mutable state other
// than its own index's output.
template <class F>
void for_range(std::size_t n, F&& body) {
#ifdef _OPENMP
  if (mode() == Mode::openmp) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace celest::par
