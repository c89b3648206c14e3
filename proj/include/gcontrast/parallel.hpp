#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gcontrast {

// Batch-level data parallelism. Every parallel_for body writes only to
// storage owned by its own index, so results are bit-identical to the serial
// loop regardless of thread count. Cross-sample reductions are done serially
// in index order by the caller.

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : 1);
#else
    (void)n;
#endif
}

template <typename Fn>
inline void parallel_for(std::int64_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
#else
    for (std::int64_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace gcontrast
