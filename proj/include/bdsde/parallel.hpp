#pragma once

#include <cstddef>
#include <exception>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace bdsde {

/// Hardware thread count as seen by OpenMP (1 when built without it).
inline int hardware_workers() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Effective worker count for a requested value (0 = use all).
inline int resolve_workers(int requested) {
    if (requested <= 0) return hardware_workers();
    return requested;
}

/// Parallel index loop. `workers <= 1` runs the plain serial loop, which is
/// the reference the parallel path is tested against. Bodies must write to
/// disjoint state per index.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const int nw = resolve_workers(workers);
    if (nw <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#if defined(_OPENMP)
    // Exceptions may not escape an OpenMP region; park the first one and
    // rethrow once all threads have joined.
    std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(nw)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(bdsde_parallel_for_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace bdsde
