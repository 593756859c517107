#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geo {

// Execution backend for the numeric kernels. Every kernel is written so that
// each output element is produced by exactly one serial chain of operations;
// switching backends therefore changes scheduling only, never results, and
// the test suite asserts serial/parallel bit-equality on every kernel.
enum class Backend { Serial, Parallel };

inline Backend& exec_backend() {
    static Backend b = Backend::Parallel;
    return b;
}

struct ScopedBackend {
    Backend saved;
    explicit ScopedBackend(Backend b) : saved(exec_backend()) { exec_backend() = b; }
    ~ScopedBackend() { exec_backend() = saved; }
};

template <class F>
inline void parallel_for(std::int64_t n, F&& fn) {
    if (exec_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) fn(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
    }
}

}  // namespace geo
