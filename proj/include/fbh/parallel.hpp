#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fbh::par {

/// Worker cap for replica sweeps. 0 means "use the OpenMP default".
inline int& job_limit() {
  static int jobs = 0;
  return jobs;
}

inline void set_jobs(int n) { job_limit() = n; }

inline int effective_jobs() {
#ifdef _OPENMP
  const int j = job_limit();
  return j > 0 ? j : omp_get_max_threads();
#else
  return 1;
#endif
}

/// Parallel loop over [0, n). Each index writes only its own outputs, so results
/// are identical for any thread count; jobs==1 gives the serial reference path.
template <typename Fn>
void for_index(std::size_t n, Fn&& fn, int jobs = -1) {
#ifdef _OPENMP
  const int nj = jobs < 0 ? effective_jobs() : (jobs > 0 ? jobs : 1);
  if (nj > 1) {
#pragma omp parallel for schedule(static) num_threads(nj)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)jobs;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace fbh::par
