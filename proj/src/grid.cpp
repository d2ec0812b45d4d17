#include "cilab/grid.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cilab {

FourierGrid::FourierGrid(int n, double dealias_fraction) : n_(n), dealias_(dealias_fraction) {
  if (n < 4 || n % 2 != 0) throw ParameterError("grid: n_per_axis must be even and >= 4, got " + std::to_string(n));
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
    throw ParameterError("grid: dealias_fraction must lie in (0,1]");
  // The Nyquist plane is never retained: it cannot carry a conjugate pair.
  kmax_ = std::min(int(std::floor(dealias_fraction * n / 2.0 + 1e-12)), n / 2 - 1);
}

int thread_cap() {
  const char* env = std::getenv("CI_LAB_THREADS");
  if (!env) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 0;
}

void apply_thread_cap() {
#ifdef _OPENMP
  if (const int cap = thread_cap(); cap > 0) omp_set_num_threads(cap);
#endif
}

}  // namespace cilab
