#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace specrank {

/// Worker count for an OpenMP region: `requested` when positive, otherwise
/// the OpenMP default (1 without OpenMP).
inline int resolve_threads(int requested) noexcept {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace specrank
