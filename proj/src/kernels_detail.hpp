#pragma once

#include <cstddef>

// Per-backend kernel tables. Each backend fills one of these; dispatch lives
// in kernels.cpp.
namespace mvlab::kernels::detail {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*nrm2sq)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*mul_ew)(const double*, const double*, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*,
               double*);
  void (*gemv_t)(const double*, std::size_t, std::size_t, const double*,
                 double*);
};

const KernelTable& scalar_table();

#if defined(__x86_64__) || defined(_M_X64)
#define MVLAB_HAVE_AVX2_BUILD 1
const KernelTable& avx2_table();
#endif

#if defined(__aarch64__)
#define MVLAB_HAVE_NEON_BUILD 1
const KernelTable& neon_table();
#endif

}  // namespace mvlab::kernels::detail
