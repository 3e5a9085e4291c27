#include "mvlab/kernels.hpp"

#include <atomic>

#include "kernels_detail.hpp"
#include "mvlab/errors.hpp"

namespace mvlab::kernels {
namespace {

using detail::KernelTable;

Backend detect_best() {
#if defined(MVLAB_HAVE_AVX2_BUILD)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return Backend::avx2;
  }
#endif
#if defined(MVLAB_HAVE_NEON_BUILD)
  return Backend::neon;
#endif
  return Backend::scalar;
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::scalar_table();
#if defined(MVLAB_HAVE_AVX2_BUILD)
    case Backend::avx2:
      return &detail::avx2_table();
#endif
#if defined(MVLAB_HAVE_NEON_BUILD)
    case Backend::neon:
      return &detail::neon_table();
#endif
    default:
      return nullptr;
  }
}

struct Dispatch {
  Backend backend;
  const KernelTable* table;
  Dispatch() : backend(detect_best()), table(table_for(backend)) {}
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
#if defined(MVLAB_HAVE_AVX2_BUILD)
  if (b == Backend::avx2) {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }
#endif
#if defined(MVLAB_HAVE_NEON_BUILD)
  if (b == Backend::neon) return true;
#endif
  return false;
}

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw Error("kernel backend not available on this machine: " +
                backend_name(b));
  }
  dispatch().backend = b;
  dispatch().table = table_for(b);
}

void reset_backend() { set_backend(detect_best()); }

double dot(const double* x, const double* y, std::size_t n) {
  return dispatch().table->dot(x, y, n);
}

double nrm2sq(const double* x, std::size_t n) {
  return dispatch().table->nrm2sq(x, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(a, x, y, n);
}

void scal(double a, double* x, std::size_t n) {
  dispatch().table->scal(a, x, n);
}

void mul_ew(const double* a, const double* b, double* out, std::size_t n) {
  dispatch().table->mul_ew(a, b, out, n);
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  dispatch().table->gemv(a, rows, cols, x, y);
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y) {
  dispatch().table->gemv_t(a, rows, cols, x, y);
}

}  // namespace mvlab::kernels
