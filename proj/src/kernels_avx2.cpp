#include "kernels_detail.hpp"

#if defined(MVLAB_HAVE_AVX2_BUILD)

#include <immintrin.h>

#include <cstddef>

// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// is only entered after the dispatcher has checked CPU support.
namespace mvlab::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8),
                           _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12),
                           _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  acc0 = _mm256_add_pd(acc0, acc1);
  acc2 = _mm256_add_pd(acc2, acc3);
  return hsum(_mm256_add_pd(acc0, acc2)) + tail;
}

double nrm2sq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void mul_ew_avx2(const double* a, const double* b, double* out,
                 std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y) {
  // Two rows per pass so x is streamed once per pair.
  std::size_t i = 0;
  for (; i + 2 <= rows; i += 2) {
    const double* r0 = a + i * cols;
    const double* r1 = r0 + cols;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d xv = _mm256_loadu_pd(x + j);
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), xv, acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), xv, acc1);
    }
    double t0 = hsum(acc0), t1 = hsum(acc1);
    for (; j < cols; ++j) {
      t0 += r0[j] * x[j];
      t1 += r1[j] * x[j];
    }
    y[i] = t0;
    y[i + 1] = t1;
  }
  if (i < rows) y[i] = dot_avx2(a + i * cols, x, cols);
}

void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    axpy_avx2(x[i], a + i * cols, y, cols);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table = {dot_avx2,  nrm2sq_avx2, axpy_avx2,
                                    scal_avx2, mul_ew_avx2, gemv_avx2,
                                    gemv_t_avx2};
  return table;
}

}  // namespace mvlab::kernels::detail

#endif  // MVLAB_HAVE_AVX2_BUILD
