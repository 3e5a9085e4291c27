#include "kernels_detail.hpp"

#if defined(MVLAB_HAVE_NEON_BUILD)

#include <arm_neon.h>

#include <cstddef>

// NEON variants. NEON is baseline on aarch64, so no runtime feature probe is
// needed beyond the architecture check.
namespace mvlab::kernels::detail {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    acc2 = vfmaq_f64(acc2, vld1q_f64(x + i + 4), vld1q_f64(y + i + 4));
    acc3 = vfmaq_f64(acc3, vld1q_f64(x + i + 6), vld1q_f64(y + i + 6));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  acc0 = vaddq_f64(acc0, acc1);
  acc2 = vaddq_f64(acc2, acc3);
  acc0 = vaddq_f64(acc0, acc2);
  return vaddvq_f64(acc0) + tail;
}

double nrm2sq_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t y0 = vld1q_f64(y + i);
    float64x2_t y1 = vld1q_f64(y + i + 2);
    y0 = vfmaq_f64(y0, va, vld1q_f64(x + i));
    y1 = vfmaq_f64(y1, va, vld1q_f64(x + i + 2));
    vst1q_f64(y + i, y0);
    vst1q_f64(y + i + 2, y1);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_neon(double a, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void mul_ew_neon(const double* a, const double* b, double* out,
                 std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_neon(a + i * cols, x, cols);
  }
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    axpy_neon(x[i], a + i * cols, y, cols);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table = {dot_neon,  nrm2sq_neon, axpy_neon,
                                    scal_neon, mul_ew_neon, gemv_neon,
                                    gemv_t_neon};
  return table;
}

}  // namespace mvlab::kernels::detail

#endif  // MVLAB_HAVE_NEON_BUILD
