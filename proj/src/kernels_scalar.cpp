#include <cstddef>

#include "kernels_detail.hpp"

// Reference kernels. Plain loops, no pragmas; these define the semantics the
// SIMD variants are tested against.
namespace mvlab::kernels::detail {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += x[i] * y[i];
    acc1 += x[i + 1] * y[i + 1];
    acc2 += x[i + 2] * y[i + 2];
    acc3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) acc0 += x[i] * y[i];
  return (acc0 + acc1) + (acc2 + acc3);
}

double nrm2sq_scalar(const double* x, std::size_t n) {
  return dot_scalar(x, x, n);
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void mul_ew_scalar(const double* a, const double* b, double* out,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_scalar(a + i * cols, x, cols);
  }
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    axpy_scalar(x[i], a + i * cols, y, cols);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {dot_scalar,    nrm2sq_scalar, axpy_scalar,
                                    scal_scalar,   mul_ew_scalar, gemv_scalar,
                                    gemv_t_scalar};
  return table;
}

}  // namespace mvlab::kernels::detail
