#pragma once

#include <cstddef>
#include <string>

// Dense double-precision inner-loop kernels.
//
// Every kernel exists in a scalar reference form plus SIMD variants (AVX2+FMA
// on x86-64, NEON on aarch64). The active backend is chosen once at startup
// from CPU features; tests pin backends explicitly and check that all
// available variants agree with the scalar reference.
namespace mvlab::kernels {

enum class Backend { scalar, avx2, neon };

// Backend currently routing the kernel calls.
Backend active_backend();
std::string backend_name(Backend b);

// Returns true if `b` can run on this machine.
bool backend_available(Backend b);

// Force a backend (tests). Throws mvlab::Error if unavailable.
void set_backend(Backend b);

// Pick the best available backend (what startup does).
void reset_backend();

// x . y
double dot(const double* x, const double* y, std::size_t n);

// ||x||^2
double nrm2sq(const double* x, std::size_t n);

// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);

// x *= a
void scal(double a, double* x, std::size_t n);

// out = a .* b  (elementwise)
void mul_ew(const double* a, const double* b, double* out, std::size_t n);

// y = A x with A row-major rows x cols.
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y);

// y = A^T x with A row-major rows x cols (y has length cols).
void gemv_t(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y);

}  // namespace mvlab::kernels
