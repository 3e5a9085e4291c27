#pragma once

#include "mvlab/linalg.hpp"

// Dense factorizations (LAPACK-backed). These sit on the evaluation side of
// the artifact: nothing here is charged against a query budget.
namespace mvlab::dense {

struct Svd {
  Matrix u;        // n x k
  Vector sigma;    // k, nonincreasing
  Matrix vt;       // k x d
};

struct SymEig {
  Vector values;   // eigenvalues, nonincreasing
  Matrix vectors;  // columns are eigenvectors, matching `values` order
};

// Singular values only, nonincreasing.
Vector singular_values(const Matrix& a);

// Thin SVD, k = min(rows, cols).
Svd svd(const Matrix& a);

// Full symmetric eigendecomposition (input must be symmetric).
SymEig sym_eig(const Matrix& a);

// Orthonormal Q from the QR factorization of `a` (rows >= cols), with the
// sign of diag(R) folded into Q's columns so the factorization is unique.
// This is the sampler primitive behind Haar draws.
Matrix qr_orthonormal_sign_fixed(const Matrix& a);

// Pins the BLAS backend to one thread. Trials parallelize above BLAS, and a
// fixed thread count keeps reruns bit-identical.
void use_single_threaded_blas();

// Runs a matrix-multiply self-check against an independent reference. Some
// OpenBLAS builds ship SIMD kernels that are miscompiled or misdispatched on
// virtualized CPUs (observed: wrong dgemm above ~192x192 with the AVX-512
// path); if the check fails and OPENBLAS_CORETYPE is not pinned yet, this
// re-executes the process with a conservative kernel set. Call it first
// thing in main().
void ensure_reliable_blas(char** argv);

// True if dgemm reproduces a reference product at n = 256.
bool blas_self_check();

}  // namespace mvlab::dense
