#include "mvlab/dense.hpp"

#include <lapacke.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>

#include "mvlab/errors.hpp"
#include "mvlab/rng.hpp"

// Present when linking OpenBLAS; weak so the reference libraries also link.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));
extern "C" void dgemm_(const char*, const char*, const int*, const int*,
                       const int*, const double*, const double*, const int*,
                       const double*, const int*, const double*, double*,
                       const int*);

// All LAPACK calls below go through column-major buffers with explicit
// transposition at the boundary. LAPACKE's row-major translation layer is a
// liability for the factorization drivers (blocked dorgqr in particular), so
// it is not used.
namespace mvlab::dense {
namespace {

void check_info(int info, const char* what) {
  if (info != 0) {
    throw Error(std::string(what) + " failed, info=" + std::to_string(info));
  }
}

std::once_flag g_blas_once;

// Row-major Matrix -> column-major buffer.
std::vector<double> to_col_major(const Matrix& a) {
  std::vector<double> buf(a.rows() * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      buf[j * a.rows() + i] = a(i, j);
    }
  }
  return buf;
}

Matrix from_col_major(const std::vector<double>& buf, std::size_t rows,
                      std::size_t cols) {
  Matrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      a(i, j) = buf[j * rows + i];
    }
  }
  return a;
}

}  // namespace

void use_single_threaded_blas() {
  std::call_once(g_blas_once, [] {
    if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
  });
}

bool blas_self_check() {
  use_single_threaded_blas();
  const int n = 256;
  RngStream rng(0xB1A5C0DEull);
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  std::vector<double> b(static_cast<std::size_t>(n) * n);
  std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
  for (double& x : a) x = rng.gaussian();
  for (double& x : b) x = rng.gaussian();
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero,
         c.data(), &n);
  // Spot-check against plain accumulation.
  double worst = 0.0;
  for (int j = 0; j < n; j += 17) {
    for (int i = 0; i < n; i += 13) {
      double ref = 0.0;
      for (int k = 0; k < n; ++k) {
        ref += a[static_cast<std::size_t>(k) * n + i] *
               b[static_cast<std::size_t>(j) * n + k];
      }
      worst = std::max(worst,
                       std::fabs(ref - c[static_cast<std::size_t>(j) * n + i]));
    }
  }
  return worst <= 1e-8;
}

void ensure_reliable_blas(char** argv) {
  if (blas_self_check()) return;
  if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
#if defined(__x86_64__)
    const char* core =
        (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
            ? "Haswell"
            : "Nehalem";
#else
    const char* core = "generic";
#endif
    setenv("OPENBLAS_CORETYPE", core, 1);
    execv("/proc/self/exe", argv);
    // execv only returns on failure; fall through to the error below.
  }
  throw Error(
      "BLAS self-check failed: dgemm does not reproduce a reference product "
      "even with OPENBLAS_CORETYPE pinned");
}

Vector singular_values(const Matrix& a) {
  use_single_threaded_blas();
  // Row-major (n x d) read as column-major is A^T; singular values agree.
  const lapack_int m = static_cast<lapack_int>(a.cols());
  const lapack_int n = static_cast<lapack_int>(a.rows());
  const lapack_int k = std::min(m, n);
  std::vector<double> work(a.data(), a.data() + a.rows() * a.cols());
  Vector s(static_cast<std::size_t>(k));
  const int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(),
                     nullptr, 1, nullptr, 1);
  check_info(info, "dgesdd(N)");
  return s;
}

Svd svd(const Matrix& a) {
  use_single_threaded_blas();
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  std::vector<double> work = to_col_major(a);
  std::vector<double> u(static_cast<std::size_t>(m) * k);
  std::vector<double> vt(static_cast<std::size_t>(k) * n);
  Svd out;
  out.sigma = Vector(static_cast<std::size_t>(k));
  const int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m,
                     out.sigma.data(), u.data(), m, vt.data(), k);
  check_info(info, "dgesdd(S)");
  out.u = from_col_major(u, a.rows(), static_cast<std::size_t>(k));
  out.vt = from_col_major(vt, static_cast<std::size_t>(k), a.cols());
  return out;
}

SymEig sym_eig(const Matrix& a) {
  use_single_threaded_blas();
  if (a.rows() != a.cols()) throw DimensionMismatch("sym_eig: not square");
  const std::size_t n = a.rows();
  const lapack_int ln = static_cast<lapack_int>(n);
  // Symmetric input: row-major buffer doubles as column-major.
  std::vector<double> vecs(a.data(), a.data() + n * n);
  Vector vals(n);
  const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', ln, vecs.data(),
                                  ln, vals.data());
  check_info(info, "dsyevd");
  // Ascending -> nonincreasing, and column-major eigenvector columns into
  // row-major columns.
  SymEig out;
  out.values = Vector(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = n - 1 - j;
    out.values[j] = vals[src];
    for (std::size_t i = 0; i < n; ++i) {
      out.vectors(i, j) = vecs[src * n + i];
    }
  }
  return out;
}

Matrix qr_orthonormal_sign_fixed(const Matrix& a) {
  use_single_threaded_blas();
  if (a.rows() < a.cols()) {
    throw DimensionMismatch("qr_orthonormal_sign_fixed: rows < cols");
  }
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  std::vector<double> work = to_col_major(a);
  Vector tau(a.cols());
  int info =
      LAPACKE_dgeqrf(LAPACK_COL_MAJOR, m, n, work.data(), m, tau.data());
  check_info(info, "dgeqrf");
  Vector signs(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    signs[j] = work[j * a.rows() + j] < 0.0 ? -1.0 : 1.0;
  }
  info = LAPACKE_dorgqr(LAPACK_COL_MAJOR, m, n, n, work.data(), m, tau.data());
  check_info(info, "dorgqr");
  Matrix q(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double s = signs[j];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      q(i, j) = s * work[j * a.rows() + i];
    }
  }
  return q;
}

}  // namespace mvlab::dense
