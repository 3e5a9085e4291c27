#include "mvlab/linalg.hpp"

#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/kernels.hpp"

namespace mvlab {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

double dot(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("dot: length mismatch");
  return kernels::dot(x.data(), y.data(), x.size());
}

double norm_sq(const Vector& x) { return kernels::nrm2sq(x.data(), x.size()); }

double norm(const Vector& x) { return std::sqrt(norm_sq(x)); }

void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: length mismatch");
  kernels::axpy(a, x.data(), y.data(), x.size());
}

void scale(Vector& x, double a) { kernels::scal(a, x.data(), x.size()); }

Vector scaled(const Vector& x, double a) {
  Vector y = x;
  scale(y, a);
  return y;
}

double normalize(Vector& x) {
  const double nrm = norm(x);
  if (nrm > 0.0) scale(x, 1.0 / nrm);
  return nrm;
}

Vector operator-(const Vector& x, const Vector& y) {
  Vector z = x;
  axpy(-1.0, y, z);
  return z;
}

Vector operator+(const Vector& x, const Vector& y) {
  Vector z = x;
  axpy(1.0, y, z);
  return z;
}

double max_abs(const Vector& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (x.size() != a.cols()) throw DimensionMismatch("matvec: length mismatch");
  Vector y(a.rows());
  kernels::gemv(a.data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (x.size() != a.rows()) {
    throw DimensionMismatch("matvec_t: length mismatch");
  }
  Vector y(a.cols());
  kernels::gemv_t(a.data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner mismatch");
  Matrix c(a.rows(), b.cols(), 0.0);
  // i-k-j loop keeps the inner update on contiguous rows of b and c.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      kernels::axpy(a(i, k), b.row_ptr(k), c.row_ptr(i), b.cols());
    }
  }
  return c;
}

Matrix gram(const Matrix& a) {
  Matrix g(a.cols(), a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      kernels::axpy(row[k], row, g.row_ptr(k), a.cols());
    }
  }
  return g;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) {
    m = std::max(m, std::fabs(p[i]));
  }
  return m;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(kernels::nrm2sq(a.data(), a.rows() * a.cols()));
}

double symmetry_defect(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      m = std::max(m, std::fabs(a(i, j) - a(j, i)));
    }
  }
  return m;
}

void rank1_update(Matrix& a, double alpha, const Vector& u, const Vector& v) {
  if (u.size() != a.rows() || v.size() != a.cols()) {
    throw DimensionMismatch("rank1_update: shape mismatch");
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    kernels::axpy(alpha * u[i], v.data(), a.row_ptr(i), a.cols());
  }
}

Matrix from_columns(const std::vector<Vector>& cols) {
  if (cols.empty()) return Matrix();
  Matrix m(cols[0].size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) m.set_col(j, cols[j]);
  return m;
}

std::vector<Vector> to_columns(const Matrix& a) {
  std::vector<Vector> cols(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) cols[j] = a.col(j);
  return cols;
}

Vector project_onto(const std::vector<Vector>& basis, const Vector& x) {
  Vector p(x.size(), 0.0);
  for (const Vector& b : basis) axpy(dot(b, x), b, p);
  return p;
}

Vector orthogonal_residual(const std::vector<Vector>& basis, const Vector& x) {
  Vector r = x;
  for (const Vector& b : basis) axpy(-dot(b, x), b, r);
  return r;
}

}  // namespace mvlab
