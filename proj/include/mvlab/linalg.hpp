#pragma once

#include <cstddef>
#include <vector>

namespace mvlab {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const {
    return data_.data() + i * cols_;
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Vector col(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);

  Matrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Kernel-backed vector helpers.
double dot(const Vector& x, const Vector& y);
double norm(const Vector& x);
double norm_sq(const Vector& x);
// y += a*x
void axpy(double a, const Vector& x, Vector& y);
void scale(Vector& x, double a);
Vector scaled(const Vector& x, double a);
// Normalizes in place; returns the pre-normalization norm (0 means left as
// is).
double normalize(Vector& x);
Vector operator-(const Vector& x, const Vector& y);
Vector operator+(const Vector& x, const Vector& y);
double max_abs(const Vector& x);

// y = A x  /  y = A^T x
Vector matvec(const Matrix& a, const Vector& x);
Vector matvec_t(const Matrix& a, const Vector& x);

Matrix matmul(const Matrix& a, const Matrix& b);
// A^T A without forming the transpose.
Matrix gram(const Matrix& a);
double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);
// max |A - A^T|
double symmetry_defect(const Matrix& a);
// A - a * u v^T
void rank1_update(Matrix& a, double alpha, const Vector& u, const Vector& v);

// Columns-as-vectors utilities (Krylov ladders, orthonormal bases).
Matrix from_columns(const std::vector<Vector>& cols);
std::vector<Vector> to_columns(const Matrix& a);

// Projection of x onto span(basis) where basis columns are orthonormal.
Vector project_onto(const std::vector<Vector>& basis, const Vector& x);
// x - projection; returns the residual.
Vector orthogonal_residual(const std::vector<Vector>& basis, const Vector& x);

}  // namespace mvlab
