#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/rng.hpp"

namespace mvlab {

// One distinct eigenvalue and its algebraic multiplicity.
struct SpectrumEntry {
  double value;
  std::size_t multiplicity;
};

// Diagonal spectrum as (value, multiplicity) pairs, values nonincreasing.
class SpectrumSpec {
 public:
  explicit SpectrumSpec(std::vector<SpectrumEntry> entries);

  const std::vector<SpectrumEntry>& entries() const { return entries_; }
  std::size_t dimension() const { return dimension_; }

  // Length-n diagonal in entry order.
  Vector expand() const;

  // Second largest singular value sigma_2 = optimal rank-1 spectral error.
  double second_singular_value() const;

  // File format: one `value,multiplicity` line per distinct eigenvalue.
  static SpectrumSpec load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<SpectrumEntry> entries_;
  std::size_t dimension_ = 0;
};

// Symmetric n x n operator, dense or factored as U diag(d) U^T.
class SymmetricOperator {
 public:
  static SymmetricOperator dense(Matrix a);
  static SymmetricOperator factored(Matrix u, Vector diag);

  std::size_t dim() const { return dim_; }
  bool factored_form() const { return factored_; }

  Vector apply(const Vector& x) const;

  // Materializes U diag U^T (tests and small-scale evaluation only).
  Matrix to_dense() const;

  const Matrix& basis() const;     // factored form only
  const Vector& diagonal() const;  // factored form only

 private:
  SymmetricOperator() = default;
  bool factored_ = false;
  std::size_t dim_ = 0;
  Matrix dense_;
  Matrix u_;
  Vector diag_;
};

// Rectangular n x d operator with A and A^T application.
class RectOperator {
 public:
  explicit RectOperator(Matrix a);

  std::size_t rows() const { return a_.rows(); }
  std::size_t cols() const { return a_.cols(); }
  const Matrix& matrix() const { return a_; }

  Vector apply(const Vector& x) const;    // A x
  Vector apply_t(const Vector& x) const;  // A^T x

 private:
  Matrix a_;
};

// Query-counting wrapper. Every application of A or A^T charges one query;
// an optional budget turns over-spending into an error. One oracle per
// trial; the counter is not shared across threads.
class CountingOracle {
 public:
  explicit CountingOracle(const SymmetricOperator& op,
                          std::optional<std::uint64_t> budget = std::nullopt);
  explicit CountingOracle(const RectOperator& op,
                          std::optional<std::uint64_t> budget = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool symmetric() const { return sym_ != nullptr; }

  Vector apply(const Vector& x);    // A x
  Vector apply_t(const Vector& x);  // A^T x (same as apply when symmetric)

  std::uint64_t count() const { return count_; }
  std::optional<std::uint64_t> budget() const { return budget_; }

 private:
  void charge();
  const SymmetricOperator* sym_ = nullptr;
  const RectOperator* rect_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::uint64_t count_ = 0;
  std::optional<std::uint64_t> budget_;
};

// Haar-distributed orthogonal matrix: QR of an i.i.d. Gaussian square matrix
// with the sign of diag(R) folded in (removes the QR sign ambiguity, making
// the factorization map measure-preserving).
Matrix haar_orthogonal(std::size_t n, RngStream& rng);

// Spectrum with top eigenvalue 1+2eps (multiplicity 1) and the q+1 extrema
// of T_q, each with multiplicity k = (n-1)/(q+1).
SpectrumSpec hard_spectrum(std::size_t n, double eps, int q);

// Smallest n' >= n with (n'-1) divisible by (q+1).
std::size_t nearest_valid_n(std::size_t n, int q);

// A hard-instance draw. Solvers see only a CountingOracle over `op`; the
// planted top eigenvector is reserved for the evaluation harness.
struct HardInstance {
  SymmetricOperator op;
  SpectrumSpec spec;
  Vector planted_u1;
  double top_eigenvalue;
  double optimal_spectral_error;
};

HardInstance build_hard_instance(const SpectrumSpec& spec, RngStream& rng);

}  // namespace mvlab
