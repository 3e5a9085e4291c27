#pragma once

#include <optional>

#include "mvlab/linalg.hpp"
#include "mvlab/operators.hpp"

namespace mvlab {

// Nonincreasing, nonnegative singular values.
class SingularSpectrum {
 public:
  explicit SingularSpectrum(Vector values);
  const Vector& values() const { return values_; }

 private:
  Vector values_;
};

// Rank-1 LRA outcome, as the experiments report it.
struct LraReport {
  Vector v;                              // unit output direction
  double achieved_error = 0.0;
  double optimal_error = 0.0;
  double relative_error = 0.0;           // achieved / optimal
  std::optional<double> correlation_sq;  // <v,u1>^2 when u1 is planted
  std::uint64_t queries = 0;
  double p = 2.0;  // Schatten exponent; infinity() means spectral
};

// (sum sigma_i^p)^(1/p); p = infinity means sigma_1. All of these run a full
// dense SVD: they are evaluation-side functions where correctness beats
// speed.
double schatten_norm(const Vector& singular_values, double p);
double schatten_norm(const Matrix& a, double p);
double schatten_norm(const SymmetricOperator& a, double p);

// (sum_{i>=2} sigma_i^p)^(1/p); sigma_2 for p = infinity.
double optimal_rank1_error(const Matrix& a, double p);
double optimal_rank1_error(const Vector& singular_values, double p);

// || A (I - v v^T) ||_{S_p} on the explicit dense residual.
double lra_error(const Matrix& a, const Vector& v, double p);

struct PythagoreanCheck {
  double projected_sq;  // ||A w w^T||_F^2
  double residual_sq;   // ||A (I - w w^T)||_F^2
  double total_sq;      // ||A||_F^2
  double residual;      // | projected + residual - total |
};
PythagoreanCheck pythagorean_check(const Matrix& a, const Vector& w);

struct SchattenPythagorean {
  bool holds;
  double slack;  // lhs - rhs
  double lhs;    // ||A||_p^p
  double rhs;    // ||w w^T A||_p^p + ||A (I - v v^T)||_p^p
};
SchattenPythagorean schatten_pythagorean_check(const Matrix& a,
                                               const Vector& w, double p);

// Correlation upgrade: a unit w whose ||A^T w|| is close to sigma_1 yields a
// (1+eps)-optimal direction v = A^T w / ||A^T w||. Throws HypothesisViolated
// when the closeness precondition fails.
LraReport correlated_vector_to_lra(const Matrix& a, const Vector& w, double p,
                                   double eps);

// For a matrix with top eigenvalue 1+2eps (multiplicity 1) and all remaining
// eigenvalues in [-1, 1]: returns true iff w is certifiably uncorrelated
// (<u1,w>^2 and <u1,Aw>^2 both <= eps/2), in which case w cannot be a
// (1+eps)-approximate spectral LRA direction.
bool spectral_gap_witness(const Matrix& a, const Vector& w);

}  // namespace mvlab
