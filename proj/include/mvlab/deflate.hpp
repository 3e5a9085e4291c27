#pragma once

#include "mvlab/linalg.hpp"

namespace mvlab {

// Eigenvalues of diag(a) - u u^T, nonincreasing. Exact (secular equation per
// interlacing interval, bisection to machine precision); O(m^2) in the number
// of distinct diagonal values, independent of how large the multiplicities
// are. This is the workhorse behind residual-spectrum evaluation for
// operators with a known eigen/singular decomposition: it turns what would be
// a dense SVD per trial into an O(n) computation.
Vector deflated_eigenvalues(const Vector& a, const Vector& u);

// Largest eigenvalue only.
double deflated_top_eigenvalue(const Vector& a, const Vector& u);

// Singular values of diag(sigma) (I - w w^T) for unit w: the residual
// spectrum of a rank-1 deflation of an operator with singular values sigma.
// Follows from (diag(s)(I-ww^T))(...)^T = diag(s^2) - (s.*w)(s.*w)^T.
Vector deflated_singular_values(const Vector& sigma, const Vector& w);

}  // namespace mvlab
