#pragma once

#include <cstddef>
#include <vector>

#include "mvlab/linalg.hpp"

namespace mvlab {

// Householder QR over a list of columns, with rank truncation: a column whose
// residual (after the reflections accumulated so far) falls below
// rel_tol * max(original column norms) is dropped from the basis. Classical
// Gram-Schmidt is not an option here; the Krylov ladders this feeds are
// Chebyshev-ill-conditioned and need the reflector form to stay orthonormal.
struct QrBasis {
  std::vector<Vector> q;          // orthonormal columns, one per kept input
  std::vector<std::size_t> kept;  // original indices of kept columns, ascending
  Matrix r_upper;                 // rank x rank upper triangular (kept block)
  std::size_t input_cols = 0;

  std::size_t rank() const { return q.size(); }

  // Number of basis columns spanning the first `prefix_len` input columns.
  // Valid because the basis is built left to right: q[0..prefix_rank-1] spans
  // input columns [0, prefix_len).
  std::size_t prefix_rank(std::size_t prefix_len) const;

  // Columns of R^{-1} restricted to the leading `r` kept columns: input
  // column kept[j] = sum_i q[i] * R(i,j), so q[:, :r] = C_kept * inv(R_r).
  Matrix inverse_r(std::size_t r) const;
};

QrBasis householder_qr(const std::vector<Vector>& cols,
                       double rel_tol = 1e-10);

}  // namespace mvlab
