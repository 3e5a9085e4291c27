#pragma once

#include <cstdint>
#include <vector>

#include "mvlab/chebyshev.hpp"
#include "mvlab/linalg.hpp"
#include "mvlab/operators.hpp"
#include "mvlab/qr.hpp"
#include "mvlab/rng.hpp"

namespace mvlab {

// A built Krylov ladder: unit-normalized raw columns plus an orthonormal
// basis (rank-truncated QR). image[m] records where A maps column m inside
// the ladder (A raw[m] = image_scale[m] * raw[image[m]]), which is what lets
// Rayleigh-Ritz run off stored columns without fresh queries.
struct KrylovSubspace {
  std::vector<Vector> raw_columns;
  std::vector<int> image;
  std::vector<double> image_scale;
  QrBasis basis;
  std::size_t block_size = 1;
  std::size_t iterations = 0;
  std::uint64_t queries_used = 0;

  std::size_t dim() const {
    return raw_columns.empty() ? 0 : raw_columns[0].size();
  }
};

// Ladder c_0 = g/|g|, c_{i+1} = A c_i / |A c_i| for i < q: exactly q queries,
// spanning {g, Ag, ..., A^q g}.
KrylovSubspace build_single_ladder(CountingOracle& oracle, int q,
                                   RngStream& rng);

// Block ladder over s Gaussian starts, t = 0..r, in t-major column order:
// exactly r*s queries.
KrylovSubspace block_krylov(CountingOracle& oracle, int r, int s,
                            RngStream& rng);

// sup over unit v in span(subspace) of |<v, u>| = ||Q^T u||_2.
double best_correlation(const KrylovSubspace& subspace, const Vector& u);
// Same, restricted to the span of the first `prefix_cols` raw columns.
double best_correlation_prefix(const KrylovSubspace& subspace,
                               std::size_t prefix_cols, const Vector& u);

// Rayleigh-Ritz for A^2 on nested prefixes of a symmetric ladder. The
// projected operator M = (AQ)^T (AQ) is assembled from stored columns, so
// extraction consumes no queries; prefixes share one assembly because the
// QR basis is nested.
class SymLadderRitz {
 public:
  explicit SymLadderRitz(const KrylovSubspace& subspace);

  // Top Ritz vector of A^2 on span(raw columns 0..m_prefix-1). m_prefix must
  // not exceed rr_prefix_limit().
  Vector top_ritz_vector(std::size_t m_prefix) const;

  // Rayleigh quotient v^T A^2 v attained by that Ritz vector.
  double top_ritz_value(std::size_t m_prefix) const;

  // Largest usable prefix: every column below it has a stored A-image.
  std::size_t rr_prefix_limit() const { return rr_prefix_limit_; }

 private:
  const KrylovSubspace* sub_;
  std::size_t rr_prefix_limit_ = 0;
  std::size_t rr_rank_ = 0;
  std::vector<Vector> aq_;
  Matrix m_full_;
};

struct KrylovIterationResult {
  Vector v;  // unit output direction
  KrylovSubspace subspace;
};

// Single-vector Krylov iteration: q queries, output v = Q y_1 with y_1 the
// top eigenvector of the projected second-moment operator.
KrylovIterationResult krylov_iteration(CountingOracle& oracle, int q,
                                       RngStream& rng);

// Rectangular variant: ladder in the row space of A A^T with the A^T images
// of every ladder column retained as they are produced. 2t+1 queries total,
// including the final A^T projection.
struct RectKrylovResult {
  Vector v;  // unit, length d
  Vector w;  // unit, length n
  KrylovSubspace subspace;         // columns c_i = (A A^T)^i g, normalized
  std::vector<Vector> at_columns;  // h_i = A^T c_i, unnormalized
};

RectKrylovResult rectangular_krylov(CountingOracle& oracle, int t,
                                    RngStream& rng);

// Prefix extraction for a rectangular ladder (shares one ladder across a t
// grid; a standalone run at prefix t would use 2t+1 queries).
class RectLadderRitz {
 public:
  RectLadderRitz(const KrylovSubspace& subspace,
                 const std::vector<Vector>& at_columns);

  struct Extract {
    Vector w;
    Vector v;
  };
  // Uses ladder columns 0..t_prefix (inclusive).
  Extract extract(std::size_t t_prefix) const;

 private:
  const KrylovSubspace* sub_;
  const std::vector<Vector>* at_cols_;
  std::vector<Vector> g_;  // A^T q_c per basis column
};

// ---- Good vectors (deflation polynomials) ----
//
// The existence machinery works on the eigenvalues lambda of A A^T,
// normalized so lambda_1 = 1, and splits spectra into four regimes.

int select_good_vector_case(const Vector& lambda, double p, double eps);

struct GoodVectorPoly {
  int case_id;
  bool vacuous;  // regime 1: any unit vector already meets the bound
  PolyCoeffs phi;
};

GoodVectorPoly good_vector_polynomial(int case_id, const Vector& lambda,
                                      double p, double eps, int t);

struct GoodVectorReport {
  int case_id = 0;
  int trials = 0;
  int successes = 0;
  double success_fraction = 0.0;
};

// Monte Carlo check that w = phi(Lambda) g (normalized) satisfies
// (w^T Lambda w)^{p/2} >= lambda_1^{p/2} - eps * sum_{i>=2} lambda_i^{p/2}.
GoodVectorReport good_vector_exists(const Vector& lambda, double p, double eps,
                                    int t, int trials, RngStream& rng);

}  // namespace mvlab
