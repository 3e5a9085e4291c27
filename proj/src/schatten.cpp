#include "mvlab/schatten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"

namespace mvlab {
namespace {

constexpr double kUnitTol = 1e-6;

void require_unit(const Vector& v, const char* what) {
  if (std::fabs(norm(v) - 1.0) > kUnitTol) {
    throw NotUnit(std::string(what) + ": vector is not unit norm");
  }
}

// A - (A v) v^T, the rank-1 residual, formed explicitly.
Matrix residual_matrix(const Matrix& a, const Vector& v) {
  Matrix r = a;
  Vector av = matvec(a, v);
  rank1_update(r, -1.0, av, v);
  return r;
}

}  // namespace

SingularSpectrum::SingularSpectrum(Vector values) : values_(std::move(values)) {
  double prev = std::numeric_limits<double>::infinity();
  for (double v : values_) {
    if (v < 0.0) throw Error("SingularSpectrum: negative value");
    if (v > prev) throw Error("SingularSpectrum: not nonincreasing");
    prev = v;
  }
}

double schatten_norm(const Vector& singular_values, double p) {
  if (p < 1.0) throw Error("schatten_norm: p must be >= 1");
  if (singular_values.empty()) return 0.0;
  if (std::isinf(p)) {
    return *std::max_element(singular_values.begin(), singular_values.end());
  }
  double acc = 0.0;
  for (double s : singular_values) acc += std::pow(s, p);
  return std::pow(acc, 1.0 / p);
}

double schatten_norm(const Matrix& a, double p) {
  return schatten_norm(dense::singular_values(a), p);
}

double schatten_norm(const SymmetricOperator& a, double p) {
  if (a.factored_form()) {
    Vector s = a.diagonal();
    for (double& v : s) v = std::fabs(v);
    std::sort(s.begin(), s.end(), std::greater<double>());
    return schatten_norm(s, p);
  }
  return schatten_norm(a.to_dense(), p);
}

double optimal_rank1_error(const Vector& singular_values, double p) {
  if (singular_values.size() < 2) {
    throw DimensionMismatch("optimal_rank1_error: need min(n,d) >= 2");
  }
  Vector tail(singular_values.begin() + 1, singular_values.end());
  return schatten_norm(tail, p);
}

double optimal_rank1_error(const Matrix& a, double p) {
  return optimal_rank1_error(dense::singular_values(a), p);
}

double lra_error(const Matrix& a, const Vector& v, double p) {
  if (v.size() != a.cols()) throw DimensionMismatch("lra_error: bad v length");
  require_unit(v, "lra_error");
  return schatten_norm(residual_matrix(a, v), p);
}

PythagoreanCheck pythagorean_check(const Matrix& a, const Vector& w) {
  if (w.size() != a.cols()) {
    throw DimensionMismatch("pythagorean_check: bad w length");
  }
  Vector wn = w;
  normalize(wn);
  Vector aw = matvec(a, wn);
  const double projected_sq = norm_sq(aw);  // ||A w w^T||_F^2 = ||A w||^2
  Matrix res = residual_matrix(a, wn);
  const double residual_sq = frobenius_norm(res) * frobenius_norm(res);
  const double total_sq = frobenius_norm(a) * frobenius_norm(a);
  return {projected_sq, residual_sq, total_sq,
          std::fabs(projected_sq + residual_sq - total_sq)};
}

SchattenPythagorean schatten_pythagorean_check(const Matrix& a,
                                               const Vector& w, double p) {
  if (w.size() != a.rows()) {
    throw DimensionMismatch("schatten_pythagorean_check: bad w length");
  }
  require_unit(w, "schatten_pythagorean_check");
  Vector atw = matvec_t(a, w);
  const double atw_norm = norm(atw);
  if (atw_norm == 0.0) {
    throw DegenerateW("schatten_pythagorean_check: A^T w = 0");
  }
  Vector v = scaled(atw, 1.0 / atw_norm);
  const double lhs = std::pow(schatten_norm(a, p), p);
  // ||w w^T A||_{S_p} = ||A^T w||_2 (rank one).
  const double rhs =
      std::pow(atw_norm, p) + std::pow(lra_error(a, v, p), p);
  const double slack = lhs - rhs;
  return {slack >= -1e-9 * lhs, slack, lhs, rhs};
}

LraReport correlated_vector_to_lra(const Matrix& a, const Vector& w, double p,
                                   double eps) {
  if (w.size() != a.rows()) {
    throw DimensionMismatch("correlated_vector_to_lra: bad w length");
  }
  require_unit(w, "correlated_vector_to_lra");
  Vector sv = dense::singular_values(a);
  const double sigma1 = sv.front();
  const double norm_p = std::isinf(p) ? sigma1 : schatten_norm(sv, p);
  Vector atw = matvec_t(a, w);
  const double atw_norm = norm(atw);
  if (std::isinf(p)) throw Error("correlated_vector_to_lra: finite p only");
  const double threshold =
      (1.0 + eps) * std::pow(sigma1, p) - eps * std::pow(norm_p, p);
  if (std::pow(atw_norm, p) < threshold) {
    throw HypothesisViolated(
        "correlated_vector_to_lra: ||A^T w||^p below the correlation "
        "threshold");
  }
  if (atw_norm == 0.0) {
    throw DegenerateW("correlated_vector_to_lra: A^T w = 0");
  }
  LraReport rep;
  rep.v = scaled(atw, 1.0 / atw_norm);
  rep.p = p;
  rep.achieved_error = lra_error(a, rep.v, p);
  rep.optimal_error = optimal_rank1_error(sv, p);
  rep.relative_error = rep.optimal_error > 0.0
                           ? rep.achieved_error / rep.optimal_error
                           : (rep.achieved_error > 0.0
                                  ? std::numeric_limits<double>::infinity()
                                  : 1.0);
  if (std::pow(rep.achieved_error, p) >
      (1.0 + eps) * std::pow(rep.optimal_error, p) + 1e-9) {
    throw Error("correlated_vector_to_lra: postcondition failed");
  }
  return rep;
}

bool spectral_gap_witness(const Matrix& a, const Vector& w) {
  if (a.rows() != a.cols() || w.size() != a.rows()) {
    throw DimensionMismatch("spectral_gap_witness: shape mismatch");
  }
  require_unit(w, "spectral_gap_witness");
  dense::SymEig eig = dense::sym_eig(a);
  const double lambda1 = eig.values.front();
  const double eps = (lambda1 - 1.0) / 2.0;
  if (eps <= 0.0) {
    throw SpectrumMismatch("spectral_gap_witness: top eigenvalue must exceed 1");
  }
  for (std::size_t i = 1; i < eig.values.size(); ++i) {
    if (std::fabs(eig.values[i]) > 1.0 + 1e-9) {
      throw SpectrumMismatch(
          "spectral_gap_witness: non-top eigenvalue outside [-1, 1]");
    }
  }
  Vector u1 = eig.vectors.col(0);
  Vector aw = matvec(a, w);
  const double c1 = dot(u1, w);
  const double c2 = dot(u1, aw);
  const bool witness = (c1 * c1 <= eps / 2.0) && (c2 * c2 <= eps / 2.0);
  if (witness) {
    // Certified: the residual operator norm must beat (1+eps) * optimum,
    // where the optimum is 1 under the stated spectrum hypothesis.
    const double err = lra_error(a, w, std::numeric_limits<double>::infinity());
    if (!(err > 1.0 + eps)) {
      throw Error("spectral_gap_witness: certificate failed numerically");
    }
  }
  return witness;
}

}  // namespace mvlab
