#include "mvlab/qr.hpp"

#include <algorithm>
#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/kernels.hpp"

namespace mvlab {
namespace {

// Householder vector for the tail x = work[offset..n): returns (u, beta) with
// (I - 2uu^T) x = beta e_offset, u supported on [offset, n).
struct Reflector {
  Vector u;            // full length, zeros above offset
  std::size_t offset;
};

void apply_reflector(const Reflector& h, Vector& x) {
  const std::size_t n = x.size();
  const std::size_t m = n - h.offset;
  const double c =
      2.0 * kernels::dot(h.u.data() + h.offset, x.data() + h.offset, m);
  kernels::axpy(-c, h.u.data() + h.offset, x.data() + h.offset, m);
}

}  // namespace

std::size_t QrBasis::prefix_rank(std::size_t prefix_len) const {
  std::size_t r = 0;
  while (r < kept.size() && kept[r] < prefix_len) ++r;
  return r;
}

Matrix QrBasis::inverse_r(std::size_t r) const {
  if (r > rank()) throw DimensionMismatch("inverse_r: r exceeds rank");
  // Back substitution, one basis column at a time: R w_c = e_c.
  Matrix w(r, r, 0.0);
  for (std::size_t c = 0; c < r; ++c) {
    w(c, c) = 1.0 / r_upper(c, c);
    for (std::size_t i = c; i-- > 0;) {
      double s = 0.0;
      for (std::size_t k = i + 1; k <= c; ++k) s += r_upper(i, k) * w(k, c);
      w(i, c) = -s / r_upper(i, i);
    }
  }
  return w;
}

QrBasis householder_qr(const std::vector<Vector>& cols, double rel_tol) {
  QrBasis out;
  out.input_cols = cols.size();
  if (cols.empty()) return out;
  const std::size_t n = cols[0].size();

  double max_norm = 0.0;
  for (const Vector& c : cols) {
    if (c.size() != n) throw DimensionMismatch("householder_qr: ragged input");
    max_norm = std::max(max_norm, norm(c));
  }
  const double tol = rel_tol * max_norm;

  std::vector<Vector> work = cols;
  std::vector<Reflector> refl;
  std::vector<double> diag;
  // R entries above the diagonal, per kept column.
  std::vector<Vector> r_cols;

  for (std::size_t j = 0; j < cols.size(); ++j) {
    Vector& x = work[j];
    for (const Reflector& h : refl) apply_reflector(h, x);
    const std::size_t k = refl.size();
    if (k >= n) continue;  // basis already full rank
    const double tail_norm =
        std::sqrt(kernels::nrm2sq(x.data() + k, n - k));
    if (tail_norm <= tol) continue;  // dependent column, dropped

    const double beta = x[k] >= 0.0 ? -tail_norm : tail_norm;
    Reflector h;
    h.offset = k;
    h.u = Vector(n, 0.0);
    for (std::size_t i = k; i < n; ++i) h.u[i] = x[i];
    h.u[k] -= beta;
    const double unorm = std::sqrt(kernels::nrm2sq(h.u.data() + k, n - k));
    if (unorm == 0.0) continue;  // x was already beta*e_k exactly
    kernels::scal(1.0 / unorm, h.u.data() + k, n - k);

    Vector r_col(x.begin(), x.begin() + k);
    r_cols.push_back(std::move(r_col));
    diag.push_back(beta);
    refl.push_back(std::move(h));
    out.kept.push_back(j);
  }

  const std::size_t rank = refl.size();
  out.r_upper = Matrix(rank, rank, 0.0);
  for (std::size_t c = 0; c < rank; ++c) {
    for (std::size_t i = 0; i < r_cols[c].size(); ++i) {
      out.r_upper(i, c) = r_cols[c][i];
    }
    out.r_upper(c, c) = diag[c];
  }

  // q_c = H_0 H_1 ... H_c e_c (reflectors past c fix e_c).
  out.q.resize(rank);
  for (std::size_t c = 0; c < rank; ++c) {
    Vector q(n, 0.0);
    q[c] = 1.0;
    for (std::size_t i = c + 1; i-- > 0;) apply_reflector(refl[i], q);
    out.q[c] = std::move(q);
  }
  return out;
}

}  // namespace mvlab
