#include "mvlab/krylov.hpp"

#include <algorithm>
#include <cmath>

#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"

namespace mvlab {
namespace {

Vector top_eigvec_of_small(const Matrix& m) {
  dense::SymEig eig = dense::sym_eig(m);
  return eig.vectors.col(0);
}

// Ritz extraction rebuilds A*Q from ladder columns through inv(R); basis
// columns whose R diagonal sits near the rank-tolerance floor would amplify
// rounding by ~1/|R(c,c)|, so the extraction stops at the first
// ill-conditioned column. The span itself (correlation measurements) keeps
// the full 1e-10-tolerance basis.
constexpr double kRitzConditionTol = 1e-7;

std::size_t conditioned_prefix(const QrBasis& basis) {
  if (basis.rank() == 0) return 0;
  const double scale = std::fabs(basis.r_upper(0, 0));
  std::size_t limit = 0;
  while (limit < basis.rank() &&
         std::fabs(basis.r_upper(limit, limit)) >= kRitzConditionTol * scale) {
    ++limit;
  }
  return limit;
}

}  // namespace

KrylovSubspace build_single_ladder(CountingOracle& oracle, int q,
                                   RngStream& rng) {
  if (!oracle.symmetric()) {
    throw DimensionMismatch("build_single_ladder: symmetric operator required");
  }
  if (q < 1) throw Error("build_single_ladder: q must be positive");
  const std::size_t n = oracle.rows();
  const std::uint64_t count_start = oracle.count();

  KrylovSubspace sub;
  sub.block_size = 1;
  sub.iterations = static_cast<std::size_t>(q);

  Vector c = rng.gaussian_vector(n);
  if (normalize(c) == 0.0) throw RankCollapse("start vector is zero");
  sub.raw_columns.push_back(c);
  for (int i = 0; i < q; ++i) {
    Vector y = oracle.apply(sub.raw_columns.back());
    const double s = normalize(y);
    if (s == 0.0) {
      if (i == 0) throw RankCollapse("A g = 0: Krylov matrix has rank 0");
      break;  // ladder terminated early; remaining powers are all zero
    }
    sub.image.push_back(static_cast<int>(sub.raw_columns.size()));
    sub.image_scale.push_back(s);
    sub.raw_columns.push_back(std::move(y));
  }
  sub.image.push_back(-1);
  sub.image_scale.push_back(0.0);
  sub.queries_used = oracle.count() - count_start;
  sub.basis = householder_qr(sub.raw_columns);
  if (sub.basis.rank() == 0) throw RankCollapse("ladder has rank 0");
  return sub;
}

KrylovSubspace block_krylov(CountingOracle& oracle, int r, int s,
                            RngStream& rng) {
  if (!oracle.symmetric()) {
    throw DimensionMismatch("block_krylov: symmetric operator required");
  }
  if (r < 1 || s < 1) throw Error("block_krylov: r, s must be positive");
  const std::size_t n = oracle.rows();
  // The ladder may saturate (s*(r+1) == n); the experiment harness enforces
  // the stricter s*(r+1) < n its instances require.
  if (static_cast<std::size_t>(s) * static_cast<std::size_t>(r + 1) > n) {
    throw Error("block_krylov: need s*(r+1) <= n");
  }
  const std::uint64_t count_start = oracle.count();

  KrylovSubspace sub;
  sub.block_size = static_cast<std::size_t>(s);
  sub.iterations = static_cast<std::size_t>(r);
  const std::size_t cols = static_cast<std::size_t>(s) * (r + 1);
  sub.raw_columns.assign(cols, Vector());
  sub.image.assign(cols, -1);
  sub.image_scale.assign(cols, 0.0);

  // t-major order: column index = t*s + j.
  for (int j = 0; j < s; ++j) {
    Vector g = rng.gaussian_vector(n);
    if (normalize(g) == 0.0) throw RankCollapse("start vector is zero");
    sub.raw_columns[static_cast<std::size_t>(j)] = std::move(g);
  }
  for (int t = 0; t < r; ++t) {
    for (int j = 0; j < s; ++j) {
      const std::size_t m = static_cast<std::size_t>(t) * s + j;
      Vector y = oracle.apply(sub.raw_columns[m]);
      const double sc = normalize(y);  // zero stays zero
      sub.image[m] = static_cast<int>(m + s);
      sub.image_scale[m] = sc;
      sub.raw_columns[m + s] = std::move(y);
    }
  }
  sub.queries_used = oracle.count() - count_start;
  sub.basis = householder_qr(sub.raw_columns);
  if (sub.basis.rank() == 0) throw RankCollapse("block ladder has rank 0");
  return sub;
}

double best_correlation_prefix(const KrylovSubspace& subspace,
                               std::size_t prefix_cols, const Vector& u) {
  if (u.size() != subspace.dim()) {
    throw DimensionMismatch("best_correlation: vector length mismatch");
  }
  const std::size_t r = subspace.basis.prefix_rank(prefix_cols);
  double acc = 0.0;
  for (std::size_t c = 0; c < r; ++c) {
    const double d = dot(subspace.basis.q[c], u);
    acc += d * d;
  }
  return std::min(1.0, std::sqrt(acc));
}

double best_correlation(const KrylovSubspace& subspace, const Vector& u) {
  return best_correlation_prefix(subspace, subspace.raw_columns.size(), u);
}

SymLadderRitz::SymLadderRitz(const KrylovSubspace& subspace) : sub_(&subspace) {
  // Largest prefix of columns that all have stored A-images.
  std::size_t limit = 0;
  while (limit < subspace.raw_columns.size() &&
         subspace.image[limit] >= 0) {
    ++limit;
  }
  rr_prefix_limit_ = limit;
  rr_rank_ = std::min(subspace.basis.prefix_rank(limit),
                      conditioned_prefix(subspace.basis));
  if (rr_rank_ == 0) return;

  const Matrix w = subspace.basis.inverse_r(rr_rank_);
  aq_.assign(rr_rank_, Vector(subspace.dim(), 0.0));
  for (std::size_t c = 0; c < rr_rank_; ++c) {
    for (std::size_t j = 0; j <= c; ++j) {
      const std::size_t raw = subspace.basis.kept[j];
      const double coef = w(j, c) * subspace.image_scale[raw];
      if (coef != 0.0) {
        axpy(coef, subspace.raw_columns[static_cast<std::size_t>(
                       subspace.image[raw])],
             aq_[c]);
      }
    }
  }
  m_full_ = Matrix(rr_rank_, rr_rank_);
  for (std::size_t i = 0; i < rr_rank_; ++i) {
    for (std::size_t j = i; j < rr_rank_; ++j) {
      const double v = dot(aq_[i], aq_[j]);
      m_full_(i, j) = v;
      m_full_(j, i) = v;
    }
  }
}

Vector SymLadderRitz::top_ritz_vector(std::size_t m_prefix) const {
  const std::size_t prefix = std::min(m_prefix, rr_prefix_limit_);
  const std::size_t r = std::min(sub_->basis.prefix_rank(prefix), rr_rank_);
  if (r == 0) throw RankCollapse("Rayleigh-Ritz prefix has rank 0");
  Matrix m(r, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) m(i, j) = m_full_(i, j);
  }
  Vector y = top_eigvec_of_small(m);
  Vector v(sub_->dim(), 0.0);
  for (std::size_t c = 0; c < r; ++c) axpy(y[c], sub_->basis.q[c], v);
  normalize(v);
  return v;
}

double SymLadderRitz::top_ritz_value(std::size_t m_prefix) const {
  const std::size_t prefix = std::min(m_prefix, rr_prefix_limit_);
  const std::size_t r = std::min(sub_->basis.prefix_rank(prefix), rr_rank_);
  if (r == 0) throw RankCollapse("Rayleigh-Ritz prefix has rank 0");
  Matrix m(r, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) m(i, j) = m_full_(i, j);
  }
  return dense::sym_eig(m).values.front();
}

KrylovIterationResult krylov_iteration(CountingOracle& oracle, int q,
                                       RngStream& rng) {
  if (oracle.budget() &&
      *oracle.budget() - oracle.count() < static_cast<std::uint64_t>(q)) {
    throw BudgetExceeded("krylov_iteration: q exceeds remaining budget");
  }
  KrylovSubspace sub = build_single_ladder(oracle, q, rng);
  SymLadderRitz ritz(sub);
  Vector v = ritz.top_ritz_vector(static_cast<std::size_t>(q));
  return {std::move(v), std::move(sub)};
}

RectKrylovResult rectangular_krylov(CountingOracle& oracle, int t,
                                    RngStream& rng) {
  if (t < 0) throw Error("rectangular_krylov: t must be nonnegative");
  if (oracle.budget() &&
      *oracle.budget() - oracle.count() <
          static_cast<std::uint64_t>(2 * t + 1)) {
    throw BudgetExceeded("rectangular_krylov: 2t+1 exceeds remaining budget");
  }
  const std::size_t n = oracle.rows();
  const std::uint64_t count_start = oracle.count();

  RectKrylovResult out;
  KrylovSubspace& sub = out.subspace;
  sub.block_size = 1;
  sub.iterations = static_cast<std::size_t>(t);

  Vector c = rng.gaussian_vector(n);
  if (normalize(c) == 0.0) throw RankCollapse("start vector is zero");
  sub.raw_columns.push_back(std::move(c));
  for (int i = 0; i < t; ++i) {
    Vector h = oracle.apply_t(sub.raw_columns.back());  // A^T c_i
    Vector y = oracle.apply(h);                         // (A A^T) c_i
    out.at_columns.push_back(std::move(h));
    const double s = normalize(y);
    sub.image.push_back(static_cast<int>(sub.raw_columns.size()));
    sub.image_scale.push_back(s);
    sub.raw_columns.push_back(std::move(y));
    if (s == 0.0) break;  // (AA^T)^{i+1} g = 0; later powers identical
  }
  // The final A^T image completes the Gram data for the last column.
  out.at_columns.push_back(oracle.apply_t(sub.raw_columns.back()));
  sub.image.push_back(-1);
  sub.image_scale.push_back(0.0);
  sub.queries_used = oracle.count() - count_start;
  sub.basis = householder_qr(sub.raw_columns);
  if (sub.basis.rank() == 0) throw RankCollapse("ladder has rank 0");

  RectLadderRitz ritz(sub, out.at_columns);
  auto ext = ritz.extract(static_cast<std::size_t>(t));
  out.w = std::move(ext.w);
  out.v = std::move(ext.v);
  return out;
}

RectLadderRitz::RectLadderRitz(const KrylovSubspace& subspace,
                               const std::vector<Vector>& at_columns)
    : sub_(&subspace), at_cols_(&at_columns) {
  if (at_columns.size() < subspace.raw_columns.size()) {
    throw DimensionMismatch("RectLadderRitz: missing A^T columns");
  }
  const std::size_t rank = conditioned_prefix(subspace.basis);
  const std::size_t d = at_columns.front().size();
  const Matrix w = subspace.basis.inverse_r(rank);
  g_.assign(rank, Vector(d, 0.0));
  for (std::size_t c = 0; c < rank; ++c) {
    for (std::size_t j = 0; j <= c; ++j) {
      const std::size_t raw = subspace.basis.kept[j];
      if (w(j, c) != 0.0) axpy(w(j, c), at_columns[raw], g_[c]);
    }
  }
}

RectLadderRitz::Extract RectLadderRitz::extract(std::size_t t_prefix) const {
  const std::size_t prefix =
      std::min(t_prefix + 1, sub_->raw_columns.size());
  const std::size_t r =
      std::min(sub_->basis.prefix_rank(prefix), g_.size());
  if (r == 0) throw RankCollapse("rectangular Rayleigh-Ritz prefix empty");
  Matrix m(r, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i; j < r; ++j) {
      const double v = dot(g_[i], g_[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  Vector y = top_eigvec_of_small(m);
  Extract out;
  out.w = Vector(sub_->dim(), 0.0);
  out.v = Vector(g_.front().size(), 0.0);
  for (std::size_t c = 0; c < r; ++c) {
    axpy(y[c], sub_->basis.q[c], out.w);
    axpy(y[c], g_[c], out.v);
  }
  normalize(out.w);
  if (normalize(out.v) == 0.0) {
    throw RankCollapse("rectangular_krylov: A^T vanishes on the subspace");
  }
  return out;
}

// ---- good vectors ----

namespace {

void validate_lambda(const Vector& lambda) {
  if (lambda.size() < 2) {
    throw DimensionMismatch("good vectors: need at least 2 eigenvalues");
  }
  if (std::fabs(lambda.front() - 1.0) > 1e-9) {
    throw SpectrumMismatch("good vectors: lambda_1 must be normalized to 1");
  }
  double prev = lambda.front();
  for (double l : lambda) {
    if (l < -1e-12 || l > prev + 1e-12) {
      throw SpectrumMismatch("good vectors: spectrum not nonincreasing in [0,1]");
    }
    prev = l;
  }
}

double tail_power_sum(const Vector& lambda, double p) {
  double acc = 0.0;
  for (std::size_t i = 1; i < lambda.size(); ++i) {
    acc += std::pow(std::max(0.0, lambda[i]), p / 2.0);
  }
  return acc;
}

std::size_t near_top_count(const Vector& lambda, double p) {
  const double lo = 1.0 - 1.0 / (2.0 * p);
  std::size_t count = 0;
  for (std::size_t i = 1; i < lambda.size(); ++i) {
    if (lambda[i] >= lo) ++count;
  }
  return count;
}

}  // namespace

int select_good_vector_case(const Vector& lambda, double p, double eps) {
  validate_lambda(lambda);
  const double tail = tail_power_sum(lambda, p);
  if (tail >= 1.0 / eps) return 1;
  if (static_cast<double>(near_top_count(lambda, p)) >=
      std::pow(eps, -1.0 / 3.0)) {
    return 2;
  }
  // Boundary tail = 1/2 goes to the plain-power regime; both constructions
  // are valid there.
  if (tail <= 0.5) return 4;
  return 3;
}

GoodVectorPoly good_vector_polynomial(int case_id, const Vector& lambda,
                                      double p, double eps, int t) {
  validate_lambda(lambda);
  const int detected = select_good_vector_case(lambda, p, eps);
  if (case_id != detected) {
    throw CaseMismatch("good_vector_polynomial: spectrum is in regime " +
                       std::to_string(detected) + ", not " +
                       std::to_string(case_id));
  }
  GoodVectorPoly out;
  out.case_id = case_id;
  out.vacuous = false;
  // phi(1), computed stably per regime; the monomial form cancels too hard
  // at high degree to certify positivity through Horner.
  double phi_at_one = 1.0;

  switch (case_id) {
    case 1:
      out.vacuous = true;  // the bound's right side is nonpositive
      return out;
    case 2: {
      const int m = static_cast<int>(std::ceil(p / 2.0));
      const int d_cheb = t - m;
      if (d_cheb < 1) {
        throw DegreeTooLarge("good_vector_polynomial: t too small for regime 2");
      }
      const double delta = std::pow(eps, 2.0 / 3.0) / (2.0 * p);
      PolyCoeffs cheb = shifted_cheb_coeffs(d_cheb, delta);
      out.phi.coeffs.assign(static_cast<std::size_t>(m), 0.0);
      out.phi.coeffs.insert(out.phi.coeffs.end(), cheb.coeffs.begin(),
                            cheb.coeffs.end());
      break;
    }
    case 3: {
      const double lo = 1.0 - 1.0 / (2.0 * p);
      const double hi = 1.0 - eps / (2.0 * p);
      Vector roots;
      for (std::size_t i = 1; i < lambda.size(); ++i) {
        if (lambda[i] >= lo && lambda[i] <= hi) roots.push_back(lambda[i]);
      }
      const int m = t / 2;
      if (m + static_cast<int>(roots.size()) > t) {
        throw DegreeTooLarge("good_vector_polynomial: t too small for regime 3");
      }
      // x^m * prod (x - root), expanded by convolution.
      Vector prod{1.0};
      for (double root : roots) {
        Vector next(prod.size() + 1, 0.0);
        for (std::size_t i = 0; i < prod.size(); ++i) {
          next[i + 1] += prod[i];
          next[i] -= root * prod[i];
        }
        prod = std::move(next);
        phi_at_one *= (1.0 - root);
      }
      out.phi.coeffs.assign(static_cast<std::size_t>(m), 0.0);
      out.phi.coeffs.insert(out.phi.coeffs.end(), prod.begin(), prod.end());
      break;
    }
    case 4: {
      // x^t: the full degree budget. Any exponent above the crossing point
      // where x^L <= (eps^2/p) x^{p/2} on the tail works; larger only helps.
      if (t < 1) throw DegreeTooLarge("good_vector_polynomial: t must be >= 1");
      out.phi.coeffs.assign(static_cast<std::size_t>(t) + 1, 0.0);
      out.phi.coeffs.back() = 1.0;
      break;
    }
    default:
      throw CaseMismatch("good_vector_polynomial: case id must be 1..4");
  }
  out.phi.normalize();
  if (!(phi_at_one > 0.0)) {
    throw Error("good_vector_polynomial: phi(1) must be positive");
  }
  return out;
}

GoodVectorReport good_vector_exists(const Vector& lambda_in, double p,
                                    double eps, int t, int trials,
                                    RngStream& rng) {
  Vector lambda = lambda_in;
  if (lambda.empty()) throw DimensionMismatch("good_vector_exists: empty");
  const double lambda1 = lambda.front();
  if (lambda1 <= 0.0) {
    throw SpectrumMismatch("good_vector_exists: lambda_1 must be positive");
  }
  for (double& l : lambda) l /= lambda1;  // WLOG ||A||_op = 1
  validate_lambda(lambda);

  GoodVectorReport rep;
  rep.case_id = select_good_vector_case(lambda, p, eps);
  rep.trials = trials;

  const double tail = tail_power_sum(lambda, p);
  const double target = 1.0 - eps * tail;

  // Stable pointwise evaluation of phi per regime (the monomial form is for
  // export; evaluation uses the structured factorizations directly).
  const int m2 = static_cast<int>(std::ceil(p / 2.0));
  if (rep.case_id == 2 && t <= m2) {
    throw DegreeTooLarge("good_vector_exists: t too small for regime 2");
  }
  const double delta = std::pow(eps, 2.0 / 3.0) / (2.0 * p);
  const double lo = 1.0 - 1.0 / (2.0 * p);
  const double hi = 1.0 - eps / (2.0 * p);
  Vector roots;
  if (rep.case_id == 3) {
    for (std::size_t i = 1; i < lambda.size(); ++i) {
      if (lambda[i] >= lo && lambda[i] <= hi) roots.push_back(lambda[i]);
    }
  }
  auto phi_at = [&](double x) -> double {
    switch (rep.case_id) {
      case 2:
        return std::pow(x, m2) * shifted_cheb_eval(t - m2, delta, x);
      case 3: {
        double v = std::pow(x, t / 2);
        for (double root : roots) v *= (x - root);
        return v;
      }
      case 4:
        return std::pow(x, t);
      default:
        return 1.0;
    }
  };

  for (int trial = 0; trial < trials; ++trial) {
    if (rep.case_id == 1) {
      // Right side is <= 0 while w^T Lambda w >= 0 for any unit w.
      ++rep.successes;
      continue;
    }
    RngStream trial_rng = rng.derived(static_cast<std::uint64_t>(trial));
    Vector g = trial_rng.gaussian_vector(lambda.size());
    Vector w(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      w[i] = phi_at(lambda[i]) * g[i];
    }
    if (normalize(w) == 0.0) continue;
    double quad = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      quad += w[i] * w[i] * lambda[i];
    }
    const double achieved = std::pow(std::max(0.0, quad), p / 2.0);
    if (achieved >= target - 1e-12) ++rep.successes;
  }
  rep.success_fraction =
      trials > 0 ? static_cast<double>(rep.successes) / trials : 0.0;
  return rep;
}

}  // namespace mvlab
