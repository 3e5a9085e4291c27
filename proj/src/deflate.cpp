#include "mvlab/deflate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvlab/errors.hpp"

namespace mvlab {
namespace {

struct Pole {
  double b;       // diagonal value
  double weight;  // sum of u_i^2 over the cluster
};

// f(x) = 1 - sum_j w_j / (b_j - x); strictly decreasing between poles.
double secular(const std::vector<Pole>& poles, double x) {
  double s = 0.0;
  for (const Pole& p : poles) s += p.weight / (p.b - x);
  return 1.0 - s;
}

// Root of f in the open interval (lo, hi) where f(lo+) = +inf, f(hi-) = -inf.
double bisect_root(const std::vector<Pole>& poles, double lo, double hi) {
  for (int it = 0; it < 140; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at machine resolution
    if (secular(poles, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Vector deflated_eigenvalues(const Vector& a, const Vector& u) {
  const std::size_t n = a.size();
  if (u.size() != n) throw DimensionMismatch("deflated_eigenvalues");
  if (n == 0) return {};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a[i] > a[j]; });

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scale = std::max(scale, std::fabs(a[i]));
    scale = std::max(scale, u[i] * u[i]);
  }
  if (scale == 0.0) return Vector(n, 0.0);
  const double cluster_tol = 1e-14 * scale;
  const double weight_tol = 1e-30 * scale;

  // Group equal diagonal values; a cluster of multiplicity m contributes m-1
  // untouched eigenvalues plus one pole carrying the cluster's weight.
  std::vector<Pole> poles;
  Vector fixed;  // eigenvalues known exactly by deflation
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double weight = 0.0;
    const double b = a[order[i]];
    while (j < n && b - a[order[j]] <= cluster_tol) {
      weight += u[order[j]] * u[order[j]];
      ++j;
    }
    const std::size_t mult = j - i;
    if (weight <= weight_tol) {
      fixed.insert(fixed.end(), mult, b);
    } else {
      fixed.insert(fixed.end(), mult - 1, b);
      poles.push_back({b, weight});
    }
    i = j;
  }

  Vector eigs = fixed;
  // One root strictly below each pole, bracketed by the next pole (or by
  // b_min - total weight for the last interval).
  for (std::size_t p = 0; p < poles.size(); ++p) {
    const double hi = poles[p].b;
    double lo;
    if (p + 1 < poles.size()) {
      lo = poles[p + 1].b;
    } else {
      double total = 0.0;
      for (const Pole& q : poles) total += q.weight;
      lo = poles.back().b - total - 1.0;
      // Widen until the sign is right (guards rounding in the bound).
      while (secular(poles, lo) < 0.0) lo -= std::max(1.0, std::fabs(lo));
    }
    eigs.push_back(bisect_root(poles, lo, hi));
  }

  std::sort(eigs.begin(), eigs.end(), std::greater<double>());
  return eigs;
}

double deflated_top_eigenvalue(const Vector& a, const Vector& u) {
  // Cheap enough to reuse the full path; callers at scale have few distinct
  // diagonal values.
  Vector eigs = deflated_eigenvalues(a, u);
  return eigs.front();
}

Vector deflated_singular_values(const Vector& sigma, const Vector& w) {
  const std::size_t n = sigma.size();
  if (w.size() != n) throw DimensionMismatch("deflated_singular_values");
  Vector a(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = sigma[i] * sigma[i];
    u[i] = sigma[i] * w[i];
  }
  Vector eigs = deflated_eigenvalues(a, u);
  for (double& e : eigs) e = std::sqrt(std::max(0.0, e));
  return eigs;
}

}  // namespace mvlab
