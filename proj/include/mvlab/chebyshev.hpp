#pragma once

#include <cstddef>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/operators.hpp"

namespace mvlab {

// Polynomial in the monomial basis: coeffs[i] multiplies x^i.
struct PolyCoeffs {
  Vector coeffs;

  // Highest nonzero index, or -1 for the zero polynomial.
  int degree() const;
  // Trims trailing zeros.
  void normalize();
};

// Compensated Horner evaluation (FMA error-free transformations). The
// monomial coefficients of high-degree Chebyshev polynomials cancel
// catastrophically on [-1, 1]; plain Horner is useless there past degree ~30.
double poly_eval(const PolyCoeffs& p, double x);

// T_d(x). cos branch on |x| <= 1, hyperbolic branch on |x| >= 1; the two
// agree at |x| = 1.
double cheb_eval(int d, double x);

// log T_d(x) for x >= 1, stable for large d where T_d overflows.
double log_cheb_eval_ge1(int d, double x);

// Monomial coefficients of T_d via the three-term recurrence. Capped: the
// coefficients grow like 2^d and the monomial form is only needed at moderate
// degree.
inline constexpr int kChebCoeffsMaxDegree = 200;
PolyCoeffs cheb_coeffs(int d);

// x_i = cos(i*pi/d), i = 0..d, decreasing. |T_d(x_i)| = 1 at each.
Vector cheb_extrema(int d);

// T_d(x + eps) / T_d(1 + eps): equals 1 at x = 1 and is at most
// 1/T_d(1+eps) in magnitude on [0, 1-eps].
double shifted_cheb_eval(int d, double eps, double x);

// Monomial coefficients of the shifted/scaled polynomial above.
PolyCoeffs shifted_cheb_coeffs(int d, double eps);

// Empirical envelope fit for the growth of T_d(1+eps): returns the extreme
// ratios log T_d(1+eps) / min(sqrt(eps)*d, eps*d^2) over the grid.
struct GrowthEnvelope {
  double c_hat;  // smallest observed ratio
  double C_hat;  // largest observed ratio
  struct Point {
    int d;
    double eps;
    double log_value;
    double exponent;  // min(sqrt(eps)*d, eps*d^2)
    double ratio;
  };
  std::vector<Point> points;
};
GrowthEnvelope growth_envelope_check(const std::vector<int>& degrees,
                                     const std::vector<double>& eps_grid);

// p(A) g by Horner over matvecs: exactly degree(p) oracle applications.
Vector apply_poly(CountingOracle& oracle, const PolyCoeffs& p,
                  const Vector& g);

}  // namespace mvlab
