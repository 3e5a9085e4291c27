#include "mvlab/chebyshev.hpp"

#include <cmath>
#include <numbers>

#include "mvlab/errors.hpp"

namespace mvlab {

int PolyCoeffs::degree() const {
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    if (coeffs[i] != 0.0) return static_cast<int>(i);
  }
  return -1;
}

void PolyCoeffs::normalize() {
  while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
}

double poly_eval(const PolyCoeffs& p, double x) {
  const int d = p.degree();
  if (d < 0) return 0.0;
  // Compensated Horner: TwoProd via FMA plus TwoSum, carrying the rounding
  // error in a parallel accumulator.
  double s = p.coeffs[static_cast<std::size_t>(d)];
  double e = 0.0;
  for (int k = d - 1; k >= 0; --k) {
    const double prod = s * x;
    const double prod_err = std::fma(s, x, -prod);
    const double c = p.coeffs[static_cast<std::size_t>(k)];
    const double t = prod + c;
    const double z = t - prod;
    const double sum_err = (prod - (t - z)) + (c - z);
    s = t;
    e = e * x + (prod_err + sum_err);
  }
  return s + e;
}

double cheb_eval(int d, double x) {
  if (d < 0) throw Error("cheb_eval: negative degree");
  if (std::fabs(x) <= 1.0) {
    return std::cos(d * std::acos(x));
  }
  if (x < 0.0) {
    const double v = cheb_eval(d, -x);
    return (d % 2 == 0) ? v : -v;
  }
  const double root = std::sqrt(x * x - 1.0);
  return 0.5 * (std::pow(x - root, d) + std::pow(x + root, d));
}

double log_cheb_eval_ge1(int d, double x) {
  if (x < 1.0) throw Error("log_cheb_eval_ge1: x < 1");
  // T_d(x) = (s^d + s^-d)/2 with s = x + sqrt(x^2-1) >= 1.
  const double log_s = std::log(x + std::sqrt(x * x - 1.0));
  const double big = d * log_s;
  return big - std::numbers::ln2 + std::log1p(std::exp(-2.0 * big));
}

PolyCoeffs cheb_coeffs(int d) {
  if (d < 0) throw Error("cheb_coeffs: negative degree");
  if (d > kChebCoeffsMaxDegree) {
    throw DegreeTooLarge("cheb_coeffs: degree above cap " +
                         std::to_string(kChebCoeffsMaxDegree));
  }
  PolyCoeffs t_prev{{1.0}};         // T_0
  if (d == 0) return t_prev;
  PolyCoeffs t_cur{{0.0, 1.0}};     // T_1
  for (int k = 2; k <= d; ++k) {
    PolyCoeffs t_next;
    t_next.coeffs.assign(static_cast<std::size_t>(k) + 1, 0.0);
    for (std::size_t i = 0; i < t_cur.coeffs.size(); ++i) {
      t_next.coeffs[i + 1] += 2.0 * t_cur.coeffs[i];
    }
    for (std::size_t i = 0; i < t_prev.coeffs.size(); ++i) {
      t_next.coeffs[i] -= t_prev.coeffs[i];
    }
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return t_cur;
}

Vector cheb_extrema(int d) {
  if (d < 1) throw Error("cheb_extrema: d must be positive");
  Vector x(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) {
    x[static_cast<std::size_t>(i)] = std::cos(i * std::numbers::pi / d);
  }
  return x;
}

double shifted_cheb_eval(int d, double eps, double x) {
  if (eps <= 0.0 || eps >= 0.5) {
    throw Error("shifted_cheb_eval: eps not in (0,0.5)");
  }
  const double log_denom = log_cheb_eval_ge1(d, 1.0 + eps);
  const double shifted = x + eps;
  if (std::fabs(shifted) <= 1.0) {
    return std::cos(d * std::acos(shifted)) * std::exp(-log_denom);
  }
  if (shifted >= 1.0) {
    return std::exp(log_cheb_eval_ge1(d, shifted) - log_denom);
  }
  // shifted < -1
  const double mag = std::exp(log_cheb_eval_ge1(d, -shifted) - log_denom);
  return (d % 2 == 0) ? mag : -mag;
}

PolyCoeffs shifted_cheb_coeffs(int d, double eps) {
  PolyCoeffs t = cheb_coeffs(d);
  // T_d(x + eps): substitute via binomial expansion.
  PolyCoeffs out;
  out.coeffs.assign(static_cast<std::size_t>(d) + 1, 0.0);
  // powers[i] holds binomial row for (x+eps)^i, built incrementally.
  Vector row{1.0};
  for (int i = 0; i <= d; ++i) {
    const double ci = t.coeffs[static_cast<std::size_t>(i)];
    if (ci != 0.0) {
      for (int k = 0; k <= i; ++k) {
        out.coeffs[static_cast<std::size_t>(k)] +=
            ci * row[static_cast<std::size_t>(k)];
      }
    }
    // row for (x+eps)^{i+1} from (x+eps)^i.
    Vector next(static_cast<std::size_t>(i) + 2, 0.0);
    for (int k = 0; k <= i; ++k) {
      next[static_cast<std::size_t>(k) + 1] += row[static_cast<std::size_t>(k)];
      next[static_cast<std::size_t>(k)] +=
          eps * row[static_cast<std::size_t>(k)];
    }
    row = std::move(next);
  }
  const double denom = cheb_eval(d, 1.0 + eps);
  for (double& c : out.coeffs) c /= denom;
  out.normalize();
  return out;
}

GrowthEnvelope growth_envelope_check(const std::vector<int>& degrees,
                                     const std::vector<double>& eps_grid) {
  GrowthEnvelope env;
  env.c_hat = std::numeric_limits<double>::infinity();
  env.C_hat = 0.0;
  for (int d : degrees) {
    for (double eps : eps_grid) {
      if (eps <= 0.0 || eps >= 0.5) {
        throw Error("growth_envelope_check: eps not in (0,0.5)");
      }
      const double lv = log_cheb_eval_ge1(d, 1.0 + eps);
      const double expo =
          std::min(std::sqrt(eps) * d, eps * static_cast<double>(d) * d);
      const double ratio = lv / expo;
      env.points.push_back({d, eps, lv, expo, ratio});
      env.c_hat = std::min(env.c_hat, ratio);
      env.C_hat = std::max(env.C_hat, ratio);
    }
  }
  if (!(env.c_hat > 0.0)) {
    throw Error("growth_envelope_check: fitted lower constant not positive");
  }
  return env;
}

Vector apply_poly(CountingOracle& oracle, const PolyCoeffs& p,
                  const Vector& g) {
  if (!oracle.symmetric() && oracle.rows() != oracle.cols()) {
    throw DimensionMismatch("apply_poly: operator must be square");
  }
  const int d = p.degree();
  if (d < 0) return Vector(g.size(), 0.0);
  if (oracle.budget()) {
    const std::uint64_t left = *oracle.budget() - oracle.count();
    if (static_cast<std::uint64_t>(d) > left) {
      throw BudgetExceeded("apply_poly: degree exceeds remaining budget");
    }
  }
  Vector r = scaled(g, p.coeffs[static_cast<std::size_t>(d)]);
  for (int k = d - 1; k >= 0; --k) {
    r = oracle.apply(r);
    axpy(p.coeffs[static_cast<std::size_t>(k)], g, r);
  }
  return r;
}

}  // namespace mvlab
