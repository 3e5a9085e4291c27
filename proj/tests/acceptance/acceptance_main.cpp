// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of failed
// criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mvlab/calibration.hpp"
#include "mvlab/chebyshev.hpp"
#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/experiments.hpp"
#include "mvlab/krylov.hpp"
#include "mvlab/lifting.hpp"
#include "mvlab/operators.hpp"
#include "mvlab/rng.hpp"
#include "mvlab/schatten.hpp"
#include "mvlab/stats.hpp"

using namespace mvlab;

namespace {

constexpr std::uint64_t kAcceptanceSeed = 20240601;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Reporter {
  int failures = 0;
  std::vector<std::string> details;

  void note(const std::string& line) { details.push_back(line); }
  void flush_details() {
    for (const std::string& d : details) std::printf("    %s\n", d.c_str());
    details.clear();
  }
};

bool check(Reporter& rep, bool ok, const std::string& what) {
  rep.note(std::string(ok ? "ok   " : "FAIL ") + what);
  return ok;
}

Matrix random_symmetric(RngStream& rng, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = rng.gaussian();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

Matrix random_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.gaussian();
  return m;
}

// ---- criterion 1: Chebyshev suite ----
bool criterion_chebyshev(Reporter& rep) {
  bool ok = true;
  // Recurrence on a grid.
  double worst = 0.0;
  for (int d = 1; d < 60; ++d) {
    for (double x = -2.0; x <= 2.0; x += 0.0625) {
      const double lhs = cheb_eval(d + 1, x);
      const double rhs = 2.0 * x * cheb_eval(d, x) - cheb_eval(d - 1, x);
      worst = std::max(worst,
                       std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
    }
  }
  ok &= check(rep, worst <= 1e-9, "recurrence residual " + std::to_string(worst));

  // Branch consistency at +-1.
  double branch_worst = 0.0;
  for (int d = 0; d <= 64; ++d) {
    branch_worst = std::max(branch_worst, std::fabs(cheb_eval(d, 1.0) - 1.0));
    const double expect = d % 2 == 0 ? 1.0 : -1.0;
    branch_worst = std::max(branch_worst,
                            std::fabs(cheb_eval(d, -1.0) - expect));
  }
  ok &= check(rep, branch_worst <= 1e-12, "branch consistency at |x| = 1");

  // Extrema for d <= 64.
  double ext_worst = 0.0;
  for (int d = 1; d <= 64; ++d) {
    for (double xi : cheb_extrema(d)) {
      ext_worst = std::max(ext_worst,
                           std::fabs(std::fabs(cheb_eval(d, xi)) - 1.0));
    }
  }
  ok &= check(rep, ext_worst <= 1e-12, "extrema |T_d(x_i)| = 1");

  // Extremality across 200 random normalized polynomials per (d, eps).
  RngStream rng(kAcceptanceSeed);
  bool extremal_ok = true;
  for (int d : {4, 8, 16}) {
    Vector nodes = cheb_extrema(d);
    for (double eps : {0.05, 0.1, 0.25}) {
      const double td = cheb_eval(d, 1.0 + eps);
      for (int trial = 0; trial < 200; ++trial) {
        RngStream tr = rng.derived("extremal", static_cast<std::uint64_t>(
                                                   d * 10000 + trial));
        PolyCoeffs q;
        q.coeffs = tr.gaussian_vector(static_cast<std::size_t>(d) + 1);
        double node_max = 0.0;
        for (double x : nodes) {
          node_max = std::max(node_max, std::fabs(poly_eval(q, x)));
        }
        for (double& c : q.coeffs) c /= node_max;
        if (std::fabs(poly_eval(q, 1.0 + eps)) > td * (1.0 + 1e-9)) {
          extremal_ok = false;
        }
      }
    }
  }
  ok &= check(rep, extremal_ok, "extremality over random normalized polynomials");

  // Envelope constants stay inside the frozen window.
  std::vector<int> degrees;
  for (int d = 5; d <= 100; d += 5) degrees.push_back(d);
  GrowthEnvelope env = growth_envelope_check(
      degrees, {0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25});
  ok &= check(rep,
              env.c_hat >= cal::kEnvelopeCMin && env.C_hat <= cal::kEnvelopeCMax,
              "growth envelope c_hat=" + std::to_string(env.c_hat) +
                  " C_hat=" + std::to_string(env.C_hat));
  return ok;
}

// ---- criterion 2: lower-bound shape ----
bool criterion_lower_single(Reporter& rep) {
  ExperimentConfig cfg;
  cfg.experiment = "lower-single";
  cfg.n = 2049;
  cfg.eps = 0.04;
  cfg.q_spec = 31;
  cfg.q_grid = {4, 8, 16, 32, 64, 128};
  cfg.trials = 100;
  cfg.seed = kAcceptanceSeed;
  cfg.threads = resolve_threads(0);
  RunOutcome out = run_lower_single(cfg);
  for (const std::string& line : out.check_log) rep.note(line);
  return out.pass;
}

// ---- criterion 3: block adds nothing at matched budget ----
bool criterion_lower_block(Reporter& rep) {
  ExperimentConfig cfg;
  cfg.experiment = "lower-block";
  cfg.n = 2049;
  cfg.eps = 0.04;
  cfg.q_spec = 31;
  cfg.r_grid = {64, 8};
  cfg.s_grid = {1, 8};
  cfg.trials = 100;
  cfg.seed = kAcceptanceSeed;
  cfg.threads = resolve_threads(0);
  RunOutcome out = run_lower_block(cfg);
  for (const std::string& line : out.check_log) rep.note(line);
  return out.pass;
}

// ---- criterion 4: upper bound at t* ----
bool criterion_upper(Reporter& rep) {
  bool ok = true;
  for (double p : {1.0, 2.0}) {
    for (double eps : {0.05, 0.1}) {
      ExperimentConfig cfg;
      cfg.experiment = "upper-schatten";
      cfg.p = p;
      cfg.eps = eps;
      cfg.trials = 100;
      cfg.seed = kAcceptanceSeed;
      cfg.threads = resolve_threads(0);
      RunOutcome out = run_upper_schatten(cfg);
      for (const std::string& line : out.check_log) rep.note(line);
      ok &= out.pass;
      // Reported query counts stay within 2 t* + 1.
      const int tstar = upper_schatten_tstar(p, eps);
      for (const CsvRow& row : out.rows) {
        if (row.statistic_name.rfind("queries_", 0) == 0) {
          if (row.statistic_value > 2.0 * tstar + 1.0) ok = false;
        }
      }
    }
  }
  return ok;
}

// ---- criterion 5: good-vector success floors ----
bool criterion_good_vector(Reporter& rep) {
  ExperimentConfig cfg;
  cfg.experiment = "good-vector";
  cfg.trials = 100;
  cfg.seed = kAcceptanceSeed;
  cfg.threads = resolve_threads(0);
  RunOutcome out = run_good_vector(cfg);
  for (const std::string& line : out.check_log) rep.note(line);
  return out.pass;
}

// ---- criterion 6: Pythagorean identities over 500 random instances ----
bool criterion_pythagorean(Reporter& rep) {
  RngStream rng(kAcceptanceSeed);
  const double ps[] = {1.0, 1.5, 2.0, 3.0, 4.0};
  bool ok = true;
  double worst_resid = 0.0, worst_slack = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    RngStream tr = rng.derived("pyth", static_cast<std::uint64_t>(trial));
    Matrix a = random_matrix(tr, 6, 4);
    Vector w4 = tr.gaussian_vector(4);
    normalize(w4);
    PythagoreanCheck pc = pythagorean_check(a, w4);
    worst_resid = std::max(worst_resid, pc.residual / pc.total_sq);
    if (pc.residual > 1e-9 * pc.total_sq) ok = false;

    Vector w6 = tr.gaussian_vector(6);
    normalize(w6);
    const double p = ps[trial % 5];
    SchattenPythagorean sp = schatten_pythagorean_check(a, w6, p);
    worst_slack = std::min(worst_slack, sp.slack / sp.lhs);
    if (sp.slack < -1e-9 * sp.lhs) ok = false;
  }
  check(rep, ok,
        "500 instances: worst relative residual " +
            std::to_string(worst_resid) + ", worst relative slack " +
            std::to_string(worst_slack));
  return ok;
}

// ---- criterion 7: lifting simulator ----
bool criterion_lifting(Reporter& rep) {
  ExperimentConfig cfg;
  cfg.experiment = "lift-sim";
  cfg.n = 32;
  cfg.q_grid = {4};
  cfg.trials = 2000;
  cfg.seed = kAcceptanceSeed;
  cfg.strategy = "power-method";
  cfg.threads = resolve_threads(0);
  RunOutcome out = run_lift_sim(cfg);
  for (const std::string& line : out.check_log) rep.note(line);
  return out.pass;
}

// ---- criterion 8: small-instance oracle equivalence ----
bool criterion_small_instances(Reporter& rep) {
  RngStream rng(kAcceptanceSeed);
  bool ok = true;
  for (std::size_t n = 4; n <= 12; ++n) {
    for (int rep_i = 0; rep_i < 5; ++rep_i) {
      RngStream tr = rng.derived("small", n * 100 + rep_i);
      Matrix m = random_symmetric(tr, n);
      SymmetricOperator a = SymmetricOperator::dense(m);
      dense::SymEig eig = dense::sym_eig(m);
      const bool tail_bigger =
          std::fabs(eig.values.back()) > std::fabs(eig.values.front());
      Vector top = eig.vectors.col(tail_bigger ? n - 1 : 0);

      // Single-vector solver, saturated subspace: exact top direction.
      CountingOracle oracle(a);
      RngStream solver = tr.derived("solver");
      auto res = krylov_iteration(oracle, static_cast<int>(n) + 2, solver);
      if (std::fabs(dot(res.v, top)) < 1.0 - 1e-6) ok = false;
      if (oracle.count() != n + 2) ok = false;
      const double err = lra_error(m, res.v, kInf);
      if (err > optimal_rank1_error(m, kInf) * (1.0 + 1e-6)) ok = false;

      // Block solver: supremum correlation agrees with a dense projection
      // onto the raw columns.
      CountingOracle oracle_b(a);
      RngStream solver_b = tr.derived("block");
      KrylovSubspace sub = block_krylov(
          oracle_b, static_cast<int>((n - 2) / 2), 2, solver_b);
      const double got = best_correlation(sub, top);
      dense::Svd cols = dense::svd(from_columns(sub.raw_columns));
      double proj_sq = 0.0;
      for (std::size_t c = 0; c < cols.sigma.size(); ++c) {
        if (cols.sigma[c] > 1e-9 * cols.sigma.front()) {
          const double d = dot(cols.u.col(c), top);
          proj_sq += d * d;
        }
      }
      if (std::fabs(got - std::sqrt(proj_sq)) > 1e-8) ok = false;

      // Rectangular solver on n x (n-1), saturated: v matches the top right
      // singular vector and ||A^T w|| = sigma_1.
      Matrix rect_m = random_matrix(tr, n, n - 1);
      RectOperator rect(rect_m);
      CountingOracle oracle_r(rect);
      RngStream solver_r = tr.derived("rect");
      auto rres = rectangular_krylov(oracle_r, static_cast<int>(n), solver_r);
      dense::Svd svd = dense::svd(rect_m);
      Vector top_right(n - 1);
      for (std::size_t j = 0; j < n - 1; ++j) top_right[j] = svd.vt(0, j);
      if (std::fabs(dot(rres.v, top_right)) < 1.0 - 1e-6) ok = false;
      if (std::fabs(norm(matvec_t(rect_m, rres.w)) - svd.sigma.front()) >
          1e-8 * svd.sigma.front()) {
        ok = false;
      }
    }
  }
  check(rep, ok, "n = 4..12, 5 seeds each: all solvers match dense SVD");
  return ok;
}

// ---- criterion 9: determinism ----
bool criterion_determinism(Reporter& rep) {
  bool ok = true;
  {
    ExperimentConfig cfg;
    cfg.experiment = "lower-single";
    cfg.n = 101;
    cfg.eps = 0.25;
    cfg.q_spec = 4;
    cfg.q_grid = {2, 8, 32};
    cfg.trials = 5;
    cfg.seed = kAcceptanceSeed;
    cfg.threads = 1;
    std::string first = csv_to_string(run_lower_single(cfg).rows);
    cfg.threads = 3;
    std::string second = csv_to_string(run_lower_single(cfg).rows);
    ok &= check(rep, first == second && !first.empty(),
                "lower-single rerun is byte-identical");
  }
  {
    ExperimentConfig cfg;
    cfg.experiment = "upper-schatten";
    cfg.p = 2.0;
    cfg.eps = 0.1;
    cfg.t_grid = {2};
    cfg.trials = 5;
    cfg.seed = kAcceptanceSeed + 1;
    cfg.threads = 1;
    std::string first = csv_to_string(run_upper_schatten(cfg).rows);
    std::string second = csv_to_string(run_upper_schatten(cfg).rows);
    ok &= check(rep, first == second, "upper-schatten rerun is byte-identical");
  }
  {
    ExperimentConfig cfg;
    cfg.experiment = "good-vector";
    cfg.trials = 20;
    cfg.seed = kAcceptanceSeed + 2;
    cfg.threads = 1;
    std::string first = csv_to_string(run_good_vector(cfg).rows);
    std::string second = csv_to_string(run_good_vector(cfg).rows);
    ok &= check(rep, first == second, "good-vector rerun is byte-identical");
  }
  return ok;
}

}  // namespace

int main(int, char** argv) {
  dense::ensure_reliable_blas(argv);

  struct Criterion {
    const char* name;
    std::function<bool(Reporter&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {"1 chebyshev suite", criterion_chebyshev},
      {"2 lower-bound shape (n=2049)", criterion_lower_single},
      {"3 block adds nothing at matched budget", criterion_lower_block},
      {"4 upper bound at t*", criterion_upper},
      {"5 good-vector success floors", criterion_good_vector},
      {"6 pythagorean identities", criterion_pythagorean},
      {"7 lifting simulator", criterion_lifting},
      {"8 small-instance oracle equivalence", criterion_small_instances},
      {"9 determinism", criterion_determinism},
  };

  Reporter rep;
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string error;
    try {
      ok = c.fn(rep);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %s (%.1f s)\n", ok ? "PASS" : "FAIL", c.name,
                secs);
    if (!error.empty()) std::printf("    exception: %s\n", error.c_str());
    rep.flush_details();
    if (!ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}
