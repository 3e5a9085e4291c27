#include <doctest.h>

#include <cmath>

#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/linalg.hpp"
#include "mvlab/qr.hpp"
#include "mvlab/rng.hpp"

using namespace mvlab;

namespace {

Matrix random_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("matmul and gram match naive loops") {
  RngStream rng(11);
  Matrix a = random_matrix(rng, 7, 5);
  Matrix b = random_matrix(rng, 5, 9);
  Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      double ref = 0.0;
      for (std::size_t k = 0; k < 5; ++k) ref += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
  Matrix g = gram(a);
  Matrix g_ref = matmul(a.transposed(), a);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(g(i, j) == doctest::Approx(g_ref(i, j)).epsilon(1e-13));
    }
  }
}

TEST_CASE("householder qr produces an orthonormal basis spanning the input") {
  RngStream rng(21);
  std::vector<Vector> cols;
  for (int j = 0; j < 12; ++j) cols.push_back(rng.gaussian_vector(50));
  QrBasis qr = householder_qr(cols);
  REQUIRE(qr.rank() == 12);
  for (std::size_t i = 0; i < qr.rank(); ++i) {
    for (std::size_t j = i; j < qr.rank(); ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      CHECK(std::fabs(dot(qr.q[i], qr.q[j]) - expect) < 1e-13);
    }
  }
  // Span: every input column reconstructs from the basis.
  for (const Vector& c : cols) {
    Vector resid = orthogonal_residual(qr.q, c);
    CHECK(norm(resid) < 1e-10 * norm(c));
  }
  // R factor: cols[kept[j]] = sum_i q_i R(i, j).
  for (std::size_t j = 0; j < qr.rank(); ++j) {
    Vector rebuilt(50, 0.0);
    for (std::size_t i = 0; i <= j; ++i) {
      axpy(qr.r_upper(i, j), qr.q[i], rebuilt);
    }
    axpy(-1.0, cols[qr.kept[j]], rebuilt);
    CHECK(norm(rebuilt) < 1e-12 * norm(cols[qr.kept[j]]));
  }
  // inverse_r is a right inverse of the kept R block.
  Matrix w = qr.inverse_r(qr.rank());
  for (std::size_t i = 0; i < qr.rank(); ++i) {
    for (std::size_t j = 0; j < qr.rank(); ++j) {
      double prod = 0.0;
      for (std::size_t k = 0; k < qr.rank(); ++k) {
        prod += qr.r_upper(i, k) * w(k, j);
      }
      CHECK(std::fabs(prod - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("householder qr drops dependent columns and keeps prefix ranks") {
  RngStream rng(22);
  Vector a = rng.gaussian_vector(20);
  Vector b = rng.gaussian_vector(20);
  Vector a2 = scaled(a, 2.0);
  Vector combo = a;
  axpy(-0.5, b, combo);
  std::vector<Vector> cols{a, a2, b, combo, rng.gaussian_vector(20)};
  QrBasis qr = householder_qr(cols);
  CHECK(qr.rank() == 3);
  CHECK(qr.kept == std::vector<std::size_t>{0, 2, 4});
  CHECK(qr.prefix_rank(1) == 1);
  CHECK(qr.prefix_rank(2) == 1);
  CHECK(qr.prefix_rank(3) == 2);
  CHECK(qr.prefix_rank(5) == 3);
}

TEST_CASE("householder qr of all-zero columns has rank zero") {
  std::vector<Vector> cols{Vector(8, 0.0), Vector(8, 0.0)};
  QrBasis qr = householder_qr(cols);
  CHECK(qr.rank() == 0);
}

TEST_CASE("dense wrappers: svd, sym_eig, qr against known cases") {
  // Diagonal known case.
  Matrix d(3, 3, 0.0);
  d(0, 0) = 3.0;
  d(1, 1) = -2.0;
  d(2, 2) = 1.0;
  Vector sv = dense::singular_values(d);
  CHECK(sv[0] == doctest::Approx(3.0));
  CHECK(sv[1] == doctest::Approx(2.0));
  CHECK(sv[2] == doctest::Approx(1.0));

  dense::SymEig eig = dense::sym_eig(d);
  CHECK(eig.values[0] == doctest::Approx(3.0));
  CHECK(eig.values[2] == doctest::Approx(-2.0));
  CHECK(std::fabs(eig.vectors(0, 0)) == doctest::Approx(1.0));

  // Random reconstruction checks at a size where blocked LAPACK paths are
  // active (guards against the broken-kernel failure mode the startup
  // self-check exists for).
  RngStream rng(31);
  Matrix a = random_matrix(rng, 260, 40);
  dense::Svd svd = dense::svd(a);
  Matrix us(260, 40);
  for (std::size_t i = 0; i < 260; ++i) {
    for (std::size_t j = 0; j < 40; ++j) us(i, j) = svd.u(i, j) * svd.sigma[j];
  }
  Matrix rebuilt = matmul(us, svd.vt);
  double worst = 0.0;
  for (std::size_t i = 0; i < 260; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      worst = std::max(worst, std::fabs(rebuilt(i, j) - a(i, j)));
    }
  }
  CHECK(worst < 1e-10);

  Matrix g = random_matrix(rng, 300, 300);
  Matrix q = dense::qr_orthonormal_sign_fixed(g);
  Matrix qtq = gram(q);
  for (std::size_t i = 0; i < 300; ++i) qtq(i, i) -= 1.0;
  CHECK(max_abs(qtq) < 1e-12);

  // Symmetric eigendecomposition reconstructs at n = 300.
  Matrix s(300, 300);
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = rng.gaussian();
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  dense::SymEig se = dense::sym_eig(s);
  // Check A v = lambda v for a few eigenpairs.
  for (std::size_t idx : {0ul, 150ul, 299ul}) {
    Vector v = se.vectors.col(idx);
    Vector av = matvec(s, v);
    axpy(-se.values[idx], v, av);
    CHECK(norm(av) < 1e-10 * (std::fabs(se.values[idx]) + 1.0));
  }
}
