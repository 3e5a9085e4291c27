#include <doctest.h>

#include <cmath>
#include <vector>

#include "mvlab/kernels.hpp"
#include "mvlab/rng.hpp"

namespace k = mvlab::kernels;

namespace {

// Long-double reference, independent of every backend.
long double ref_dot(const std::vector<double>& x,
                    const std::vector<double>& y) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += static_cast<long double>(x[i]) * y[i];
  }
  return acc;
}

std::vector<double> random_vec(mvlab::RngStream& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

struct BackendGuard {
  ~BackendGuard() { k::reset_backend(); }
};

std::vector<k::Backend> available_backends() {
  std::vector<k::Backend> out{k::Backend::scalar};
  if (k::backend_available(k::Backend::avx2)) out.push_back(k::Backend::avx2);
  if (k::backend_available(k::Backend::neon)) out.push_back(k::Backend::neon);
  return out;
}

}  // namespace

TEST_CASE("kernel backends agree with the long-double reference") {
  BackendGuard guard;
  mvlab::RngStream rng(1234);
  for (std::size_t n : {1ul, 2ul, 3ul, 4ul, 7ul, 8ul, 15ul, 16ul, 17ul, 64ul,
                        100ul, 1023ul}) {
    std::vector<double> x = random_vec(rng, n);
    std::vector<double> y = random_vec(rng, n);
    const double dot_ref = static_cast<double>(ref_dot(x, y));
    const double tol =
        1e-13 * static_cast<double>(n + 1) * (std::fabs(dot_ref) + 1.0);
    for (k::Backend b : available_backends()) {
      k::set_backend(b);
      CAPTURE(k::backend_name(b));
      CAPTURE(n);
      CHECK(std::fabs(k::dot(x.data(), y.data(), n) - dot_ref) <= tol);
      CHECK(std::fabs(k::nrm2sq(x.data(), n) -
                      static_cast<double>(ref_dot(x, x))) <= tol * 10);

      std::vector<double> ya = y;
      k::axpy(0.37, x.data(), ya.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(ya[i] == doctest::Approx(y[i] + 0.37 * x[i]).epsilon(1e-14));
      }

      std::vector<double> xs = x;
      k::scal(-1.5, xs.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(xs[i] == -1.5 * x[i]);

      std::vector<double> prod(n);
      k::mul_ew(x.data(), y.data(), prod.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(prod[i] == x[i] * y[i]);
    }
  }
}

TEST_CASE("gemv variants agree across backends") {
  BackendGuard guard;
  mvlab::RngStream rng(77);
  for (auto [rows, cols] :
       {std::pair<std::size_t, std::size_t>{3, 5},
        std::pair<std::size_t, std::size_t>{8, 8},
        std::pair<std::size_t, std::size_t>{17, 31},
        std::pair<std::size_t, std::size_t>{64, 63},
        std::pair<std::size_t, std::size_t>{129, 200}}) {
    std::vector<double> a = random_vec(rng, rows * cols);
    std::vector<double> x = random_vec(rng, cols);
    std::vector<double> xt = random_vec(rng, rows);

    std::vector<double> y_ref(rows), yt_ref(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < cols; ++j) acc += a[i * cols + j] * x[j];
      y_ref[i] = static_cast<double>(acc);
    }
    for (std::size_t j = 0; j < cols; ++j) {
      long double acc = 0.0L;
      for (std::size_t i = 0; i < rows; ++i) acc += a[i * cols + j] * xt[i];
      yt_ref[j] = static_cast<double>(acc);
    }

    for (k::Backend b : available_backends()) {
      k::set_backend(b);
      CAPTURE(k::backend_name(b));
      std::vector<double> y(rows), yt(cols);
      k::gemv(a.data(), rows, cols, x.data(), y.data());
      k::gemv_t(a.data(), rows, cols, xt.data(), yt.data());
      for (std::size_t i = 0; i < rows; ++i) {
        CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-12));
      }
      for (std::size_t j = 0; j < cols; ++j) {
        CHECK(yt[j] == doctest::Approx(yt_ref[j]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("backend dispatch") {
  BackendGuard guard;
  CHECK(k::backend_available(k::Backend::scalar));
  k::set_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  k::reset_backend();
  CHECK(k::backend_available(k::active_backend()));
}
