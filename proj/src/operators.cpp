#include "mvlab/operators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/kernels.hpp"

namespace mvlab {
namespace {

constexpr double kDenseSymmetryTol = 1e-12;
constexpr double kFactoredOrthoTol = 1e-10;

}  // namespace

SpectrumSpec::SpectrumSpec(std::vector<SpectrumEntry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error("SpectrumSpec: empty");
  double prev = entries_.front().value;
  for (const SpectrumEntry& e : entries_) {
    if (e.multiplicity < 1) throw Error("SpectrumSpec: zero multiplicity");
    if (!std::isfinite(e.value)) throw Error("SpectrumSpec: non-finite value");
    if (e.value > prev) {
      throw Error("SpectrumSpec: values must be nonincreasing");
    }
    prev = e.value;
    dimension_ += e.multiplicity;
  }
  if (dimension_ < 2) throw Error("SpectrumSpec: dimension must be >= 2");
}

Vector SpectrumSpec::expand() const {
  Vector d;
  d.reserve(dimension_);
  for (const SpectrumEntry& e : entries_) {
    d.insert(d.end(), e.multiplicity, e.value);
  }
  return d;
}

double SpectrumSpec::second_singular_value() const {
  Vector mags;
  mags.reserve(dimension_);
  for (const SpectrumEntry& e : entries_) {
    mags.insert(mags.end(), e.multiplicity, std::fabs(e.value));
  }
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  return mags[1];
}

SpectrumSpec SpectrumSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file: " + path);
  std::vector<SpectrumEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double value = 0.0;
    char comma = 0;
    long long mult = 0;
    if (!(ls >> value >> comma >> mult) || comma != ',' || mult < 1) {
      throw IoError("bad spectrum line " + std::to_string(lineno) + " in " +
                    path);
    }
    entries.push_back({value, static_cast<std::size_t>(mult)});
  }
  return SpectrumSpec(std::move(entries));
}

void SpectrumSpec::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write spectrum file: " + path);
  char buf[64];
  for (const SpectrumEntry& e : entries_) {
    std::snprintf(buf, sizeof(buf), "%.17g,%zu\n", e.value, e.multiplicity);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

SymmetricOperator SymmetricOperator::dense(Matrix a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("SymmetricOperator::dense: not square");
  }
  const double defect = symmetry_defect(a);
  if (defect > kDenseSymmetryTol * std::max(1.0, max_abs(a))) {
    throw Error("SymmetricOperator::dense: matrix not symmetric");
  }
  SymmetricOperator op;
  op.factored_ = false;
  op.dim_ = a.rows();
  op.dense_ = std::move(a);
  return op;
}

SymmetricOperator SymmetricOperator::factored(Matrix u, Vector diag) {
  if (u.rows() != u.cols() || u.rows() != diag.size()) {
    throw DimensionMismatch("SymmetricOperator::factored: shape mismatch");
  }
  // Probe check of U^T U = I: cheap at every scale. Full checks live in the
  // test suite.
  RngStream probe_rng(0x0fac70e3dull);
  for (int probe = 0; probe < 3; ++probe) {
    Vector x = probe_rng.gaussian_vector(u.rows());
    const double xn = norm(x);
    Vector ux = matvec(u, x);
    Vector back = matvec_t(u, ux);
    axpy(-1.0, x, back);
    if (norm(back) > kFactoredOrthoTol * std::max(1.0, xn) * u.rows()) {
      throw NotOrthogonal("SymmetricOperator::factored: U not orthonormal");
    }
  }
  SymmetricOperator op;
  op.factored_ = true;
  op.dim_ = u.rows();
  op.u_ = std::move(u);
  op.diag_ = std::move(diag);
  return op;
}

Vector SymmetricOperator::apply(const Vector& x) const {
  if (x.size() != dim_) throw DimensionMismatch("SymmetricOperator::apply");
  if (!factored_) return matvec(dense_, x);
  Vector t = matvec_t(u_, x);  // U^T x
  kernels::mul_ew(t.data(), diag_.data(), t.data(), t.size());
  return matvec(u_, t);
}

Matrix SymmetricOperator::to_dense() const {
  if (!factored_) return dense_;
  Matrix scaled_u = u_;  // rows scaled later via column scaling of U^T
  // U diag U^T: scale columns of U by diag, then multiply by U^T.
  Matrix ud(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) ud(i, j) = u_(i, j) * diag_[j];
  }
  return matmul(ud, u_.transposed());
}

const Matrix& SymmetricOperator::basis() const {
  if (!factored_) throw Error("SymmetricOperator::basis: dense form");
  return u_;
}

const Vector& SymmetricOperator::diagonal() const {
  if (!factored_) throw Error("SymmetricOperator::diagonal: dense form");
  return diag_;
}

RectOperator::RectOperator(Matrix a) : a_(std::move(a)) {
  if (a_.rows() == 0 || a_.cols() == 0) {
    throw DimensionMismatch("RectOperator: empty");
  }
  const double* p = a_.data();
  for (std::size_t i = 0; i < a_.rows() * a_.cols(); ++i) {
    if (!std::isfinite(p[i])) throw Error("RectOperator: non-finite entry");
  }
}

Vector RectOperator::apply(const Vector& x) const { return matvec(a_, x); }

Vector RectOperator::apply_t(const Vector& x) const { return matvec_t(a_, x); }

CountingOracle::CountingOracle(const SymmetricOperator& op,
                               std::optional<std::uint64_t> budget)
    : sym_(&op), rows_(op.dim()), cols_(op.dim()), budget_(budget) {}

CountingOracle::CountingOracle(const RectOperator& op,
                               std::optional<std::uint64_t> budget)
    : rect_(&op), rows_(op.rows()), cols_(op.cols()), budget_(budget) {}

void CountingOracle::charge() {
  if (budget_ && count_ >= *budget_) {
    throw BudgetExceeded("query budget exhausted at " +
                         std::to_string(*budget_));
  }
  ++count_;
}

Vector CountingOracle::apply(const Vector& x) {
  if (x.size() != cols_) throw DimensionMismatch("oracle apply: bad length");
  charge();
  return sym_ ? sym_->apply(x) : rect_->apply(x);
}

Vector CountingOracle::apply_t(const Vector& x) {
  if (x.size() != rows_) throw DimensionMismatch("oracle apply_t: bad length");
  charge();
  return sym_ ? sym_->apply(x) : rect_->apply_t(x);
}

Matrix haar_orthogonal(std::size_t n, RngStream& rng) {
  if (n < 1) throw Error("haar_orthogonal: n must be >= 1");
  Matrix g(n, n);
  double* p = g.data();
  for (std::size_t i = 0; i < n * n; ++i) p[i] = rng.gaussian();
  return dense::qr_orthonormal_sign_fixed(g);
}

SpectrumSpec hard_spectrum(std::size_t n, double eps, int q) {
  if (eps <= 0.0 || eps >= 0.5) throw Error("hard_spectrum: eps not in (0,0.5)");
  if (q < 1) throw Error("hard_spectrum: q must be positive");
  if (n < static_cast<std::size_t>(q) + 2) {
    throw Error("hard_spectrum: need n >= q + 2");
  }
  if ((n - 1) % static_cast<std::size_t>(q + 1) != 0) {
    throw DivisibilityError(
        "hard_spectrum: (n-1) not divisible by (q+1); nearest valid n is " +
        std::to_string(nearest_valid_n(n, q)));
  }
  const std::size_t k = (n - 1) / static_cast<std::size_t>(q + 1);
  std::vector<SpectrumEntry> entries;
  entries.reserve(static_cast<std::size_t>(q) + 2);
  entries.push_back({1.0 + 2.0 * eps, 1});
  for (int i = 0; i <= q; ++i) {
    entries.push_back({std::cos(i * std::numbers::pi / q), k});
  }
  return SpectrumSpec(std::move(entries));
}

std::size_t nearest_valid_n(std::size_t n, int q) {
  const std::size_t step = static_cast<std::size_t>(q + 1);
  std::size_t m = n;
  while ((m - 1) % step != 0) ++m;
  return m;
}

HardInstance build_hard_instance(const SpectrumSpec& spec, RngStream& rng) {
  const std::size_t n = spec.dimension();
  Matrix u = haar_orthogonal(n, rng);
  Vector u1 = u.col(0);
  HardInstance inst{SymmetricOperator::factored(std::move(u), spec.expand()),
                    spec, std::move(u1), spec.entries().front().value,
                    spec.second_singular_value()};
  return inst;
}

}  // namespace mvlab
