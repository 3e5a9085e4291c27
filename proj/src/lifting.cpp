#include "mvlab/lifting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/qr.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {
namespace {

constexpr double kOrthoTol = 1e-8;

std::vector<Vector> map_values(
    const std::vector<std::pair<PowerQueryKey, Vector>>& responses) {
  std::vector<Vector> v;
  v.reserve(responses.size());
  for (const auto& r : responses) v.push_back(r.second);
  return v;
}

std::uint64_t hash_doubles(std::uint64_t h, const Vector& v) {
  for (double x : v) {
    h = RngStream::mix(h, std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

}  // namespace

std::vector<PowerQueryKey> index_set(int k) {
  if (k < 1) throw Error("index_set: k must be positive");
  std::vector<PowerQueryKey> out;
  for (int sum = 1; sum <= k + 1; ++sum) {
    for (int j = 1; j <= std::min(k, sum); ++j) {
      const int i = sum - j;
      out.push_back({i, j});
    }
  }
  return out;
}

std::vector<std::pair<PowerQueryKey, Vector>> responses_over(
    const ResponseMap& all, int k) {
  std::vector<std::pair<PowerQueryKey, Vector>> out;
  for (const PowerQueryKey& key : index_set(k)) {
    auto it = all.find(key);
    if (it == all.end()) {
      throw Error("responses_over: missing response (" +
                  std::to_string(key.first) + "," + std::to_string(key.second) +
                  ")");
    }
    out.push_back({key, it->second});
  }
  return out;
}

// ---- strategies ----

namespace {

class PowerMethodStrategy final : public AdaptiveStrategy {
 public:
  explicit PowerMethodStrategy(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "power-method"; }
  Vector propose(
      int k, std::size_t n,
      const std::vector<std::pair<PowerQueryKey, Vector>>& responses) override {
    if (k == 1) {
      RngStream rng = RngStream(seed_).derived("power-method-v1");
      Vector v = rng.gaussian_vector(n);
      normalize(v);
      return v;
    }
    // Continue from A v_{k-1}.
    for (const auto& r : responses) {
      if (r.first == PowerQueryKey{1, k - 1}) return r.second;
    }
    throw Error("power-method: missing response (1, k-1)");
  }

 private:
  std::uint64_t seed_;
};

class FixedDirectionsStrategy final : public AdaptiveStrategy {
 public:
  explicit FixedDirectionsStrategy(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "fixed-directions"; }
  Vector propose(int k, std::size_t n,
                 const std::vector<std::pair<PowerQueryKey, Vector>>&) override {
    RngStream rng = RngStream(seed_).derived("fixed-directions",
                                             static_cast<std::uint64_t>(k));
    Vector v = rng.gaussian_vector(n);
    normalize(v);
    return v;
  }

 private:
  std::uint64_t seed_;
};

// Follows the response direction with the largest available Rayleigh
// quotient estimate <A r, r>/<r, r>, passed through an elementwise cube.
// Any linear functional of the responses lies inside their span and would be
// projected away by the orthogonality wrapper; the nonlinearity keeps this
// strategy genuinely response-dependent.
class GreedyRayleighStrategy final : public AdaptiveStrategy {
 public:
  explicit GreedyRayleighStrategy(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "greedy-rayleigh"; }
  Vector propose(
      int k, std::size_t n,
      const std::vector<std::pair<PowerQueryKey, Vector>>& responses) override {
    if (k == 1) {
      RngStream rng = RngStream(seed_).derived("greedy-v1");
      Vector v = rng.gaussian_vector(n);
      normalize(v);
      return v;
    }
    const Vector* best = nullptr;
    double best_score = -1.0;
    for (const auto& r : responses) {
      const PowerQueryKey up{r.first.first + 1, r.first.second};
      for (const auto& s : responses) {
        if (s.first == up) {
          const double denom = norm_sq(r.second);
          if (denom > 0.0) {
            const double score = std::fabs(dot(s.second, r.second)) / denom;
            if (score > best_score) {
              best_score = score;
              best = &s.second;
            }
          }
        }
      }
    }
    if (best == nullptr) {
      RngStream rng = RngStream(seed_).derived("greedy-fallback",
                                               static_cast<std::uint64_t>(k));
      Vector v = rng.gaussian_vector(n);
      normalize(v);
      return v;
    }
    Vector cube = *best;
    const double scale = max_abs(cube);
    if (scale > 0.0) {
      for (double& x : cube) {
        const double t = x / scale;
        x = t * t * t;
      }
    }
    normalize(cube);
    return cube;
  }

 private:
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<AdaptiveStrategy> make_strategy(const std::string& name,
                                                std::uint64_t seed) {
  if (name == "power-method") return std::make_unique<PowerMethodStrategy>(seed);
  if (name == "fixed-directions") {
    return std::make_unique<FixedDirectionsStrategy>(seed);
  }
  if (name == "greedy-rayleigh") {
    return std::make_unique<GreedyRayleighStrategy>(seed);
  }
  throw ConfigError("unknown adaptive strategy: " + name);
}

std::vector<std::string> strategy_names() {
  return {"power-method", "fixed-directions", "greedy-rayleigh"};
}

Vector wrap_adaptive_query(const std::string& strategy_name, int k,
                           const Vector& raw,
                           const std::vector<Vector>& input_basis,
                           std::size_t n) {
  RngStream fallback = RngStream(RngStream::hash_string(strategy_name))
                           .derived("query-fallback",
                                    static_cast<std::uint64_t>(k));
  Vector q = raw;
  for (int attempt = 0; attempt < 64; ++attempt) {
    // Two projection passes keep the result orthogonal to working precision.
    q = orthogonal_residual(input_basis, q);
    q = orthogonal_residual(input_basis, q);
    if (normalize(q) > 1e-10) return q;
    q = fallback.gaussian_vector(n);
  }
  throw RankCollapse("wrap_adaptive_query: could not leave the response span");
}

Transcript run_adaptive(AdaptiveStrategy& strategy, CountingOracle& oracle,
                        int K) {
  const std::size_t n = oracle.rows();
  if (K < 1) throw Error("run_adaptive: K must be positive");
  if (static_cast<std::size_t>(K) * static_cast<std::size_t>(K) >= n) {
    throw Error("run_adaptive: requires K^2 < n");
  }
  const std::uint64_t count_start = oracle.count();

  Transcript tr;
  for (int k = 1; k <= K; ++k) {
    std::vector<std::pair<PowerQueryKey, Vector>> inputs;
    if (k > 1) inputs = responses_over(tr.responses, k - 1);
    QrBasis input_basis = householder_qr(map_values(inputs));
    Vector raw = strategy.propose(k, n, inputs);
    Vector vk = wrap_adaptive_query(strategy.name(), k, raw, input_basis.q, n);
    tr.queries.push_back(vk);
    tr.responses[{0, k}] = std::move(vk);
    // New responses in H_k \ H_{k-1}: (k+1-j, j) for j = 1..k.
    for (int j = 1; j <= k; ++j) {
      const int i = k + 1 - j;
      const Vector& prev = tr.responses.at({i - 1, j});
      tr.responses[{i, j}] = oracle.apply(prev);
    }
  }
  tr.extended_queries = oracle.count() - count_start;
  return tr;
}

Matrix make_uk_rotation(const std::vector<Vector>& fixed, const Vector& y,
                        const Vector& z) {
  const std::size_t n = y.size();
  if (z.size() != n) throw DimensionMismatch("make_uk_rotation: y/z length");
  if (std::fabs(norm(y) - 1.0) > kOrthoTol ||
      std::fabs(norm(z) - 1.0) > kOrthoTol) {
    throw NotOrthogonal("make_uk_rotation: y and z must be unit vectors");
  }
  QrBasis fixed_basis = householder_qr(fixed);
  const std::size_t rank = fixed_basis.rank();
  if (rank + 2 > n) {
    throw NotOrthogonal("make_uk_rotation: complement too small");
  }
  for (const Vector& q : fixed_basis.q) {
    if (std::fabs(dot(q, y)) > kOrthoTol || std::fabs(dot(q, z)) > kOrthoTol) {
      throw NotOrthogonal("make_uk_rotation: y/z not orthogonal to fixed set");
    }
  }

  // Deterministic completion: the Gaussian fill is seeded by hashing the
  // arguments, making U a pure function of (fixed, y, z).
  std::uint64_t h = 0x756b726f74ULL;
  for (const Vector& f : fixed) h = hash_doubles(h, f);
  h = hash_doubles(h, y);
  h = hash_doubles(h, z);
  RngStream rng(h);

  auto complete = [&](const Vector& first) {
    std::vector<Vector> basis = fixed_basis.q;
    Vector f0 = orthogonal_residual(basis, first);
    normalize(f0);
    std::vector<Vector> comp{f0};
    std::vector<Vector> all = basis;
    all.push_back(f0);
    while (comp.size() + rank < n) {
      Vector g = rng.gaussian_vector(n);
      g = orthogonal_residual(all, g);
      g = orthogonal_residual(all, g);
      if (normalize(g) <= 1e-12) continue;
      comp.push_back(g);
      all.push_back(comp.back());
    }
    return comp;
  };

  std::vector<Vector> ybasis = complete(y);
  std::vector<Vector> zbasis = complete(z);

  // U = sum_f f f^T + sum_i y_i z_i^T: fixes span(fixed), sends z_i -> y_i,
  // so U^T y = z.
  Matrix u(n, n, 0.0);
  for (const Vector& f : fixed_basis.q) rank1_update(u, 1.0, f, f);
  for (std::size_t i = 0; i < ybasis.size(); ++i) {
    rank1_update(u, 1.0, ybasis[i], zbasis[i]);
  }
  return u;
}

ResponseMap collect_krylov_data(CountingOracle& oracle, int K, int max_sum,
                                RngStream& rng) {
  const std::size_t n = oracle.rows();
  ResponseMap data;
  for (int j = 1; j <= K; ++j) {
    Vector z = rng.gaussian_vector(n);
    data[{0, j}] = z;
    for (int i = 1; i + j <= max_sum; ++i) {
      z = oracle.apply(z);
      data[{i, j}] = z;
    }
  }
  return data;
}

namespace {

// vtilde_k as an explicit combination of the raw Krylov columns, so its
// A-powers resolve to data lookups.
struct TrackedVector {
  Vector value;
  std::vector<std::pair<PowerQueryKey, double>> coeffs;
};

Vector powered(const TrackedVector& tv, int power, const ResponseMap& data) {
  Vector out;
  for (const auto& [key, coef] : tv.coeffs) {
    const PowerQueryKey up{key.first + power, key.second};
    auto it = data.find(up);
    if (it == data.end()) {
      throw Error("simulate: krylov data missing power (" +
                  std::to_string(up.first) + "," + std::to_string(up.second) +
                  ")");
    }
    if (out.empty()) {
      out = scaled(it->second, coef);
    } else {
      axpy(coef, it->second, out);
    }
  }
  return out;
}

}  // namespace

SimulatorState simulate(AdaptiveStrategy& strategy,
                        const ResponseMap& krylov_data, int K, std::size_t n,
                        bool emit_transcript) {
  if (K < 1) throw Error("simulate: K must be positive");
  if (static_cast<std::size_t>(K) * static_cast<std::size_t>(K) >= n) {
    throw Error("simulate: requires K^2 < n");
  }

  SimulatorState st;
  std::vector<TrackedVector> vt(K);

  // vtilde_1 = z_1 / ||z_1||.
  {
    auto it = krylov_data.find({0, 1});
    if (it == krylov_data.end()) throw Error("simulate: missing z_1");
    Vector z1 = it->second;
    const double nz = normalize(z1);
    if (nz == 0.0) throw RankCollapse("simulate: z_1 = 0");
    vt[0].value = z1;
    vt[0].coeffs = {{{0, 1}, 1.0 / nz}};
  }

  Matrix product = Matrix::identity(n);
  for (int k = 1; k <= K; ++k) {
    // Simulated responses over H_{k-1}: x_{i,j} = product^T A^i vtilde_j.
    std::vector<std::pair<PowerQueryKey, Vector>> sim_inputs;
    if (k > 1) {
      for (const PowerQueryKey& key : index_set(k - 1)) {
        Vector r = powered(vt[static_cast<std::size_t>(key.second - 1)],
                           key.first, krylov_data);
        sim_inputs.push_back({key, matvec_t(product, r)});
      }
    }
    QrBasis input_basis = householder_qr(map_values(sim_inputs));

    // vtilde_k for k >= 2: component of z_k orthogonal to span {A^i z_j}
    // over H_{k-1}, with its expansion in the raw columns retained.
    if (k >= 2) {
      std::vector<Vector> span_cols;
      std::vector<PowerQueryKey> span_keys = index_set(k - 1);
      for (const PowerQueryKey& key : span_keys) {
        auto it = krylov_data.find(key);
        if (it == krylov_data.end()) throw Error("simulate: missing data");
        span_cols.push_back(it->second);
      }
      auto itz = krylov_data.find({0, k});
      if (itz == krylov_data.end()) throw Error("simulate: missing z_k");
      const Vector& zk = itz->second;

      QrBasis span_basis = householder_qr(span_cols);
      const std::size_t rank = span_basis.rank();
      Matrix w = span_basis.inverse_r(rank);
      Vector qtz(rank);
      for (std::size_t c = 0; c < rank; ++c) qtz[c] = dot(span_basis.q[c], zk);
      Vector resid = zk;
      for (std::size_t c = 0; c < rank; ++c) {
        axpy(-qtz[c], span_basis.q[c], resid);
      }
      const double rn = normalize(resid);
      if (rn <= 1e-12 * norm(zk)) {
        throw RankCollapse("simulate: z_k lies in the prior Krylov span");
      }
      TrackedVector& tvk = vt[static_cast<std::size_t>(k - 1)];
      tvk.value = resid;
      tvk.coeffs.push_back({{0, k}, 1.0 / rn});
      // Raw-column coefficients of the projection: raw coef vector = W *
      // (Q^T z_k) over kept columns.
      for (std::size_t j = 0; j < rank; ++j) {
        double coef = 0.0;
        for (std::size_t c = j; c < rank; ++c) coef += w(j, c) * qtz[c];
        tvk.coeffs.push_back(
            {span_keys[span_basis.kept[j]], -coef / rn});
      }
    }

    // vsim_k: what the algorithm queries when fed the simulated view.
    Vector raw = strategy.propose(k, n, sim_inputs);
    Vector vsim =
        wrap_adaptive_query(strategy.name(), k, raw, input_basis.q, n);

    // Rotation aligning the Krylov world with the simulated world.
    Vector y = matvec_t(product, vt[static_cast<std::size_t>(k - 1)].value);
    Matrix uk = make_uk_rotation(map_values(sim_inputs), y, vsim);

    st.v_sim.push_back(std::move(vsim));
    st.u_tilde.push_back(uk);
    product = matmul(product, uk);
  }

  for (int k = 0; k < K; ++k) {
    st.v_tilde.push_back(vt[static_cast<std::size_t>(k)].value);
  }
  st.u_product = std::move(product);

  // Simulated transcript over H_K (needs data through i+j <= K+1).
  if (emit_transcript) {
    st.simulated.queries = st.v_sim;
    for (const PowerQueryKey& key : index_set(K)) {
      Vector r = powered(vt[static_cast<std::size_t>(key.second - 1)],
                         key.first, krylov_data);
      st.simulated.responses[key] = matvec_t(st.u_product, r);
    }
  }
  return st;
}

Matrix rotated_view(const Matrix& a_dense, const SimulatorState& state) {
  Matrix au = matmul(a_dense, state.u_product);
  return matmul(state.u_product.transposed(), au);
}

SimulatorInvariants verify_simulator_invariants(AdaptiveStrategy& strategy,
                                                const ResponseMap& krylov_data,
                                                const SimulatorState& state,
                                                const Matrix& a_dense, int K) {
  SimulatorInvariants inv{};
  const std::size_t n = a_dense.rows();

  // P1: rerunning from data truncated to i+j <= k reproduces round k
  // bit-for-bit.
  inv.p1_reproducible = true;
  for (int k = 1; k <= K; ++k) {
    ResponseMap truncated;
    for (const auto& [key, value] : krylov_data) {
      if (key.first + key.second <= k) truncated[key] = value;
    }
    SimulatorState partial =
        simulate(strategy, truncated, k, n, /*emit_transcript=*/false);
    const std::size_t idx = static_cast<std::size_t>(k - 1);
    if (partial.v_tilde[idx] != state.v_tilde[idx] ||
        partial.v_sim[idx] != state.v_sim[idx]) {
      inv.p1_reproducible = false;
    }
    const Matrix& ua = partial.u_tilde[idx];
    const Matrix& ub = state.u_tilde[idx];
    for (std::size_t i = 0; i < n * n && inv.p1_reproducible; ++i) {
      if (ua.data()[i] != ub.data()[i]) inv.p1_reproducible = false;
    }
  }

  // P2: vtilde_j = U_{1:k} vsim_j for all j <= k <= K.
  inv.p2_max_residual = 0.0;
  Matrix running = Matrix::identity(n);
  for (int k = 1; k <= K; ++k) {
    running = matmul(running, state.u_tilde[static_cast<std::size_t>(k - 1)]);
    for (int j = 1; j <= k; ++j) {
      Vector lifted = matvec(running, state.v_sim[static_cast<std::size_t>(j - 1)]);
      axpy(-1.0, state.v_tilde[static_cast<std::size_t>(j - 1)], lifted);
      inv.p2_max_residual = std::max(inv.p2_max_residual, norm(lifted));
    }
  }
  inv.p2_rotation = inv.p2_max_residual <= 1e-8;

  // Simulated responses vs an independent dense recomputation of
  // (U_1:K)^T A^i vtilde_j.
  inv.transcript_max_residual = 0.0;
  for (const PowerQueryKey& key : index_set(K)) {
    Vector r = state.v_tilde[static_cast<std::size_t>(key.second - 1)];
    for (int p = 0; p < key.first; ++p) r = matvec(a_dense, r);
    Vector expect = matvec_t(state.u_product, r);
    Vector got = state.simulated.responses.at(key);
    axpy(-1.0, expect, got);
    inv.transcript_max_residual =
        std::max(inv.transcript_max_residual, norm(got));
  }
  inv.transcript_consistent = inv.transcript_max_residual <= 1e-8;

  // Wrapped queries must be orthogonal to their inputs.
  inv.query_max_overlap = 0.0;
  for (int k = 2; k <= K; ++k) {
    for (const PowerQueryKey& key : index_set(k - 1)) {
      Vector r = state.v_tilde[static_cast<std::size_t>(key.second - 1)];
      for (int p = 0; p < key.first; ++p) r = matvec(a_dense, r);
      const double nr = norm(r);
      if (nr > 0.0) {
        inv.query_max_overlap = std::max(
            inv.query_max_overlap,
            std::fabs(dot(r, state.v_tilde[static_cast<std::size_t>(k - 1)])) /
                nr);
      }
    }
  }
  inv.orthogonal_queries = inv.query_max_overlap <= 1e-8;
  return inv;
}

KsPanel distributional_equivalence_test(const std::string& strategy_name,
                                        const SpectrumSpec& spec, int K,
                                        int trials, std::uint64_t seed,
                                        double significance) {
  const std::size_t n = spec.dimension();
  const Vector diag = spec.expand();
  const std::uint64_t strategy_seed =
      RngStream::mix(seed, RngStream::hash_string(strategy_name));

  // Stat panel: every response norm with i >= 1, the per-round quadratic
  // forms v_k^T A v_k, and first-query cross inner products.
  auto stats_of = [&](const Transcript& tr) {
    std::vector<std::pair<std::string, double>> out;
    for (const PowerQueryKey& key : index_set(K)) {
      if (key.first >= 1) {
        out.push_back({"norm_" + std::to_string(key.first) + "_" +
                           std::to_string(key.second),
                       norm(tr.responses.at(key))});
        out.push_back({"q1dot_" + std::to_string(key.first) + "_" +
                           std::to_string(key.second),
                       dot(tr.queries[0], tr.responses.at(key))});
      }
    }
    for (int k = 1; k <= K; ++k) {
      out.push_back({"rayleigh_" + std::to_string(k),
                     dot(tr.queries[static_cast<std::size_t>(k - 1)],
                         tr.responses.at({1, k}))});
    }
    return out;
  };

  std::map<std::string, Vector> real_samples, sim_samples;
  RngStream root(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t t = static_cast<std::uint64_t>(trial);
    // Real side.
    {
      RngStream hrng = root.derived("real-haar", t);
      SymmetricOperator a =
          SymmetricOperator::factored(haar_orthogonal(n, hrng), diag);
      CountingOracle oracle(a);
      auto strategy = make_strategy(strategy_name, strategy_seed);
      Transcript tr = run_adaptive(*strategy, oracle, K);
      for (auto& [name, value] : stats_of(tr)) {
        real_samples[name].push_back(value);
      }
    }
    // Simulated side.
    {
      RngStream hrng = root.derived("sim-haar", t);
      SymmetricOperator a =
          SymmetricOperator::factored(haar_orthogonal(n, hrng), diag);
      CountingOracle oracle(a);
      RngStream zrng = root.derived("sim-z", t);
      ResponseMap data = collect_krylov_data(oracle, K, K + 1, zrng);
      auto strategy = make_strategy(strategy_name, strategy_seed);
      SimulatorState st = simulate(*strategy, data, K, n);
      for (auto& [name, value] : stats_of(st.simulated)) {
        sim_samples[name].push_back(value);
      }
    }
  }

  KsPanel panel;
  panel.alpha = significance;
  panel.trials = trials;
  for (auto& [name, rs] : real_samples) {
    const Vector& ss = sim_samples.at(name);
    // Statistics that are zero by construction on both sides (the
    // orthogonality wrapper forces e.g. <v_1, A v_2> = 0) carry only
    // rounding noise; distribution equality is vacuous there.
    double scale = 0.0;
    for (double v : rs) scale = std::max(scale, std::fabs(v));
    for (double v : ss) scale = std::max(scale, std::fabs(v));
    if (scale <= 1e-8) continue;
    stats::KsResult ks = stats::ks_two_sample(rs, ss);
    panel.stats.push_back({name, ks.statistic, ks.p_value});
    panel.min_p_value = std::min(panel.min_p_value, ks.p_value);
  }
  panel.threshold = significance / static_cast<double>(panel.stats.size());
  panel.pass = panel.min_p_value >= panel.threshold;
  return panel;
}

}  // namespace mvlab
