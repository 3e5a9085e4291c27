#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/operators.hpp"
#include "mvlab/rng.hpp"

namespace mvlab {

// Index pair (i, j) standing for the response A^i v_j.
using PowerQueryKey = std::pair<int, int>;  // (i, j)
using ResponseMap = std::map<PowerQueryKey, Vector>;

// H_k = {(i, j) : i + j <= k + 1, i >= 0, 1 <= j <= k}, in canonical order
// (ascending i+j, then ascending j).
std::vector<PowerQueryKey> index_set(int k);

// Responses over H_k extracted from a map, canonical order.
std::vector<std::pair<PowerQueryKey, Vector>> responses_over(
    const ResponseMap& all, int k);

// A deterministic adaptive algorithm in the extended oracle model: a rule
// mapping the responses over H_{k-1} to the k-th query direction. The
// protocol wrapper orthogonalizes and normalizes every proposal against the
// span of its inputs, so strategies may return any nonzero direction.
class AdaptiveStrategy {
 public:
  virtual ~AdaptiveStrategy() = default;
  virtual std::string name() const = 0;
  virtual Vector propose(
      int k, std::size_t n,
      const std::vector<std::pair<PowerQueryKey, Vector>>& responses) = 0;
};

// Registry: "power-method", "fixed-directions", "greedy-rayleigh". The seed
// fixes the strategy's internal constants, making it a deterministic
// algorithm.
std::unique_ptr<AdaptiveStrategy> make_strategy(const std::string& name,
                                                std::uint64_t seed);
std::vector<std::string> strategy_names();

// The protocol wrapper around a strategy proposal: orthogonalize against the
// span of the inputs (orthonormal `input_basis`), normalize, and fall back
// to a direction seeded by (strategy, k) when the proposal lies inside the
// span. One function serves the real protocol and the simulator: the wrapped
// strategy is the deterministic algorithm, so both sides must apply the
// identical rule.
Vector wrap_adaptive_query(const std::string& strategy_name, int k,
                           const Vector& raw,
                           const std::vector<Vector>& input_basis,
                           std::size_t n);

struct Transcript {
  std::vector<Vector> queries;  // v_1..v_K after orthogonalization
  ResponseMap responses;        // (i,j) -> A^i v_j over H_K
  std::uint64_t extended_queries = 0;  // matvecs charged in the extended model
};

// Executes the extended-oracle protocol: round k delivers every new response
// in H_k \ H_{k-1}, one matvec per new power application.
Transcript run_adaptive(AdaptiveStrategy& strategy, CountingOracle& oracle,
                        int K);

// Orthogonal matrix U with U^T x = x for every x in `fixed` and U^T y = z.
// y, z must be unit and orthogonal to span(fixed). The completion is a
// deterministic function of the arguments (basis extension seeded by hashing
// them), as the recursion requires.
Matrix make_uk_rotation(const std::vector<Vector>& fixed, const Vector& y,
                        const Vector& z);

// Block-Krylov data {A^i z_j : i + j <= max_sum} for i.i.d. Gaussian z_j,
// j = 1..K. max_sum = K suffices to build the simulator; emitting the full
// H_K transcript needs max_sum = K+1.
ResponseMap collect_krylov_data(CountingOracle& oracle, int K, int max_sum,
                                RngStream& rng);

struct SimulatorState {
  std::vector<Vector> v_tilde;  // Gaussian directions, successively orthogonal
  std::vector<Vector> v_sim;    // what the algorithm would have queried
  std::vector<Matrix> u_tilde;  // per-round rotations
  Matrix u_product;             // u_tilde[0] * ... * u_tilde[K-1]
  Transcript simulated;         // (U_1:K)^T A^i vtilde_j over H_K
};

// Reconstructs the adaptive algorithm's view from non-adaptive Krylov data.
// Rounds touch only data with i+j <= k; the H_K transcript additionally needs
// the i+j = K+1 layer, so emit_transcript = false allows truncated data.
SimulatorState simulate(AdaptiveStrategy& strategy,
                        const ResponseMap& krylov_data, int K, std::size_t n,
                        bool emit_transcript = true);

// (U_1:K)^T A (U_1:K) for a materialized dense A.
Matrix rotated_view(const Matrix& a_dense, const SimulatorState& state);

// Per-run invariants of the simulated sequences.
struct SimulatorInvariants {
  bool p1_reproducible;     // prefix data reproduces vtilde_k, U_k bit-for-bit
  bool p2_rotation;         // vtilde_j = U_{1:k} vsim_j for all j <= k
  double p2_max_residual;
  bool transcript_consistent;  // simulated responses match dense recompute
  double transcript_max_residual;
  bool orthogonal_queries;  // wrapped queries orthogonal to their inputs
  double query_max_overlap;
};

SimulatorInvariants verify_simulator_invariants(AdaptiveStrategy& strategy,
                                                const ResponseMap& krylov_data,
                                                const SimulatorState& state,
                                                const Matrix& a_dense, int K);

// Two-sample panel comparing the real adaptive protocol against the
// simulator on a fixed spectrum, fresh Haar rotations per trial.
struct KsPanel {
  struct Stat {
    std::string name;
    double ks_statistic;
    double p_value;
  };
  std::vector<Stat> stats;
  double min_p_value = 1.0;
  double alpha = 1e-3;      // family significance before correction
  double threshold = 0.0;   // Bonferroni-corrected per-stat threshold
  int trials = 0;
  bool pass = false;
};

KsPanel distributional_equivalence_test(const std::string& strategy_name,
                                        const SpectrumSpec& spec, int K,
                                        int trials, std::uint64_t seed,
                                        double significance = 1e-3);

}  // namespace mvlab
