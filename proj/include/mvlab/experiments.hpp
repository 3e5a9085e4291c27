#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/operators.hpp"

namespace mvlab {

// Flat experiment configuration: a key=value file plus CLI flag overrides
// (flags win). `seed` is mandatory everywhere; there is no ambient
// randomness.
struct ExperimentConfig {
  std::string experiment;
  std::size_t n = 0;
  double eps = 0.0;
  double p = 2.0;
  int q_spec = 0;           // hard-spectrum construction degree
  std::vector<int> q_grid;  // iteration grids, per experiment
  std::vector<int> r_grid;
  std::vector<int> s_grid;
  std::vector<int> t_grid;
  int trials = 0;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  int threads = 0;  // resolved: flag > MATVEC_LAB_THREADS > 1
  std::string strategy = "power-method";
  int gv_case = 0;  // good-vector regime filter, 0 = all

  std::uint64_t require_seed() const;
};

// Parse "a:b:step" or "a,b,c" into an integer grid.
std::vector<int> parse_grid(const std::string& text);

int resolve_threads(int flag_value);

// One CSV record. Optional fields print as empty cells.
struct CsvRow {
  std::string experiment;
  std::optional<long long> n;
  std::optional<double> eps;
  std::optional<double> p;
  std::optional<long long> q;
  std::optional<long long> r;
  std::optional<long long> s;
  std::optional<long long> t;
  std::optional<long long> trial;
  std::optional<std::uint64_t> seed;
  std::string statistic_name;
  double statistic_value = 0.0;
};

// Header + rows, reals at 12 significant digits, deterministic order (the
// order of `rows`). Errors carry the path.
void emit_csv(const std::vector<CsvRow>& rows, const std::string& path);
std::string csv_to_string(const std::vector<CsvRow>& rows);

// Experiment outcome: raw rows plus named aggregates and pass/fail checks.
struct RunOutcome {
  std::vector<CsvRow> rows;
  std::map<std::string, double> aggregates;
  std::vector<std::string> check_log;  // "PASS ..." / "FAIL ..." / "INFO ..."
  bool pass = true;
};

RunOutcome run_lower_single(const ExperimentConfig& cfg);
RunOutcome run_lower_block(const ExperimentConfig& cfg);
RunOutcome run_upper_schatten(const ExperimentConfig& cfg);
RunOutcome run_good_vector(const ExperimentConfig& cfg);
RunOutcome run_lift_sim(const ExperimentConfig& cfg);
RunOutcome run_cheb_envelope(const ExperimentConfig& cfg);

// The named diagonal test spectra driven by upper-schatten (singular values).
struct LibrarySpectrum {
  std::string name;
  Vector sigma;
};
const std::vector<LibrarySpectrum>& spectrum_library();

// t* = ceil(C * p * log(1/eps) * eps^(-1/3)) with the frozen constant.
int upper_schatten_tstar(double p, double eps);

}  // namespace mvlab
