// matvec-lab: experiment CLI for rank-1 low-rank approximation in the
// matrix-vector query model. Subcommands generate hard instances, sweep the
// Krylov solvers against them, and exercise the adaptive-query simulator;
// results land in CSV.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <fstream>

#include "mvlab/dense.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/experiments.hpp"
#include "mvlab/kernels.hpp"
#include "mvlab/operators.hpp"

namespace {

struct CliOptions {
  mvlab::ExperimentConfig cfg;
  std::string q_text, r_text, s_text, t_text;
  long long seed_raw = -1;
  int threads_flag = 0;
  std::string config_path;
};

void apply_common(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--config", opt.config_path,
                  "flat key=value config file (flags win)");
  sub->add_option("--n", opt.cfg.n, "problem dimension");
  sub->add_option("--eps", opt.cfg.eps, "accuracy / gap parameter");
  sub->add_option("--p", opt.cfg.p, "Schatten exponent");
  sub->add_option("--q-spec", opt.cfg.q_spec,
                  "hard-spectrum degree (number of extrema levels minus 1)");
  sub->add_option("--q", opt.q_text, "q grid: a:b:step or comma list");
  sub->add_option("--r", opt.r_text, "r grid: a:b:step or comma list");
  sub->add_option("--s", opt.s_text, "s grid: a:b:step or comma list");
  sub->add_option("--t", opt.t_text, "t grid: a:b:step or comma list");
  sub->add_option("--trials", opt.cfg.trials, "trials per configuration");
  sub->add_option("--seed", opt.seed_raw, "master seed (required)");
  sub->add_option("--out", opt.cfg.out_path, "CSV output path");
  sub->add_option("--threads", opt.threads_flag,
                  "worker threads (default: MATVEC_LAB_THREADS or 1)");
  sub->add_option("--strategy", opt.cfg.strategy,
                  "adaptive strategy (lift-sim)");
  sub->add_option("--case", opt.cfg.gv_case, "good-vector regime (1..4, 0=all)");
}

// Flat key=value config file; only keys the command line did not set are
// applied (flags win).
void apply_config_file(CLI::App* sub, CliOptions& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) {
    throw mvlab::ConfigError("cannot open config file: " + opt.config_path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw mvlab::ConfigError("bad config line " + std::to_string(lineno) +
                               " in " + opt.config_path);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (sub->count("--" + key) > 0) continue;  // flag wins
    try {
      if (key == "n") {
        opt.cfg.n = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "eps") {
        opt.cfg.eps = std::stod(value);
      } else if (key == "p") {
        opt.cfg.p = std::stod(value);
      } else if (key == "q-spec") {
        opt.cfg.q_spec = std::stoi(value);
      } else if (key == "q") {
        opt.q_text = value;
      } else if (key == "r") {
        opt.r_text = value;
      } else if (key == "s") {
        opt.s_text = value;
      } else if (key == "t") {
        opt.t_text = value;
      } else if (key == "trials") {
        opt.cfg.trials = std::stoi(value);
      } else if (key == "seed") {
        opt.seed_raw = std::stoll(value);
      } else if (key == "out") {
        opt.cfg.out_path = value;
      } else if (key == "threads") {
        opt.threads_flag = std::stoi(value);
      } else if (key == "strategy") {
        opt.cfg.strategy = value;
      } else if (key == "case") {
        opt.cfg.gv_case = std::stoi(value);
      } else {
        throw mvlab::ConfigError("unknown config key '" + key + "' in " +
                                 opt.config_path);
      }
    } catch (const std::invalid_argument&) {
      throw mvlab::ConfigError("bad value for '" + key + "' in " +
                               opt.config_path);
    } catch (const std::out_of_range&) {
      throw mvlab::ConfigError("bad value for '" + key + "' in " +
                               opt.config_path);
    }
  }
}

void finalize(CLI::App* sub, CliOptions& opt) {
  apply_config_file(sub, opt);
  if (opt.seed_raw >= 0) {
    opt.cfg.seed = static_cast<std::uint64_t>(opt.seed_raw);
  }
  opt.cfg.threads = mvlab::resolve_threads(opt.threads_flag);
  if (!opt.q_text.empty()) opt.cfg.q_grid = mvlab::parse_grid(opt.q_text);
  if (!opt.r_text.empty()) opt.cfg.r_grid = mvlab::parse_grid(opt.r_text);
  if (!opt.s_text.empty()) opt.cfg.s_grid = mvlab::parse_grid(opt.s_text);
  if (!opt.t_text.empty()) opt.cfg.t_grid = mvlab::parse_grid(opt.t_text);
}

void apply_defaults(const std::string& experiment,
                    mvlab::ExperimentConfig& cfg) {
  cfg.experiment = experiment;
  if (experiment == "lower-single") {
    if (cfg.n == 0) cfg.n = 2049;
    if (cfg.eps == 0.0) cfg.eps = 0.04;
    if (cfg.q_spec == 0) cfg.q_spec = 31;
    if (cfg.q_grid.empty()) cfg.q_grid = {4, 8, 16, 32, 64, 128};
    if (cfg.trials == 0) cfg.trials = 100;
  } else if (experiment == "lower-block") {
    if (cfg.n == 0) cfg.n = 2049;
    if (cfg.eps == 0.0) cfg.eps = 0.04;
    if (cfg.q_spec == 0) cfg.q_spec = 31;
    if (cfg.r_grid.empty()) cfg.r_grid = {64, 8};
    if (cfg.s_grid.empty()) cfg.s_grid = {1, 8};
    if (cfg.trials == 0) cfg.trials = 100;
  } else if (experiment == "upper-schatten") {
    if (cfg.eps == 0.0) cfg.eps = 0.05;
    if (cfg.t_grid.empty()) cfg.t_grid = {1, 2, 4, 8, 16};
    if (cfg.trials == 0) cfg.trials = 100;
  } else if (experiment == "good-vector") {
    if (cfg.trials == 0) cfg.trials = 100;
  } else if (experiment == "lift-sim") {
    if (cfg.n == 0) cfg.n = 32;
    if (cfg.q_grid.empty()) cfg.q_grid = {3};
    if (cfg.trials == 0) cfg.trials = 2000;
  } else if (experiment == "cheb-envelope") {
    if (cfg.trials == 0) cfg.trials = 1;
  }
}

void print_config(const mvlab::ExperimentConfig& cfg) {
  auto grid_str = [](const std::vector<int>& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(g[i]);
    }
    return s.empty() ? "-" : s;
  };
  std::printf("experiment=%s\n", cfg.experiment.c_str());
  std::printf("n=%zu\neps=%g\np=%g\nq_spec=%d\n", cfg.n, cfg.eps, cfg.p,
              cfg.q_spec);
  std::printf("q=%s\nr=%s\ns=%s\nt=%s\n", grid_str(cfg.q_grid).c_str(),
              grid_str(cfg.r_grid).c_str(), grid_str(cfg.s_grid).c_str(),
              grid_str(cfg.t_grid).c_str());
  std::printf("trials=%d\n", cfg.trials);
  if (cfg.seed) {
    std::printf("seed=%llu\n", static_cast<unsigned long long>(*cfg.seed));
  } else {
    std::printf("seed=(unset)\n");
  }
  std::printf("out=%s\nthreads=%d\nstrategy=%s\ncase=%d\n",
              cfg.out_path.c_str(), cfg.threads, cfg.strategy.c_str(),
              cfg.gv_case);
}

int run_experiment(CLI::App* sub, const std::string& name, CliOptions& opt) {
  finalize(sub, opt);
  apply_defaults(name, opt.cfg);
  mvlab::RunOutcome outcome;
  if (name == "lower-single") {
    outcome = mvlab::run_lower_single(opt.cfg);
  } else if (name == "lower-block") {
    outcome = mvlab::run_lower_block(opt.cfg);
  } else if (name == "upper-schatten") {
    outcome = mvlab::run_upper_schatten(opt.cfg);
  } else if (name == "good-vector") {
    outcome = mvlab::run_good_vector(opt.cfg);
  } else if (name == "lift-sim") {
    outcome = mvlab::run_lift_sim(opt.cfg);
  } else if (name == "cheb-envelope") {
    outcome = mvlab::run_cheb_envelope(opt.cfg);
  } else {
    throw mvlab::ConfigError("unknown experiment: " + name);
  }
  if (!opt.cfg.out_path.empty()) {
    mvlab::emit_csv(outcome.rows, opt.cfg.out_path);
    std::printf("wrote %zu rows to %s\n", outcome.rows.size(),
                opt.cfg.out_path.c_str());
  }
  for (const auto& [key, value] : outcome.aggregates) {
    std::printf("%s=%.12g\n", key.c_str(), value);
  }
  for (const std::string& line : outcome.check_log) {
    std::printf("%s\n", line.c_str());
  }
  std::printf("%s: %s\n", name.c_str(), outcome.pass ? "PASS" : "FAIL");
  return outcome.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  mvlab::dense::ensure_reliable_blas(argv);

  CLI::App app{"matvec-lab: low-rank approximation in the matrix-vector "
               "query model"};
  app.require_subcommand(1);

  CliOptions opt;
  const char* experiments[] = {"lower-single", "lower-block", "upper-schatten",
                               "good-vector", "lift-sim", "cheb-envelope"};
  for (const char* name : experiments) {
    CLI::App* sub = app.add_subcommand(name);
    apply_common(sub, opt);
  }
  CLI::App* gen = app.add_subcommand(
      "gen-instance", "write a hard-instance spectrum file");
  apply_common(gen, opt);
  CLI::App* show = app.add_subcommand("show-config",
                                      "print the effective configuration");
  apply_common(show, opt);
  show->add_option("--experiment", opt.cfg.experiment,
                   "experiment whose defaults to show");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const char* name : experiments) {
      if (app.got_subcommand(name)) {
        return run_experiment(app.get_subcommand(name), name, opt);
      }
    }
    if (app.got_subcommand("gen-instance")) {
      finalize(gen, opt);
      if (opt.cfg.n == 0 || opt.cfg.eps == 0.0 || opt.cfg.q_spec == 0) {
        throw mvlab::ConfigError(
            "gen-instance: --n, --eps and --q-spec are required");
      }
      if (opt.cfg.out_path.empty()) {
        throw mvlab::ConfigError("gen-instance: --out is required");
      }
      mvlab::SpectrumSpec spec =
          mvlab::hard_spectrum(opt.cfg.n, opt.cfg.eps, opt.cfg.q_spec);
      spec.save(opt.cfg.out_path);
      std::printf("wrote %zu distinct eigenvalues (dimension %zu) to %s\n",
                  spec.entries().size(), spec.dimension(),
                  opt.cfg.out_path.c_str());
      return 0;
    }
    if (app.got_subcommand("show-config")) {
      finalize(show, opt);
      if (!opt.cfg.experiment.empty()) {
        apply_defaults(opt.cfg.experiment, opt.cfg);
      }
      std::printf("kernel_backend=%s\n",
                  mvlab::kernels::backend_name(mvlab::kernels::active_backend())
                      .c_str());
      print_config(opt.cfg);
      return 0;
    }
  } catch (const mvlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mvlab::DivisibilityError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mvlab::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const mvlab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
