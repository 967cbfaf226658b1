/**
 * @file experiments.hpp
 * @brief Experiment harness: benchmark registry, table and figure-data
 *        runners with deterministic seeds and CSV/JSON outputs.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>

#include "wprop/dynamics.hpp"
#include "wprop/validate.hpp"

namespace wprop {

/// Benchmark map paired with its reference distribution.
struct Benchmark {
  std::string name;
  FunctionModel f;
  ProductDistribution p;
};

/// The six benchmark functions with their reference measures.
std::vector<Benchmark> benchmark_suite();
Benchmark benchmark(const std::string& name);

struct ExperimentConfig {
  std::string id;                 ///< table1 | table2 | fig3 | fig4 | fig5 | fig6 | custom
  std::uint64_t seed = 2024;
  std::vector<long> budgets = {5, 10, 100, 1000};
  std::vector<double> thetas = {0.0, 0.01, 0.1, 1.0, 10.0, 100.0};
  int horizon = 10;
  int mc_samples = 500;   ///< per repeat
  int mc_repeats = 10;
  int rho = 2;
  std::string out_dir = ".";
};

ExperimentConfig config_from_json(const nlohmann::json& j);

struct ExperimentOutcome {
  bool sound = true;               ///< all embedded soundness assertions held
  std::vector<std::string> files;  ///< emitted artifacts
  std::vector<std::string> notes;
};

/// Per-step certified traces for one system: the empirical estimate, the
/// Lipschitz-coefficient recursion, and the optimized-coefficient recursion,
/// all sharing the same quantization sequence.
struct SystemTrace {
  std::vector<double> emp, emp_se, rmk1, thm4, theta_d;
  std::vector<long> support;
  std::vector<double> seconds;
  std::vector<DiscreteDistribution> states;
};

SystemTrace trace_system(const StochasticSystem& sys, int horizon, const ExperimentConfig& cfg);

/// Clamped diagonal family and its reference Gaussian, as used by table1.
struct TableFamily {
  FunctionModel f;
  ProductDistribution p;
};
TableFamily clamped_family(int d);

/// Clamped diagonal family: no-ambiguity bounds, optimized vs uniform grids,
/// for d in {1,..,4} and the budget ladder. CSV columns: d, N, optimized, uniform.
ExperimentOutcome run_table1(const ExperimentConfig& cfg);

/// Multi-step traces for the nn3d / mountain_car / quadruple_tank systems.
/// CSV columns: system, t, emp, emp_stderr, rmk1, thm4, theta_d, support, seconds.
ExperimentOutcome run_table2(const ExperimentConfig& cfg);

/// Figure data: bound vs budget (fig3/fig4), bound vs theta with the
/// Lipschitz gap (fig5), per-step atom and sample dumps (fig6).
ExperimentOutcome run_fig_data(const ExperimentConfig& cfg);

ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace wprop
