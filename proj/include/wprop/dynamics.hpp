/**
 * @file dynamics.hpp
 * @brief Stochastic-system definitions, the one-step and multi-step discrete
 *        propagation scheme, and the certified error recursion.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>

#include "wprop/bounds.hpp"

namespace wprop {

/// f(x, w) = state_map(x) + noise_map(w); lets the state and noise
/// pushforward errors be bounded independently.
struct SeparableForm {
  FunctionModel state_map;  ///< d -> d
  FunctionModel noise_map;  ///< q -> d
};

struct StochasticSystem {
  FunctionModel dynamics;  ///< (d + q) -> d, state coordinates first
  ProductDistribution noise;
  Distribution initial;
  std::optional<SeparableForm> separable;

  int state_dim() const { return dynamics.dim_out(); }
  int noise_dim() const { return noise.dimension(); }
};

struct StepConfig {
  int k_state = 100;       ///< state support budget per step
  int m_noise = 25;        ///< noise atom budget
  int rho = 2;
  int doubling_cap = 16;   ///< max budget multiplier when chasing epsilon
  int restarts = 10;       ///< k-means restarts in the state reduction
  std::uint64_t seed = 0;
  double theta0 = 0.0;     ///< initial ambiguity radius (ambiguous start)
};

struct StepRecord {
  int t = 0;
  double theta = 0.0;    ///< certified W_rho bound after the step
  double theta_d = 0.0;  ///< joint quantization error spent in the step
  long support = 0;
  double seconds = 0.0;
};

struct ErrorTrace {
  std::vector<StepRecord> steps;
  bool diverged = false;
};

struct StepResult {
  DiscreteDistribution next_state;
  BoundReport report;
  double theta_next = 0.0;
  double theta_d = 0.0;
  double theta_reduce = 0.0;  ///< state-reduction part of theta_d
  double seconds = 0.0;
};

struct PropagationResult {
  ErrorTrace trace;
  std::vector<DiscreteDistribution> states;  ///< state distribution after step t (index t-1)
  double epsilon = 0.0;                      ///< quantization target actually used
};

/// Quantized noise plus the one-off noise pushforward bound; reused across
/// steps since the noise law is time-invariant.
struct NoiseCache {
  QuantizationOperator quantizer;
  DiscreteDistribution atoms;
  double theta_omega = 0.0;  ///< W_rho(P_w, quantized P_w)
  double term_bound = 0.0;   ///< bound on W_rho(s#P_w, s#quantized), separable systems
};

NoiseCache build_noise_cache(const StochasticSystem& sys, int m_noise, int rho);

/// One scheme step: quantize the state-noise joint, push the atoms through
/// the dynamics exactly, and certify the new radius (no-ambiguity bound when
/// theta_t = 0 and the state is exact, ambiguity bound otherwise).
StepResult propagate_step(const StochasticSystem& sys, const DiscreteDistribution& state_hat,
                          double theta_t, const StepConfig& cfg, const NoiseCache& noise);

/// First step from a continuous initial law: quantize the exact joint and
/// certify with local per-cell coefficients (ambiguity bound when theta0 > 0).
StepResult propagate_step_initial(const StochasticSystem& sys,
                                  const ProductDistribution& initial, const StepConfig& cfg,
                                  const NoiseCache& noise);

/// Run the scheme for T steps, doubling quantization budgets until the
/// per-step quantization error meets epsilon (epsilon <= 0: adopt the first
/// step's achieved error). Throws if the budget cap cannot reach epsilon.
PropagationResult propagate_horizon(const StochasticSystem& sys, int horizon, double epsilon,
                                    const StepConfig& cfg);

/// theta_{t+1} = (alpha_t (theta_t + epsilon)^rho + beta_terms_t)^(1/rho);
/// diverged when the sequence crosses 1e30.
struct RecursionResult {
  std::vector<double> theta;  ///< theta_1 ... theta_{T+1}
  bool diverged = false;
};
RecursionResult error_recursion(const std::vector<double>& alpha_max_seq,
                                const std::vector<double>& beta_terms_seq, double theta_1,
                                double epsilon, int rho);

/// Limiting error L/(1-L) epsilon for contractive dynamics (L < 1).
double fixed_point_bound(double lipschitz, double epsilon);

/// Remark-style split for separable dynamics: the two pushforward errors add.
double separable_step_bound(const StochasticSystem& sys, double state_part, double noise_part);

/// Ambiguous initial condition and noise: first step runs the ambiguity
/// bound with radius theta_0 + theta_omega.
double ambiguous_start(double theta_0, double theta_omega);

/// n Monte-Carlo samples of the true state at time t (i.i.d. noise per step).
std::vector<Vec> simulate_true_state(const StochasticSystem& sys, int t, int n,
                                     std::uint64_t seed);

/// Named systems: "mountain_car", "dubins_car", "quadruple_tank", "nn3d".
StochasticSystem builtin_system(const std::string& name);

StochasticSystem system_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StochasticSystem& sys);

}  // namespace wprop
