/**
 * @file validate.hpp
 * @brief Independent oracles: exact discrete optimal transport, Monte-Carlo
 *        Wasserstein estimation, and adaptive quadrature for moments.
 */
#pragma once

#include <functional>

#include "wprop/measures.hpp"

namespace wprop {

struct TransportPlan {
  std::vector<int> source;
  std::vector<int> target;
  std::vector<double> mass;
  double total_cost = 0.0;  ///< sum of mass * ||x - y||^rho
};

/// Exact rho-Wasserstein distance between two discrete distributions via the
/// transport linear program (shortest augmenting paths with potentials).
/// Combined atom count is capped at 4000.
std::pair<double, TransportPlan> exact_wasserstein(const DiscreteDistribution& a,
                                                   const DiscreteDistribution& b, int rho);

/// Transportation LP for an arbitrary nonnegative cost matrix (row-major
/// |a| x |b|); returns the optimal cost and plan.
std::pair<double, TransportPlan> transport_lp(const std::vector<double>& cost,
                                              const std::vector<double>& a,
                                              const std::vector<double>& b);

/// Minimum-cost perfect matching between two equal-size point sets; returns
/// (sum of matched costs / n)^(1/rho).
double empirical_wasserstein(const std::vector<Vec>& xs, const std::vector<Vec>& ys, int rho);

using Sampler = std::function<std::vector<Vec>(int n, std::uint64_t seed)>;

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int repeats = 0;
};

/// Empirical Wasserstein between n-sample batches, averaged over repeats.
McEstimate mc_wasserstein(const Sampler& p, const Sampler& q, int n, int repeats, int rho,
                          std::uint64_t seed);
McEstimate mc_wasserstein(const Distribution& p, const Distribution& q, int n, int repeats,
                          int rho, std::uint64_t seed);

Sampler distribution_sampler(const Distribution& p);

/// Sampler for the pushforward f#p.
Sampler pushforward_sampler(const class FunctionModel& f, const Distribution& p);

/// Adaptive Gauss-Kronrod quadrature for  int_iv |x-c|^rho dP(x), generic
/// real rho >= 0. Semi-infinite Gaussian integrals are truncated at 12
/// standard deviations with the remainder charged to the error budget.
double quadrature_moment(const Component& comp, const Interval& iv, double center, double rho,
                         double tol = 1e-10);

}  // namespace wprop
