/**
 * @file bounds.hpp
 * @brief Norm-linearization coefficients and the certified pushforward
 *        bounds, for ambiguity balls and for known distributions.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>

#include "wprop/funcmodel.hpp"
#include "wprop/quantize.hpp"

namespace wprop {

/// Per-location pair satisfying ||f(x)-f(c_k)||^rho <= alpha ||x-c_k||^rho + beta
/// on its scope (globally or on the cell only).
struct LocCoefficient {
  double alpha = 0.0;
  double beta = 0.0;
  double pi = 0.0;
  bool uses_beta = false;  ///< selected as a type-(0, beta) location
};

/// All measures within rho-Wasserstein distance theta of the center.
struct AmbiguityBall {
  Distribution center;
  double theta = 0.0;
  int rho = 2;
};

struct BoundReport {
  double value = 0.0;
  double theta = 0.0;
  double theta_d = 0.0;
  double alpha_max = 0.0;      ///< max over locations kept on the alpha route
  double beta_mass = 0.0;      ///< sum of pi_k beta_k over swapped locations
  int rho = 2;
  std::string method;          ///< thm4 | thm6 | lipschitz | linear
  bool unbounded = false;
  std::vector<LocCoefficient> per_location;
};

/// Type-(i) coefficient: beta = sup over the scope of ||f(x)-f(c)||^rho,
/// from the componentwise output range (+inf when the range is unbounded).
double coeff_type_i(const FunctionModel& f, const Vec& c, const Region& scope, int rho);

/// Type-(ii) coefficient: alpha bounding sup ||f(x)-f(c)||^rho / ||x-c||^rho
/// on the scope via anchored relaxations; `subdivisions` = 0 falls back to
/// the slope bound (the scope's Lipschitz constant to the rho).
double coeff_type_ii(const FunctionModel& f, const Vec& c, const Region& scope, int rho,
                     int subdivisions = 64);

/// Least conservative ambiguity-set bound for a fixed quantization:
/// per-location (alpha, beta) pairs, sorted by alpha, greedily swapped to
/// beta terms; returns the minimum over the scan.
BoundReport algorithm1(const QuantizationOperator& q, const Distribution& p, double theta,
                       const FunctionModel& f, int rho);

/// Geometry-free core of algorithm1 for quantizations given only by their
/// locations, cell masses, and exact quantization error.
BoundReport algorithm1_at(const std::vector<Vec>& locations, const std::vector<double>& pis,
                          double theta, double theta_d, const FunctionModel& f, int rho,
                          const Region& domain);

/// Re-run the sort-and-scan for an existing coefficient set (e.g. another
/// ambiguity radius without recomputing relaxations).
BoundReport algorithm1_scan(std::vector<LocCoefficient> coeffs, double theta, double theta_d,
                            int rho);

/// Ambiguity-set bound (global-scope coefficients chosen by algorithm1).
BoundReport bound_thm4(const QuantizationOperator& q, const Distribution& p, double theta,
                       const FunctionModel& f, int rho);

/// No-ambiguity bound with local (per-cell) coefficients, each cell choosing
/// the cheaper of the type-(i) / type-(ii) contribution.
BoundReport bound_thm6(const QuantizationOperator& q, const Distribution& p,
                       const FunctionModel& f, int rho);

/// L_f (theta + theta_d).
double bound_lipschitz(double theta, double theta_d, double lipschitz);

nlohmann::json to_json(const BoundReport& r);

}  // namespace wprop
