/**
 * @file quantize.hpp
 * @brief Axis-aligned partitions, quantization operators, exact quantization
 *        error, optimized/uniform grid construction, and discrete reduction.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>

#include "wprop/measures.hpp"

namespace wprop {

/// Per-axis interval grid covering R^d. Axis m holds the finite inner
/// breakpoints; the outermost cells extend to +-infinity. Cells are indexed
/// row-major with the last axis fastest.
class BoxPartition {
 public:
  BoxPartition() = default;
  explicit BoxPartition(std::vector<std::vector<double>> inner_breaks);

  int dimension() const { return static_cast<int>(breaks_.size()); }
  int cells_on_axis(int m) const { return static_cast<int>(breaks_[m].size()) + 1; }
  long num_cells() const;

  Interval axis_interval(int m, int i) const;
  Region cell_region(long k) const;
  std::vector<int> cell_multi_index(long k) const;
  long cell_of_point(const Vec& x) const;

  const std::vector<std::vector<double>>& inner_breaks() const { return breaks_; }

 private:
  std::vector<std::vector<double>> breaks_;
};

/// Partition plus one location per cell; realizes the map sending every
/// point of cell k to location k.
struct QuantizationOperator {
  BoxPartition partition;
  std::vector<Vec> locations;

  int dimension() const { return partition.dimension(); }
  long size() const { return static_cast<long>(locations.size()); }

  Vec operator()(const Vec& x) const { return locations[partition.cell_of_point(x)]; }
};

/// Pushforward of p through the operator: one atom per cell, weight = cell
/// probability (or summed atom mass); zero-weight atoms dropped.
DiscreteDistribution apply(const QuantizationOperator& q, const Distribution& p);

/// Cell probabilities, in cell order (including zero entries).
std::vector<double> cell_probabilities(const QuantizationOperator& q, const Distribution& p);

/// Per-cell terms  int_{R_k} ||x - c_k||^rho dP; theta_d = (sum)^(1/rho).
std::vector<double> cell_moments(const QuantizationOperator& q, const Distribution& p, int rho);

/// int_region ||x - c||^rho dP for an axis-aligned box region.
double region_moment(const ProductDistribution& p, const Region& region, const Vec& c, int rho);

/// Exact quantization error theta_d for product or discrete p under L_rho.
double theta_d(const QuantizationOperator& q, const Distribution& p, int rho);

struct Lloyd1dResult {
  std::vector<double> breakpoints;  ///< inner boundaries (size n-1)
  std::vector<double> locations;    ///< size n
  double theta;                     ///< 1-D quantization error (rho = 2)
  int iterations;
};

/// Lloyd-Max scalar quantizer: alternate conditional means and midpoint
/// boundaries from a quantile initialization.
Lloyd1dResult lloyd_quantizer_1d(const Component& comp, int n, double tol = 1e-9,
                                 int max_iter = 500);

/// Tensor-product operator with per-axis counts chosen greedily (largest
/// decrease in total squared error, ties to the lowest axis) under the
/// constraint prod n_m <= budget; each axis quantized by lloyd_quantizer_1d.
QuantizationOperator optimized_grid(const ProductDistribution& p, long budget);

/// As optimized_grid but with the per-axis locations re-spaced uniformly over
/// their span (midpoint boundaries). Reference construction for comparisons.
QuantizationOperator uniform_spacing_grid(const ProductDistribution& p, long budget);

/// Per-axis cell count for the covering construction:
/// ceil(2^(1/rho) * lipschitz * d^(1/rho) * side / epsilon).
long uniform_cells_per_axis(double lipschitz, int d, double side, double epsilon, int rho);

/// Centered-hypercube covering grid guaranteeing  lipschitz * theta_d <= epsilon
/// for any map with Lipschitz constant <= lipschitz. Outer cells map to the
/// distribution mean.
QuantizationOperator uniform_grid(const ProductDistribution& p, double epsilon,
                                  double lipschitz, int rho);

struct ReduceResult {
  DiscreteDistribution reduced;
  double theta;                 ///< exact assignment cost^(1/2)
  std::vector<int> assignment;  ///< input atom -> reduced atom index
};

/// Weighted k-means (k-means++ seeding, 10 restarts) compressing p to at most
/// `budget` atoms; theta upper-bounds W_2(p, reduced).
ReduceResult reduce_discrete(const DiscreteDistribution& p, int budget, std::uint64_t seed,
                             int restarts = 10);

nlohmann::json to_json(const QuantizationOperator& q);
QuantizationOperator quantizer_from_json(const nlohmann::json& j);

}  // namespace wprop
