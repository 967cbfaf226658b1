/**
 * @file measures.hpp
 * @brief Continuous product measures, discrete measures, constrained
 *        rho-moments, region probabilities, and sampling.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <variant>
#include <vector>

#include "wprop/common.hpp"

namespace wprop {

/// Closed interval with extended-real endpoints; lo <= hi.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  Interval() = default;
  Interval(double l, double h) : lo(l), hi(h) { require(l <= h, "Interval: lo > hi"); }

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

using Region = std::vector<Interval>;

struct GaussianComponent {
  double mean;
  double std;
};

struct UniformComponent {
  double lo;
  double hi;
};

using Component = std::variant<GaussianComponent, UniformComponent>;

double component_mean(const Component& c);
double component_variance(const Component& c);

/// P(comp in iv).
double component_probability(const Component& c, const Interval& iv);

/// Quantile function; u in (0,1).
double component_quantile(const Component& c, double u);

/// E[X | X in iv]; iv must carry positive probability.
double component_conditional_mean(const Component& c, const Interval& iv);

/// Constrained rho-moment  int_iv |x - c|^rho dP(x)  in closed form.
/// rho must be 1 or 2; generic rho lives in validate::quadrature_moment.
double truncated_moment(const Component& comp, const Interval& iv, double center, int rho);

/// Continuous measure with independent per-axis components.
class ProductDistribution {
 public:
  ProductDistribution() = default;
  explicit ProductDistribution(std::vector<Component> components);

  int dimension() const { return static_cast<int>(components_.size()); }
  const Component& component(int m) const { return components_[m]; }
  const std::vector<Component>& components() const { return components_; }

  Vec mean() const;

  /// Product of per-axis interval probabilities; cell must have d intervals.
  double region_probability(const Region& cell) const;

  std::vector<Vec> sample(int n, std::uint64_t seed) const;

 private:
  std::vector<Component> components_;
};

/// Weighted atoms on R^d; weights sum to one.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  DiscreteDistribution(std::vector<Vec> locations, std::vector<double> weights);

  int dimension() const { return locations_.empty() ? 0 : static_cast<int>(locations_[0].size()); }
  int size() const { return static_cast<int>(locations_.size()); }
  const std::vector<Vec>& locations() const { return locations_; }
  const std::vector<double>& weights() const { return weights_; }
  const Vec& location(int i) const { return locations_[i]; }
  double weight(int i) const { return weights_[i]; }

  Vec mean() const;
  std::vector<Vec> sample(int n, std::uint64_t seed) const;

  /// Merge atoms at identical locations (exact match).
  DiscreteDistribution merged() const;

 private:
  std::vector<Vec> locations_;
  std::vector<double> weights_;
};

using Distribution = std::variant<ProductDistribution, DiscreteDistribution>;

int distribution_dimension(const Distribution& p);
std::vector<Vec> sample(const Distribution& p, int n, std::uint64_t seed);

nlohmann::json to_json(const ProductDistribution& p);
nlohmann::json to_json(const DiscreteDistribution& p);
nlohmann::json distribution_to_json(const Distribution& p);
Distribution distribution_from_json(const nlohmann::json& j);

}  // namespace wprop
