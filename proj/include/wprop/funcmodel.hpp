/**
 * @file funcmodel.hpp
 * @brief Composable piecewise-Lipschitz maps: exact evaluation, interval
 *        range bounds, linear relaxations, and induced-norm machinery.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

#include "wprop/measures.hpp"

namespace wprop {

enum class NodeKind { Input, Affine, Clamp, Sigmoid, Sin, Cos, Scale, Select, Sum, Concat, Const };

struct Node {
  NodeKind kind;
  std::vector<int> inputs;  ///< indices of earlier nodes
  int dim = 0;              ///< output dimension
  Mat A;                    ///< Affine
  Vec b;                    ///< Affine offset / Const value
  Vec lo, hi;               ///< Clamp bounds
  Vec scale;                ///< Scale factors
  std::vector<int> select;  ///< Select coordinate indices
};

/// DAG of primitive nodes over R^d -> R^q. Nodes are stored in topological
/// order; node 0 is the input, the last node is the output.
class FunctionModel {
 public:
  FunctionModel() = default;
  FunctionModel(int dim_in, std::vector<Node> nodes);

  int dim_in() const { return dim_in_; }
  int dim_out() const { return nodes_.back().dim; }
  const std::vector<Node>& nodes() const { return nodes_; }

  Vec evaluate(const Vec& x) const;

  /// Sound per-coordinate output enclosure over an axis-aligned region.
  Region interval_bounds(const Region& region) const;

  /// Sound upper bound on the Lipschitz constant under the L_rho norm.
  double global_lipschitz(int rho) const;

  /// Sound upper bound on sup_{x in region} ||f(x)-f(c)||^rho / ||x-c||^rho.
  /// `subdivisions` controls the resolution of the anchored chord search
  /// (0 falls back to the slope-range bound, i.e. the local Lipschitz value).
  double anchored_gain(const Region& region, const Vec& c, int rho,
                       int subdivisions = 64) const;

  // --- model composition helpers -------------------------------------------

  /// g(h(x)) where h = *this and g consumes h's output.
  static FunctionModel compose(const FunctionModel& g, const FunctionModel& h);

 private:
  int dim_in_ = 0;
  std::vector<Node> nodes_;
};

/// Affine lower/upper bounds on f(x) - f(anchor), maps taken in (x - anchor):
///   lower_mat (x-c) + lower_off  <=  f(x) - f(c)  <=  upper_mat (x-c) + upper_off.
struct LinearEnclosure {
  Mat lower_mat, upper_mat;
  Vec lower_off, upper_off;
  Region region;
  Vec anchor;
};

LinearEnclosure linear_enclosure(const FunctionModel& f, const Region& region, const Vec& anchor);

/// Induced operator norm: rho=2 -> largest singular value (power iteration),
/// rho=1 -> max absolute column sum.
double induced_norm(const Mat& A, int rho);

// --- model builders ---------------------------------------------------------

FunctionModel affine_model(const Mat& A, const Vec& b);
FunctionModel identity_model(int d);

/// Named benchmark maps: "sigmoid", "bounded_linear", "quadruple_tank",
/// "nn_layer", "mountain_car", "dubins_car".
FunctionModel builtin(const std::string& name);

/// Table-style clamped diagonal family: clamp(diag(coeffs) x, -bound, bound).
FunctionModel clamped_diagonal(const std::vector<double>& coeffs, double bound);

nlohmann::json to_json(const FunctionModel& f);
FunctionModel model_from_json(const nlohmann::json& j);

}  // namespace wprop
