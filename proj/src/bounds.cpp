#include "wprop/bounds.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>

namespace wprop {

double coeff_type_i(const FunctionModel& f, const Vec& c, const Region& scope, int rho) {
  const Region out = f.interval_bounds(scope);
  const Vec fc = f.evaluate(c);
  double beta = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isinf(out[i].lo) || std::isinf(out[i].hi)) return kInf;
    const double dev = std::max(std::abs(out[i].lo - fc[i]), std::abs(out[i].hi - fc[i]));
    beta += pow_rho(dev, rho);
  }
  return beta;
}

double coeff_type_ii(const FunctionModel& f, const Vec& c, const Region& scope, int rho,
                     int subdivisions) {
  const double gain = f.anchored_gain(scope, c, rho, subdivisions);
  return std::pow(gain, rho);
}

namespace {

Region full_domain(int d) { return Region(d); }

BoundReport scan_candidates(std::vector<LocCoefficient> coeffs, double theta, double theta_d,
                            int rho, const std::string& method);

BoundReport scan_candidates(std::vector<LocCoefficient> coeffs, double theta, double theta_d,
                            int rho, const std::string& method) {
  // Sort by alpha descending; ties keep larger beta last so cheap swaps come
  // first.
  std::vector<std::size_t> order(coeffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (coeffs[a].alpha != coeffs[b].alpha) return coeffs[a].alpha > coeffs[b].alpha;
    return coeffs[a].beta < coeffs[b].beta;
  });

  const double radius = theta + theta_d;
  const double radius_pow = std::pow(radius, rho);
  double alpha_max = 0.0;
  for (const auto& lc : coeffs) alpha_max = std::max(alpha_max, lc.alpha);

  double best = std::pow(alpha_max, 1.0 / rho) * radius;  // swap nothing
  std::size_t best_k = 0;
  double b_acc = 0.0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    const auto& lc = coeffs[order[k - 1]];
    if (lc.pi > 0.0) b_acc += lc.pi * lc.beta;  // zero-mass swaps are free
    if (!std::isfinite(b_acc)) break;           // infinite beta ends the scan
    const double next_alpha = (k < order.size()) ? coeffs[order[k]].alpha : 0.0;
    const double cand = std::pow(next_alpha * radius_pow + b_acc, 1.0 / rho);
    if (cand < best) {
      best = cand;
      best_k = k;
    }
  }

  BoundReport r;
  r.value = best;
  r.theta = theta;
  r.theta_d = theta_d;
  r.rho = rho;
  r.method = method;
  double beta_mass = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    coeffs[order[k]].uses_beta = (k < best_k);
    if (k < best_k) beta_mass += coeffs[order[k]].pi * coeffs[order[k]].beta;
  }
  r.alpha_max = (best_k < order.size()) ? coeffs[order[best_k]].alpha : 0.0;
  r.beta_mass = beta_mass;
  r.per_location = std::move(coeffs);
  r.unbounded = !std::isfinite(r.value);
  return r;
}

}  // namespace

BoundReport algorithm1_at(const std::vector<Vec>& locations, const std::vector<double>& pis,
                          double theta, double theta_d, const FunctionModel& f, int rho,
                          const Region& domain) {
  require(theta >= 0.0, "algorithm1: theta must be >= 0");
  require(locations.size() == pis.size(), "algorithm1: locations/masses mismatch");
  std::vector<LocCoefficient> coeffs(locations.size());
  for (std::size_t k = 0; k < locations.size(); ++k) {
    coeffs[k].alpha = coeff_type_ii(f, locations[k], domain, rho);
    coeffs[k].beta = coeff_type_i(f, locations[k], domain, rho);
    coeffs[k].pi = pis[k];
  }
  return scan_candidates(std::move(coeffs), theta, theta_d, rho, "thm4");
}

BoundReport algorithm1(const QuantizationOperator& q, const Distribution& p, double theta,
                       const FunctionModel& f, int rho) {
  const auto pis = cell_probabilities(q, p);
  const double td = theta_d(q, p, rho);
  // Zero-mass cells cannot contribute beta terms and their alpha would only
  // loosen alpha_max when their location sits in a steep region; keep them,
  // matching the operator as given.
  std::vector<Vec> locs(q.locations.begin(), q.locations.end());
  return algorithm1_at(locs, pis, theta, td, f, rho, full_domain(f.dim_in()));
}

BoundReport bound_thm4(const QuantizationOperator& q, const Distribution& p, double theta,
                       const FunctionModel& f, int rho) {
  return algorithm1(q, p, theta, f, rho);
}

namespace {

// Quantile box covering all but ~1e-9 of each axis marginal; used to peel
// negligible-mass shells off unbounded cells so a steep far-away region does
// not tax the whole cell moment.
Interval axis_core(const Component& comp, const Interval& iv) {
  const double z = 6.0;  // Phi(-6) ~ 1e-9
  if (const auto* g = std::get_if<GaussianComponent>(&comp)) {
    return Interval(std::max(iv.lo, g->mean - z * g->std), std::min(iv.hi, g->mean + z * g->std));
  }
  const auto& u = std::get<UniformComponent>(comp);
  return Interval(std::max(iv.lo, u.lo), std::min(iv.hi, u.hi));
}

double piece_contribution(const FunctionModel& f, const ProductDistribution& p,
                          const Region& piece, const Vec& c, int rho) {
  const double mass = p.region_probability(piece);
  const double mom = region_moment(p, piece, c, rho);
  if (mass <= 0.0 && mom <= 0.0) return 0.0;
  const double via_alpha = mom > 0.0 ? coeff_type_ii(f, c, piece, rho) * mom : 0.0;
  const double beta = coeff_type_i(f, c, piece, rho);
  const double via_beta = mass > 0.0 ? mass * beta : 0.0;
  return std::min(via_alpha, via_beta);
}

// min over (alpha m, pi beta), refined for unbounded cells by splitting off
// the negligible-mass shells (an onion cover of cell minus its core box).
double cell_contribution(const FunctionModel& f, const ProductDistribution& p, const Region& cell,
                         const Vec& c, double pi_k, double moment_k, int rho,
                         LocCoefficient& lc) {
  const double via_alpha = moment_k > 0.0 ? lc.alpha * moment_k : 0.0;
  const double via_beta = pi_k > 0.0 ? pi_k * lc.beta : 0.0;
  double best = std::min(via_alpha, via_beta);
  lc.uses_beta = via_beta < via_alpha;

  bool bounded = true;
  for (const auto& iv : cell) bounded = bounded && iv.bounded();
  if (bounded || pi_k <= 0.0) return best;

  const int d = static_cast<int>(cell.size());
  Region core(d);
  bool shrank = false;
  for (int m = 0; m < d; ++m) {
    core[m] = axis_core(p.component(m), cell[m]);
    if (core[m].lo > cell[m].lo || core[m].hi < cell[m].hi) shrank = true;
    if (core[m].lo >= core[m].hi) return best;  // cell lives in the far tail
  }
  if (!shrank) return best;

  double refined = piece_contribution(f, p, core, c, rho);
  for (int m = 0; m < d; ++m) {
    for (int side = 0; side < 2; ++side) {
      const Interval far = side == 0 ? Interval(cell[m].lo, core[m].lo)
                                     : Interval(core[m].hi, cell[m].hi);
      if (far.lo >= far.hi) continue;
      Region shell(d);
      for (int j = 0; j < d; ++j) shell[j] = j < m ? core[j] : cell[j];
      shell[m] = far;
      refined += piece_contribution(f, p, shell, c, rho);
    }
  }
  return std::min(best, refined);
}

}  // namespace

BoundReport bound_thm6(const QuantizationOperator& q, const Distribution& p,
                       const FunctionModel& f, int rho) {
  const auto pis = cell_probabilities(q, p);
  const auto moments = cell_moments(q, p, rho);
  BoundReport r;
  r.rho = rho;
  r.method = "thm6";
  r.theta = 0.0;
  r.theta_d = std::pow(std::accumulate(moments.begin(), moments.end(), 0.0), 1.0 / rho);
  r.per_location.resize(q.size());
  double total = 0.0;
  double alpha_max = 0.0;

  if (const auto* disc = std::get_if<DiscreteDistribution>(&p)) {
    // Finite support: the per-cell integrals are direct sums.
    for (long k = 0; k < q.size(); ++k) r.per_location[k].pi = pis[k];
    for (int i = 0; i < disc->size(); ++i) {
      const long k = q.partition.cell_of_point(disc->location(i));
      total += disc->weight(i) *
               norm_pow_rho(f.evaluate(disc->location(i)) - f.evaluate(q.locations[k]), rho);
    }
    r.value = std::pow(total, 1.0 / rho);
    r.unbounded = !std::isfinite(r.value);
    return r;
  }

  const auto& prod = std::get<ProductDistribution>(p);
  for (long k = 0; k < q.size(); ++k) {
    LocCoefficient& lc = r.per_location[k];
    lc.pi = pis[k];
    if (pis[k] <= 0.0 && moments[k] <= 0.0) continue;
    const Region cell = q.partition.cell_region(k);
    lc.alpha = coeff_type_ii(f, q.locations[k], cell, rho);
    lc.beta = coeff_type_i(f, q.locations[k], cell, rho);
    const double contrib =
        cell_contribution(f, prod, cell, q.locations[k], pis[k], moments[k], rho, lc);
    total += contrib;
    if (lc.uses_beta) r.beta_mass += contrib;
    else alpha_max = std::max(alpha_max, lc.alpha);
  }
  r.alpha_max = alpha_max;
  r.value = std::pow(total, 1.0 / rho);
  r.unbounded = !std::isfinite(r.value);
  return r;
}

BoundReport algorithm1_scan(std::vector<LocCoefficient> coeffs, double theta, double theta_d,
                            int rho) {
  return scan_candidates(std::move(coeffs), theta, theta_d, rho, "thm4");
}

double bound_lipschitz(double theta, double theta_d, double lipschitz) {
  require(theta >= 0.0 && theta_d >= 0.0 && lipschitz >= 0.0,
          "bound_lipschitz: arguments must be >= 0");
  return lipschitz * (theta + theta_d);
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& lc : r.per_location) {
    per.push_back({{"alpha", lc.alpha},
                   {"beta", std::isfinite(lc.beta) ? nlohmann::json(lc.beta) : nlohmann::json("inf")},
                   {"pi", lc.pi},
                   {"uses_beta", lc.uses_beta}});
  }
  return {{"value", r.value},        {"theta", r.theta},   {"theta_d", r.theta_d},
          {"alpha_max", r.alpha_max}, {"beta_mass", r.beta_mass},
          {"rho", r.rho},            {"method", r.method}, {"unbounded", r.unbounded},
          {"per_location", per}};
}

}  // namespace wprop
