#include "wprop/measures.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace wprop {

namespace {

// int_u^v (z - k) phi(z) dz  for the standard normal, endpoints may be +-inf.
double gauss_signed_piece(double u, double v, double k) {
  const double pu = std::isfinite(u) ? norm_pdf(u) : 0.0;
  const double pv = std::isfinite(v) ? norm_pdf(v) : 0.0;
  return (pu - pv) - k * (norm_cdf(v) - norm_cdf(u));
}

double gauss_trunc_moment(const GaussianComponent& g, const Interval& iv, double c, int rho) {
  const double a = std::isfinite(iv.lo) ? (iv.lo - g.mean) / g.std : -kInf;
  const double b = std::isfinite(iv.hi) ? (iv.hi - g.mean) / g.std : kInf;
  if (a >= b) return 0.0;
  const double k = (c - g.mean) / g.std;
  if (rho == 2) {
    const double z = norm_cdf(b) - norm_cdf(a);
    const double pa = std::isfinite(a) ? norm_pdf(a) : 0.0;
    const double pb = std::isfinite(b) ? norm_pdf(b) : 0.0;
    const double ta = std::isfinite(a) ? a * pa : 0.0;
    const double tb = std::isfinite(b) ? b * pb : 0.0;
    const double second = z + ta - tb;          // int z^2 phi
    const double first = pa - pb;               // int z phi
    const double m = second - 2.0 * k * first + k * k * z;
    return std::max(0.0, g.std * g.std * m);
  }
  // rho == 1: split |z - k| at k.
  double m = 0.0;
  if (k < b) m += gauss_signed_piece(std::max(a, k), b, k);
  if (a < k) m -= gauss_signed_piece(a, std::min(b, k), k);
  return std::max(0.0, g.std * m);
}

// Antiderivative of |x - c|^(rho) is sign(x-c)|x-c|^(rho+1)/(rho+1).
double abspow_antideriv(double x, double c, int rho) {
  const double d = x - c;
  const double a = std::abs(d);
  double v;
  if (rho == 1) v = a * a / 2.0;
  else v = a * a * a / 3.0;
  return d >= 0 ? v : -v;
}

double uniform_trunc_moment(const UniformComponent& u, const Interval& iv, double c, int rho) {
  const double lo = std::max(u.lo, iv.lo);
  const double hi = std::min(u.hi, iv.hi);
  if (lo >= hi) return 0.0;
  const double density = 1.0 / (u.hi - u.lo);
  return density * (abspow_antideriv(hi, c, rho) - abspow_antideriv(lo, c, rho));
}

}  // namespace

double component_mean(const Component& c) {
  return std::visit([](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) return v.mean;
    else return 0.5 * (v.lo + v.hi);
  }, c);
}

double component_variance(const Component& c) {
  return std::visit([](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) return v.std * v.std;
    else return (v.hi - v.lo) * (v.hi - v.lo) / 12.0;
  }, c);
}

double component_probability(const Component& c, const Interval& iv) {
  return std::visit([&iv](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) {
      const double a = std::isfinite(iv.lo) ? norm_cdf((iv.lo - v.mean) / v.std) : 0.0;
      const double b = std::isfinite(iv.hi) ? norm_cdf((iv.hi - v.mean) / v.std) : 1.0;
      return std::max(0.0, b - a);
    } else {
      const double lo = std::max(v.lo, iv.lo);
      const double hi = std::min(v.hi, iv.hi);
      return hi > lo ? (hi - lo) / (v.hi - v.lo) : 0.0;
    }
  }, c);
}

double component_quantile(const Component& c, double u) {
  require(u > 0.0 && u < 1.0, "component_quantile: u must be in (0,1)");
  return std::visit([u](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) return v.mean + v.std * norm_quantile(u);
    else return v.lo + u * (v.hi - v.lo);
  }, c);
}

double component_conditional_mean(const Component& c, const Interval& iv) {
  return std::visit([&iv](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) {
      const double a = std::isfinite(iv.lo) ? (iv.lo - v.mean) / v.std : -kInf;
      const double b = std::isfinite(iv.hi) ? (iv.hi - v.mean) / v.std : kInf;
      const double z = norm_cdf(b) - norm_cdf(a);
      require(z > 0.0, "conditional mean of a zero-probability interval");
      const double pa = std::isfinite(a) ? norm_pdf(a) : 0.0;
      const double pb = std::isfinite(b) ? norm_pdf(b) : 0.0;
      return v.mean + v.std * (pa - pb) / z;
    } else {
      const double lo = std::max(v.lo, iv.lo);
      const double hi = std::min(v.hi, iv.hi);
      require(hi > lo, "conditional mean of a zero-probability interval");
      return 0.5 * (lo + hi);
    }
  }, c);
}

double truncated_moment(const Component& comp, const Interval& iv, double center, int rho) {
  require(rho == 1 || rho == 2, "truncated_moment: rho must be 1 or 2");
  return std::visit([&](const auto& v) -> double {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, GaussianComponent>) return gauss_trunc_moment(v, iv, center, rho);
    else return uniform_trunc_moment(v, iv, center, rho);
  }, comp);
}

ProductDistribution::ProductDistribution(std::vector<Component> components)
    : components_(std::move(components)) {
  require(!components_.empty(), "ProductDistribution: no components");
  for (const auto& c : components_) {
    std::visit([](const auto& v) {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, GaussianComponent>) require(v.std > 0.0, "Gaussian std must be > 0");
      else require(v.lo < v.hi, "Uniform requires lo < hi");
    }, c);
  }
}

Vec ProductDistribution::mean() const {
  Vec m(dimension());
  for (int i = 0; i < dimension(); ++i) m[i] = component_mean(components_[i]);
  return m;
}

double ProductDistribution::region_probability(const Region& cell) const {
  require(static_cast<int>(cell.size()) == dimension(), "region_probability: dimension mismatch");
  double p = 1.0;
  for (int m = 0; m < dimension(); ++m) {
    p *= component_probability(components_[m], cell[m]);
    if (p == 0.0) break;
  }
  return p;
}

std::vector<Vec> ProductDistribution::sample(int n, std::uint64_t seed) const {
  require(n >= 1, "sample: n must be >= 1");
  CounterRng rng(seed);
  std::vector<Vec> out(n, Vec(dimension()));
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < dimension(); ++m)
      out[i][m] = component_quantile(components_[m], rng.next_unit());
  return out;
}

DiscreteDistribution::DiscreteDistribution(std::vector<Vec> locations, std::vector<double> weights)
    : locations_(std::move(locations)), weights_(std::move(weights)) {
  require(!locations_.empty(), "DiscreteDistribution: no atoms");
  require(locations_.size() == weights_.size(), "DiscreteDistribution: atom/weight count mismatch");
  double total = 0.0;
  const int d = static_cast<int>(locations_[0].size());
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    require(static_cast<int>(locations_[i].size()) == d, "DiscreteDistribution: mixed dimensions");
    require(weights_[i] >= 0.0, "DiscreteDistribution: negative weight");
    total += weights_[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, "DiscreteDistribution: weights must sum to 1");
}

Vec DiscreteDistribution::mean() const {
  Vec m = Vec::Zero(dimension());
  for (int i = 0; i < size(); ++i) m += weights_[i] * locations_[i];
  return m;
}

std::vector<Vec> DiscreteDistribution::sample(int n, std::uint64_t seed) const {
  require(n >= 1, "sample: n must be >= 1");
  CounterRng rng(seed);
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.next_unit();
    double acc = 0.0;
    int pick = size() - 1;
    for (int k = 0; k < size(); ++k) {
      acc += weights_[k];
      if (u <= acc) { pick = k; break; }
    }
    out.push_back(locations_[pick]);
  }
  return out;
}

DiscreteDistribution DiscreteDistribution::merged() const {
  std::vector<Vec> locs;
  std::vector<double> ws;
  for (int i = 0; i < size(); ++i) {
    bool found = false;
    for (std::size_t k = 0; k < locs.size(); ++k) {
      if (locs[k] == locations_[i]) { ws[k] += weights_[i]; found = true; break; }
    }
    if (!found) { locs.push_back(locations_[i]); ws.push_back(weights_[i]); }
  }
  return DiscreteDistribution(std::move(locs), std::move(ws));
}

int distribution_dimension(const Distribution& p) {
  return std::visit([](const auto& v) { return v.dimension(); }, p);
}

std::vector<Vec> sample(const Distribution& p, int n, std::uint64_t seed) {
  return std::visit([&](const auto& v) { return v.sample(n, seed); }, p);
}

nlohmann::json to_json(const ProductDistribution& p) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : p.components()) {
    std::visit([&comps](const auto& v) {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, GaussianComponent>)
        comps.push_back({{"type", "gaussian"}, {"mean", v.mean}, {"std", v.std}});
      else
        comps.push_back({{"type", "uniform"}, {"lo", v.lo}, {"hi", v.hi}});
    }, c);
  }
  return {{"kind", "product"}, {"components", comps}};
}

nlohmann::json to_json(const DiscreteDistribution& p) {
  nlohmann::json atoms = nlohmann::json::array();
  for (int i = 0; i < p.size(); ++i) {
    std::vector<double> loc(p.location(i).data(), p.location(i).data() + p.location(i).size());
    atoms.push_back({{"loc", loc}, {"w", p.weight(i)}});
  }
  return {{"kind", "discrete"}, {"atoms", atoms}};
}

nlohmann::json distribution_to_json(const Distribution& p) {
  return std::visit([](const auto& v) { return to_json(v); }, p);
}

Distribution distribution_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "product") {
    std::vector<Component> comps;
    for (const auto& c : j.at("components")) {
      const std::string type = c.at("type").get<std::string>();
      if (type == "gaussian")
        comps.push_back(GaussianComponent{c.at("mean").get<double>(), c.at("std").get<double>()});
      else if (type == "uniform")
        comps.push_back(UniformComponent{c.at("lo").get<double>(), c.at("hi").get<double>()});
      else
        throw std::invalid_argument("unknown component type: " + type);
    }
    return ProductDistribution(std::move(comps));
  }
  if (kind == "discrete") {
    std::vector<Vec> locs;
    std::vector<double> ws;
    for (const auto& a : j.at("atoms")) {
      const auto v = a.at("loc").get<std::vector<double>>();
      locs.push_back(Eigen::Map<const Vec>(v.data(), static_cast<int>(v.size())));
      ws.push_back(a.at("w").get<double>());
    }
    return DiscreteDistribution(std::move(locs), std::move(ws));
  }
  throw std::invalid_argument("unknown distribution kind: " + kind);
}

}  // namespace wprop
