#include "wprop/quantize.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

namespace wprop {

BoxPartition::BoxPartition(std::vector<std::vector<double>> inner_breaks)
    : breaks_(std::move(inner_breaks)) {
  require(!breaks_.empty(), "BoxPartition: no axes");
  for (const auto& b : breaks_) {
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      require(b[i] < b[i + 1], "BoxPartition: breakpoints must be strictly increasing");
    for (double v : b) require(std::isfinite(v), "BoxPartition: inner breakpoints must be finite");
  }
}

long BoxPartition::num_cells() const {
  long n = 1;
  for (int m = 0; m < dimension(); ++m) n *= cells_on_axis(m);
  return n;
}

Interval BoxPartition::axis_interval(int m, int i) const {
  const auto& b = breaks_[m];
  const double lo = (i == 0) ? -kInf : b[i - 1];
  const double hi = (i == static_cast<int>(b.size())) ? kInf : b[i];
  return Interval(lo, hi);
}

std::vector<int> BoxPartition::cell_multi_index(long k) const {
  std::vector<int> idx(dimension());
  for (int m = dimension() - 1; m >= 0; --m) {
    const int n = cells_on_axis(m);
    idx[m] = static_cast<int>(k % n);
    k /= n;
  }
  return idx;
}

Region BoxPartition::cell_region(long k) const {
  const auto idx = cell_multi_index(k);
  Region r(dimension());
  for (int m = 0; m < dimension(); ++m) r[m] = axis_interval(m, idx[m]);
  return r;
}

long BoxPartition::cell_of_point(const Vec& x) const {
  require(static_cast<int>(x.size()) == dimension(), "cell_of_point: dimension mismatch");
  long k = 0;
  for (int m = 0; m < dimension(); ++m) {
    const auto& b = breaks_[m];
    // Cell i covers (b[i-1], b[i]]; the leftmost cell is (-inf, b[0]].
    const int i = static_cast<int>(std::lower_bound(b.begin(), b.end(), x[m]) - b.begin());
    k = k * cells_on_axis(m) + i;
  }
  return k;
}

namespace {

struct AxisTables {
  // prob[m][i] = P_m(axis interval i); built once per (operator, product) pair.
  std::vector<std::vector<double>> prob;
};

AxisTables axis_probabilities(const BoxPartition& part, const ProductDistribution& p) {
  AxisTables t;
  t.prob.resize(part.dimension());
  for (int m = 0; m < part.dimension(); ++m) {
    t.prob[m].resize(part.cells_on_axis(m));
    for (int i = 0; i < part.cells_on_axis(m); ++i)
      t.prob[m][i] = component_probability(p.component(m), part.axis_interval(m, i));
  }
  return t;
}

}  // namespace

std::vector<double> cell_probabilities(const QuantizationOperator& q, const Distribution& p) {
  require(distribution_dimension(p) == q.dimension(), "cell_probabilities: dimension mismatch");
  const long n = q.partition.num_cells();
  require(n == q.size(), "QuantizationOperator: |locations| != cell count");
  std::vector<double> w(n, 0.0);
  if (const auto* prod = std::get_if<ProductDistribution>(&p)) {
    const auto tables = axis_probabilities(q.partition, *prod);
    for (long k = 0; k < n; ++k) {
      const auto idx = q.partition.cell_multi_index(k);
      double pk = 1.0;
      for (int m = 0; m < q.dimension(); ++m) pk *= tables.prob[m][idx[m]];
      w[k] = pk;
    }
  } else {
    const auto& disc = std::get<DiscreteDistribution>(p);
    for (int i = 0; i < disc.size(); ++i) w[q.partition.cell_of_point(disc.location(i))] += disc.weight(i);
  }
  return w;
}

DiscreteDistribution apply(const QuantizationOperator& q, const Distribution& p) {
  const auto w = cell_probabilities(q, p);
  std::vector<Vec> locs;
  std::vector<double> ws;
  double total = 0.0;
  for (long k = 0; k < q.size(); ++k) {
    if (w[k] > 0.0) {
      locs.push_back(q.locations[k]);
      ws.push_back(w[k]);
      total += w[k];
    }
  }
  require(total > 0.0, "apply: distribution carries no mass on the partition");
  for (auto& v : ws) v /= total;  // guard against cdf round-off
  return DiscreteDistribution(std::move(locs), std::move(ws)).merged();
}

std::vector<double> cell_moments(const QuantizationOperator& q, const Distribution& p, int rho) {
  require(rho == 1 || rho == 2, "cell_moments: rho must be 1 or 2");
  require(distribution_dimension(p) == q.dimension(), "cell_moments: dimension mismatch");
  const long n = q.partition.num_cells();
  require(n == q.size(), "QuantizationOperator: |locations| != cell count");
  std::vector<double> out(n, 0.0);

  if (const auto* prod = std::get_if<ProductDistribution>(&p)) {
    const auto tables = axis_probabilities(q.partition, *prod);
    // Memoize per-axis constrained moments keyed by (interval index, center);
    // tensor-aligned locations make this O(sum_m n_m) distinct evaluations.
    std::vector<std::map<std::pair<int, double>, double>> memo(q.dimension());
    for (long k = 0; k < n; ++k) {
      const auto idx = q.partition.cell_multi_index(k);
      const Vec& c = q.locations[k];
      double cell = 0.0;
      for (int m = 0; m < q.dimension(); ++m) {
        double other = 1.0;
        for (int j = 0; j < q.dimension(); ++j)
          if (j != m) other *= tables.prob[j][idx[j]];
        if (other == 0.0) continue;
        const auto key = std::make_pair(idx[m], c[m]);
        auto it = memo[m].find(key);
        double mom;
        if (it != memo[m].end()) {
          mom = it->second;
        } else {
          mom = truncated_moment(prod->component(m), q.partition.axis_interval(m, idx[m]), c[m], rho);
          memo[m].emplace(key, mom);
        }
        cell += mom * other;
      }
      out[k] = cell;
    }
  } else {
    const auto& disc = std::get<DiscreteDistribution>(p);
    for (int i = 0; i < disc.size(); ++i) {
      const long k = q.partition.cell_of_point(disc.location(i));
      out[k] += disc.weight(i) * norm_pow_rho(disc.location(i) - q.locations[k], rho);
    }
  }
  return out;
}

double theta_d(const QuantizationOperator& q, const Distribution& p, int rho) {
  const auto m = cell_moments(q, p, rho);
  const double s = std::accumulate(m.begin(), m.end(), 0.0);
  return std::pow(s, 1.0 / rho);
}

double region_moment(const ProductDistribution& p, const Region& region, const Vec& c, int rho) {
  require(static_cast<int>(region.size()) == p.dimension(), "region_moment: dimension mismatch");
  double total = 0.0;
  for (int m = 0; m < p.dimension(); ++m) {
    double other = 1.0;
    for (int j = 0; j < p.dimension(); ++j)
      if (j != m) other *= component_probability(p.component(j), region[j]);
    if (other == 0.0) continue;
    total += other * truncated_moment(p.component(m), region[m], c[m], rho);
  }
  return total;
}

Lloyd1dResult lloyd_quantizer_1d(const Component& comp, int n, double tol, int max_iter) {
  require(n >= 1, "lloyd_quantizer_1d: n must be >= 1");
  Lloyd1dResult r;
  r.locations.resize(n);
  if (n == 1) {
    r.locations[0] = component_mean(comp);
    r.theta = std::sqrt(truncated_moment(comp, Interval(), r.locations[0], 2));
    r.iterations = 0;
    return r;
  }
  for (int k = 0; k < n; ++k) r.locations[k] = component_quantile(comp, (k + 0.5) / n);

  auto boundaries = [&]() {
    std::vector<double> b(n - 1);
    for (int k = 0; k + 1 < n; ++k) b[k] = 0.5 * (r.locations[k] + r.locations[k + 1]);
    return b;
  };
  auto cell = [&](const std::vector<double>& b, int k) {
    return Interval(k == 0 ? -kInf : b[k - 1], k == n - 1 ? kInf : b[k]);
  };

  double prev = kInf;
  int it = 0;
  std::vector<double> b = boundaries();
  for (; it < max_iter; ++it) {
    for (int k = 0; k < n; ++k) {
      const Interval iv = cell(b, k);
      if (component_probability(comp, iv) > 0.0)
        r.locations[k] = component_conditional_mean(comp, iv);
    }
    b = boundaries();
    double mse = 0.0;
    for (int k = 0; k < n; ++k) mse += truncated_moment(comp, cell(b, k), r.locations[k], 2);
    const double theta = std::sqrt(mse);
    if (std::abs(prev - theta) < tol) { prev = theta; break; }
    prev = theta;
  }
  r.breakpoints = b;
  r.theta = prev;
  r.iterations = it;
  return r;
}

namespace {

// Greedy per-axis budget allocation on 1-D squared quantization errors.
std::vector<int> greedy_allocation(const ProductDistribution& p, long budget,
                                   std::vector<std::vector<double>>& mse_cache) {
  const int d = p.dimension();
  std::vector<int> n(d, 1);
  mse_cache.assign(d, {});
  auto mse = [&](int m, int levels) {
    auto& cache = mse_cache[m];
    while (static_cast<int>(cache.size()) < levels) {
      const int next = static_cast<int>(cache.size()) + 1;
      const auto r = lloyd_quantizer_1d(p.component(m), next);
      cache.push_back(r.theta * r.theta);
    }
    return cache[levels - 1];
  };
  if (d == 1) { n[0] = static_cast<int>(budget); return n; }

  while (true) {
    long prod = 1;
    for (int m = 0; m < d; ++m) prod *= n[m];
    int best = -1;
    double best_gain = 0.0;
    for (int m = 0; m < d; ++m) {
      if (prod / n[m] * (n[m] + 1) > budget) continue;
      const double gain = mse(m, n[m]) - mse(m, n[m] + 1);
      if (best < 0 || gain > best_gain) { best = m; best_gain = gain; }
    }
    if (best < 0 || best_gain <= 0.0) break;
    ++n[best];
  }
  for (int m = 0; m < d; ++m) mse(m, n[m]);
  return n;
}

QuantizationOperator tensor_operator(const std::vector<std::vector<double>>& axis_breaks,
                                     const std::vector<std::vector<double>>& axis_locs) {
  const int d = static_cast<int>(axis_breaks.size());
  BoxPartition part(axis_breaks);
  const long n = part.num_cells();
  std::vector<Vec> locs(n, Vec(d));
  for (long k = 0; k < n; ++k) {
    const auto idx = part.cell_multi_index(k);
    for (int m = 0; m < d; ++m) locs[k][m] = axis_locs[m][idx[m]];
  }
  return QuantizationOperator{std::move(part), std::move(locs)};
}

}  // namespace

QuantizationOperator optimized_grid(const ProductDistribution& p, long budget) {
  require(budget >= 1, "optimized_grid: budget must be >= 1");
  std::vector<std::vector<double>> cache;
  const auto n = greedy_allocation(p, budget, cache);
  std::vector<std::vector<double>> breaks(p.dimension()), locs(p.dimension());
  for (int m = 0; m < p.dimension(); ++m) {
    const auto r = lloyd_quantizer_1d(p.component(m), n[m]);
    breaks[m] = r.breakpoints;
    locs[m] = r.locations;
  }
  return tensor_operator(breaks, locs);
}

QuantizationOperator uniform_spacing_grid(const ProductDistribution& p, long budget) {
  require(budget >= 1, "uniform_spacing_grid: budget must be >= 1");
  const int d = p.dimension();
  // Equal per-axis counts (a plain grid), equally re-spaced over the span of
  // the same-size per-axis quantizer.
  int n = std::max(1, static_cast<int>(std::floor(std::pow(double(budget) + 1e-9, 1.0 / d))));
  while (std::pow(double(n + 1), d) <= double(budget) + 1e-9) ++n;
  std::vector<std::vector<double>> breaks(d), locs(d);
  for (int m = 0; m < d; ++m) {
    const auto r = lloyd_quantizer_1d(p.component(m), n);
    locs[m].resize(n);
    if (n == 1) {
      locs[m][0] = r.locations[0];
    } else {
      const double lo = r.locations.front(), hi = r.locations.back();
      for (int k = 0; k < n; ++k) locs[m][k] = lo + (hi - lo) * k / (n - 1);
    }
    breaks[m].resize(n - 1);
    for (int k = 0; k + 1 < n; ++k) breaks[m][k] = 0.5 * (locs[m][k] + locs[m][k + 1]);
  }
  return tensor_operator(breaks, locs);
}

long uniform_cells_per_axis(double lipschitz, int d, double side, double epsilon, int rho) {
  const double v = std::pow(2.0, 1.0 / rho) * lipschitz * std::pow(double(d), 1.0 / rho) * side / epsilon;
  return std::max(1L, static_cast<long>(std::ceil(v - 1e-12)));
}

QuantizationOperator uniform_grid(const ProductDistribution& p, double epsilon,
                                  double lipschitz, int rho) {
  require(epsilon > 0.0, "uniform_grid: epsilon must be > 0");
  require(lipschitz > 0.0, "uniform_grid: lipschitz must be > 0");
  require(rho == 1 || rho == 2, "uniform_grid: rho must be 1 or 2");
  const int d = p.dimension();
  const Vec c = p.mean();
  const double target = std::pow(epsilon, rho) / (2.0 * std::pow(lipschitz, rho));

  // Tail rho-moment outside the centered cube of half-side h.
  double total = 0.0;
  for (int m = 0; m < d; ++m) total += truncated_moment(p.component(m), Interval(), c[m], rho);
  auto tail = [&](double h) {
    Region box(d);
    for (int m = 0; m < d; ++m) box[m] = Interval(c[m] - h, c[m] + h);
    return std::max(0.0, total - region_moment(p, box, c, rho));
  };

  std::vector<std::vector<double>> breaks(d), locs(d);
  if (tail(0.0) <= target) {
    // One cell already meets the bound.
    for (int m = 0; m < d; ++m) locs[m] = {c[m]};
    return tensor_operator(breaks, locs);
  }

  double lo = 0.0, hi = 1.0;
  while (tail(hi) > target) {
    hi *= 2.0;
    require(hi < 1e12, "uniform_grid: tail moment does not decay");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) <= target ? hi : lo) = mid;
  }
  const double h = hi;

  const long n = uniform_cells_per_axis(lipschitz, d, 2.0 * h, epsilon, rho);
  for (int m = 0; m < d; ++m) {
    breaks[m].resize(n + 1);
    for (long i = 0; i <= n; ++i) breaks[m][i] = c[m] - h + 2.0 * h * i / n;
    locs[m].resize(n + 2);
    locs[m][0] = c[m];      // outer shell
    locs[m][n + 1] = c[m];  // outer shell
    for (long i = 0; i < n; ++i) locs[m][i + 1] = c[m] - h + 2.0 * h * (i + 0.5) / n;
  }
  // Any cell touching a shell maps to the mean, realizing the single
  // unbounded outer region.
  BoxPartition part(breaks);
  const long n_cells = part.num_cells();
  std::vector<Vec> cell_locs(n_cells, Vec(d));
  for (long k = 0; k < n_cells; ++k) {
    const auto idx = part.cell_multi_index(k);
    bool outer = false;
    for (int m = 0; m < d; ++m)
      if (idx[m] == 0 || idx[m] == part.cells_on_axis(m) - 1) outer = true;
    for (int m = 0; m < d; ++m) cell_locs[k][m] = outer ? c[m] : locs[m][idx[m]];
  }
  return QuantizationOperator{std::move(part), std::move(cell_locs)};
}

namespace {

double sq_dist(const Vec& a, const Vec& b) { return (a - b).squaredNorm(); }

struct KmRun {
  std::vector<Vec> centers;
  std::vector<int> assign;
  double cost;
};

KmRun kmeans_once(const DiscreteDistribution& p, int k, CounterRng rng) {
  const int n = p.size();
  std::vector<Vec> centers;
  centers.reserve(k);
  // k-means++ seeding on weighted atoms.
  {
    double u = rng.next_unit();
    double acc = 0.0;
    int first = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += p.weight(i);
      if (u <= acc) { first = i; break; }
    }
    centers.push_back(p.location(first));
  }
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = kInf;
      for (const auto& cc : centers) best = std::min(best, sq_dist(p.location(i), cc));
      d2[i] = p.weight(i) * best;
      total += d2[i];
    }
    if (total <= 0.0) break;  // all atoms covered exactly
    double u = rng.next_unit() * total;
    int pick = n - 1;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += d2[i];
      if (u <= acc) { pick = i; break; }
    }
    centers.push_back(p.location(pick));
  }

  const int kk = static_cast<int>(centers.size());
  std::vector<int> assign(n, 0);
  double cost = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    cost = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = kInf;
      for (int c = 0; c < kk; ++c) {
        const double dd = sq_dist(p.location(i), centers[c]);
        if (dd < bd) { bd = dd; best = c; }
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
      cost += p.weight(i) * bd;
    }
    if (!changed && iter > 0) break;
    std::vector<Vec> sums(kk, Vec::Zero(p.dimension()));
    std::vector<double> mass(kk, 0.0);
    for (int i = 0; i < n; ++i) {
      sums[assign[i]] += p.weight(i) * p.location(i);
      mass[assign[i]] += p.weight(i);
    }
    for (int c = 0; c < kk; ++c)
      if (mass[c] > 0.0) centers[c] = sums[c] / mass[c];
  }
  return {std::move(centers), std::move(assign), cost};
}

}  // namespace

ReduceResult reduce_discrete(const DiscreteDistribution& p, int budget, std::uint64_t seed,
                             int restarts) {
  require(budget >= 1, "reduce_discrete: budget must be >= 1");
  if (p.size() <= budget) {
    std::vector<int> id(p.size());
    std::iota(id.begin(), id.end(), 0);
    return ReduceResult{p, 0.0, std::move(id)};
  }
  CounterRng base(seed);
  KmRun best;
  best.cost = kInf;
  for (int r = 0; r < restarts; ++r) {
    auto run = kmeans_once(p, budget, base.derive(r));
    if (run.cost < best.cost) best = std::move(run);
  }
  // Collapse empty clusters and re-normalize indices.
  std::vector<double> mass(best.centers.size(), 0.0);
  for (int i = 0; i < p.size(); ++i) mass[best.assign[i]] += p.weight(i);
  std::vector<int> remap(best.centers.size(), -1);
  std::vector<Vec> locs;
  std::vector<double> ws;
  for (std::size_t c = 0; c < best.centers.size(); ++c) {
    if (mass[c] > 0.0) {
      remap[c] = static_cast<int>(locs.size());
      locs.push_back(best.centers[c]);
      ws.push_back(mass[c]);
    }
  }
  std::vector<int> assign(p.size());
  for (int i = 0; i < p.size(); ++i) assign[i] = remap[best.assign[i]];
  return ReduceResult{DiscreteDistribution(std::move(locs), std::move(ws)),
                      std::sqrt(best.cost), std::move(assign)};
}

nlohmann::json to_json(const QuantizationOperator& q) {
  nlohmann::json locs = nlohmann::json::array();
  for (const auto& c : q.locations)
    locs.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return {{"breakpoints", q.partition.inner_breaks()}, {"locations", locs}};
}

QuantizationOperator quantizer_from_json(const nlohmann::json& j) {
  auto breaks = j.at("breakpoints").get<std::vector<std::vector<double>>>();
  BoxPartition part(std::move(breaks));
  std::vector<Vec> locs;
  for (const auto& c : j.at("locations")) {
    const auto v = c.get<std::vector<double>>();
    locs.push_back(Eigen::Map<const Vec>(v.data(), static_cast<int>(v.size())));
  }
  require(static_cast<long>(locs.size()) == part.num_cells(),
          "quantizer_from_json: |locations| != cell count");
  return QuantizationOperator{std::move(part), std::move(locs)};
}

}  // namespace wprop
