#include "wprop/validate.hpp"

#include <algorithm>
#include <numeric>

#include "wprop/funcmodel.hpp"

namespace wprop {

namespace {

// Gauss-Kronrod 15(7) rule on [-1, 1].
constexpr double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                            0.741531185599394, 0.586087235467691, 0.405845151377397,
                            0.207784955007898, 0.0};
constexpr double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                            0.140653259715525, 0.169004726639267, 0.190350578064785,
                            0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

template <typename F>
std::pair<double, double> gk15(const F& f, double a, double b) {
  const double h = 0.5 * (b - a), mid = 0.5 * (a + b);
  double kron = 0.0, gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kXgk[i];
    const double fv = (i == 7) ? f(mid) : f(mid - dx) + f(mid + dx);
    kron += kWgk[i] * fv;
    if (i % 2 == 1) gauss += kWg[i / 2] * fv;
  }
  kron *= h;
  gauss *= h;
  return {kron, std::abs(kron - gauss)};
}

template <typename F>
double adaptive(const F& f, double a, double b, double tol, int depth) {
  const auto [value, err] = gk15(f, a, b);
  if (err <= tol || depth >= 52 || b - a < 1e-14 * std::max(1.0, std::abs(a))) return value;
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1);
}

double gamma_abs_moment(double q) {
  // E|Z|^q for standard normal.
  return std::pow(2.0, q / 2.0) * std::tgamma((q + 1.0) / 2.0) / std::sqrt(3.14159265358979323846);
}

}  // namespace

double quadrature_moment(const Component& comp, const Interval& iv, double center, double rho,
                         double tol) {
  require(rho >= 0.0, "quadrature_moment: rho must be >= 0");
  double a = iv.lo, b = iv.hi;
  double truncation = 0.0;

  if (const auto* u = std::get_if<UniformComponent>(&comp)) {
    a = std::max(a, u->lo);
    b = std::min(b, u->hi);
    if (a >= b) return 0.0;
  } else {
    const auto& g = std::get<GaussianComponent>(comp);
    const double cut = 12.0;
    const double lo12 = g.mean - cut * g.std, hi12 = g.mean + cut * g.std;
    if (a < lo12 || b > hi12) {
      // Cauchy-Schwarz bound on the discarded tail moment.
      const double tail_prob = norm_cdf(-cut);
      const double m2rho = std::pow(2.0, 2.0 * rho - 1.0) *
                           (std::pow(std::abs(g.mean - center), 2.0 * rho) +
                            std::pow(g.std, 2.0 * rho) * gamma_abs_moment(2.0 * rho));
      truncation = std::sqrt(2.0 * tail_prob * std::max(0.0, m2rho));
    }
    a = std::max(a, lo12);
    b = std::min(b, hi12);
    if (a >= b) return truncation;
  }

  auto density = [&](double x) {
    if (const auto* u = std::get_if<UniformComponent>(&comp)) return 1.0 / (u->hi - u->lo);
    const auto& g = std::get<GaussianComponent>(comp);
    return norm_pdf((x - g.mean) / g.std) / g.std;
  };
  auto integrand = [&](double x) { return std::pow(std::abs(x - center), rho) * density(x); };

  double total = 0.0;
  // Split at the kink of |x - c|^rho.
  if (center > a && center < b) {
    total = adaptive(integrand, a, center, 0.5 * tol, 0) +
            adaptive(integrand, center, b, 0.5 * tol, 0);
  } else {
    total = adaptive(integrand, a, b, tol, 0);
  }
  return total + truncation;
}

namespace {

double pair_cost(const Vec& x, const Vec& y, int rho) { return norm_pow_rho(x - y, rho); }

// Dense square LAP via shortest augmenting paths with potentials.
double solve_assignment(const std::vector<double>& cost, int n) {
  std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
  std::vector<int> col4row(n, -1), row4col(n, -1), path(n);
  std::vector<char> sr(n), sc(n);

  for (int cur = 0; cur < n; ++cur) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(sr.begin(), sr.end(), 0);
    std::fill(sc.begin(), sc.end(), 0);
    std::fill(path.begin(), path.end(), -1);
    double min_val = 0.0;
    int i = cur, sink = -1;
    while (sink == -1) {
      sr[i] = 1;
      int index = -1;
      double lowest = kInf;
      for (int j = 0; j < n; ++j) {
        if (sc[j]) continue;
        const double r = min_val + cost[static_cast<std::size_t>(i) * n + j] - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = i;
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == -1)) {
          lowest = shortest[j];
          index = j;
        }
      }
      min_val = lowest;
      require(std::isfinite(min_val), "assignment: infeasible");
      const int j = index;
      sc[j] = 1;
      if (row4col[j] == -1) sink = j;
      else i = row4col[j];
    }
    u[cur] += min_val;
    for (int k = 0; k < n; ++k) {
      if (sr[k] && k != cur) u[k] += min_val - shortest[col4row[k]];
    }
    for (int j = 0; j < n; ++j) {
      if (sc[j]) v[j] -= min_val - shortest[j];
    }
    int j = sink;
    while (true) {
      const int ii = path[j];
      row4col[j] = ii;
      std::swap(col4row[ii], j);
      if (ii == cur) break;
    }
  }
  double total = 0.0;
  for (int r = 0; r < n; ++r) total += cost[static_cast<std::size_t>(r) * n + col4row[r]];
  return total;
}

}  // namespace

double empirical_wasserstein(const std::vector<Vec>& xs, const std::vector<Vec>& ys, int rho) {
  require(xs.size() == ys.size() && !xs.empty(), "empirical_wasserstein: size mismatch");
  require(xs.size() <= 5000, "empirical_wasserstein: sample size over the exact-regime cap");
  const int n = static_cast<int>(xs.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[static_cast<std::size_t>(i) * n + j] = pair_cost(xs[i], ys[j], rho);
  const double total = solve_assignment(cost, n);
  return std::pow(total / n, 1.0 / rho);
}

std::pair<double, TransportPlan> transport_lp(const std::vector<double>& cost,
                                              const std::vector<double>& a,
                                              const std::vector<double>& b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  require(cost.size() == static_cast<std::size_t>(n) * m, "transport_lp: cost size mismatch");

  std::vector<double> supply(a), demand(b);
  Mat flow = Mat::Zero(n, m);
  std::vector<double> pot(n + m, 0.0);
  const double eps = 1e-15;

  double remaining = 1.0;
  int guard = 0;
  while (remaining > 1e-12) {
    require(++guard <= 64 * (n + m) + 1024, "transport_lp: augmentation guard tripped");
    // Dijkstra over sources (0..n-1) and sinks (n..n+m-1) on reduced costs.
    std::vector<double> dist(n + m, kInf);
    std::vector<int> prev(n + m, -1);
    std::vector<char> done(n + m, 0);
    for (int i = 0; i < n; ++i)
      if (supply[i] > eps) dist[i] = 0.0;
    int sink = -1;
    while (true) {
      int best = -1;
      double bd = kInf;
      for (int k = 0; k < n + m; ++k)
        if (!done[k] && dist[k] < bd) { bd = dist[k]; best = k; }
      if (best < 0) break;
      done[best] = 1;
      if (best >= n && demand[best - n] > eps) { sink = best; break; }
      if (best < n) {
        const int i = best;
        for (int j = 0; j < m; ++j) {
          if (done[n + j]) continue;
          const double rc =
              std::max(0.0, cost[static_cast<std::size_t>(i) * m + j] + pot[i] - pot[n + j]);
          if (dist[i] + rc < dist[n + j]) {
            dist[n + j] = dist[i] + rc;
            prev[n + j] = i;
          }
        }
      } else {
        const int j = best - n;
        for (int i = 0; i < n; ++i) {
          if (done[i] || flow(i, j) <= eps) continue;
          const double rc =
              std::max(0.0, -cost[static_cast<std::size_t>(i) * m + j] + pot[n + j] - pot[i]);
          if (dist[n + j] + rc < dist[i]) {
            dist[i] = dist[n + j] + rc;
            prev[i] = n + j;
          }
        }
      }
    }
    require(sink >= 0, "transport_lp: no augmenting path");
    const double dt = dist[sink];
    for (int k = 0; k < n + m; ++k) pot[k] += std::min(dist[k], dt);

    // Bottleneck along the path.
    double push = demand[sink - n];
    for (int k = sink; prev[k] >= 0; k = prev[k]) {
      const int p = prev[k];
      if (k >= n) continue;                       // backward arc sink->source
      push = std::min(push, flow(k, p - n));      // p is a sink here
    }
    {
      int k = sink;
      while (prev[k] >= 0) k = prev[k];
      push = std::min(push, supply[k]);
    }
    // Apply.
    {
      int k = sink;
      while (prev[k] >= 0) {
        const int p = prev[k];
        if (k >= n) flow(p, k - n) += push;   // source -> sink
        else flow(k, p - n) -= push;          // sink -> source (reduce)
        k = p;
      }
      supply[k] -= push;
    }
    demand[sink - n] -= push;
    remaining -= push;
    if (remaining < 0) remaining = 0;
    double rem = 0.0;
    for (double dmd : demand) rem += std::max(0.0, dmd);
    remaining = rem;
  }

  TransportPlan plan;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (flow(i, j) > eps) {
        plan.source.push_back(i);
        plan.target.push_back(j);
        plan.mass.push_back(flow(i, j));
        total += flow(i, j) * cost[static_cast<std::size_t>(i) * m + j];
      }
    }
  }
  plan.total_cost = total;
  return {std::max(0.0, total), plan};
}

std::pair<double, TransportPlan> exact_wasserstein(const DiscreteDistribution& a,
                                                   const DiscreteDistribution& b, int rho) {
  require(rho == 1 || rho == 2, "exact_wasserstein: rho must be 1 or 2");
  require(a.dimension() == b.dimension(), "exact_wasserstein: dimension mismatch");
  const int n = a.size(), m = b.size();
  require(n + m <= 4000, "exact_wasserstein: combined atom count over the exact-regime cap");
  std::vector<double> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost[static_cast<std::size_t>(i) * m + j] = pair_cost(a.location(i), b.location(j), rho);
  auto [total, plan] = transport_lp(cost, a.weights(), b.weights());
  return {std::pow(total, 1.0 / rho), std::move(plan)};
}

Sampler distribution_sampler(const Distribution& p) {
  return [p](int n, std::uint64_t seed) { return sample(p, n, seed); };
}

Sampler pushforward_sampler(const FunctionModel& f, const Distribution& p) {
  return [f, p](int n, std::uint64_t seed) {
    auto xs = sample(p, n, seed);
    for (auto& x : xs) x = f.evaluate(x);
    return xs;
  };
}

McEstimate mc_wasserstein(const Sampler& p, const Sampler& q, int n, int repeats, int rho,
                          std::uint64_t seed) {
  require(n >= 1 && repeats >= 1, "mc_wasserstein: n and repeats must be >= 1");
  std::vector<double> vals(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto xs = p(n, seed + 2ULL * r * 0x9e3779b97f4a7c15ULL + 1);
    const auto ys = q(n, seed + (2ULL * r + 1) * 0x9e3779b97f4a7c15ULL + 2);
    vals[r] = empirical_wasserstein(xs, ys, rho);
  }
  McEstimate e;
  e.repeats = repeats;
  e.estimate = std::accumulate(vals.begin(), vals.end(), 0.0) / repeats;
  if (repeats > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - e.estimate) * (v - e.estimate);
    e.stderr_ = std::sqrt(ss / (repeats - 1)) / std::sqrt(double(repeats));
  }
  return e;
}

McEstimate mc_wasserstein(const Distribution& p, const Distribution& q, int n, int repeats,
                          int rho, std::uint64_t seed) {
  return mc_wasserstein(distribution_sampler(p), distribution_sampler(q), n, repeats, rho, seed);
}

}  // namespace wprop
