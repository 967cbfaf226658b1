#include <doctest.h>

#include <nlohmann/json.hpp>
#include <numeric>

#include "wprop/quantize.hpp"
#include "wprop/validate.hpp"

using namespace wprop;

namespace {

ProductDistribution std_normal(int d = 1) {
  std::vector<Component> c(d, GaussianComponent{0.0, 1.0});
  return ProductDistribution(c);
}

QuantizationOperator single_cell(const Vec& loc) {
  BoxPartition part(std::vector<std::vector<double>>(loc.size()));
  return {std::move(part), {loc}};
}

}  // namespace

TEST_CASE("apply: single cell, symmetric split, discrete fixed point") {
  const Vec c = (Vec(1) << 1.5).finished();
  const auto atoms = wprop::apply(single_cell(c), std_normal());
  REQUIRE(atoms.size() == 1);
  CHECK(atoms.location(0)[0] == 1.5);
  CHECK(atoms.weight(0) == doctest::Approx(1.0));

  QuantizationOperator split{BoxPartition(std::vector<std::vector<double>>{{0.0}}),
                             {(Vec(1) << -1.0).finished(), (Vec(1) << 1.0).finished()}};
  const auto two = wprop::apply(split, std_normal());
  REQUIRE(two.size() == 2);
  CHECK(two.weight(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.weight(1) == doctest::Approx(0.5).epsilon(1e-12));

  DiscreteDistribution d({(Vec(1) << -1.0).finished(), (Vec(1) << 1.0).finished()}, {0.3, 0.7});
  const auto fixed = wprop::apply(split, Distribution(d));
  REQUIRE(fixed.size() == 2);
  CHECK(fixed.weight(0) == doctest::Approx(0.3));
  CHECK(fixed.location(1)[0] == 1.0);
}

TEST_CASE("theta_d matches the classical two-level quantizer") {
  // Dirac at its own location.
  DiscreteDistribution dirac({(Vec(1) << 0.0).finished()}, {1.0});
  CHECK(theta_d(single_cell((Vec(1) << 0.0).finished()), Distribution(dirac), 2) == 0.0);

  CHECK(theta_d(single_cell((Vec(1) << 0.0).finished()), std_normal(), 2) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const double loc = std::sqrt(2.0 / 3.14159265358979323846);
  QuantizationOperator two{BoxPartition(std::vector<std::vector<double>>{{0.0}}),
                           {(Vec(1) << -loc).finished(), (Vec(1) << loc).finished()}};
  // Brute-force grid search over symmetric two-point quantizers (step 1e-4)
  // lands on sqrt(1 - 2/pi); frozen from that oracle.
  CHECK(theta_d(two, std_normal(), 2) == doctest::Approx(0.6028102749890869).epsilon(1e-10));
}

TEST_CASE("partition cells cover space exactly once") {
  BoxPartition part(std::vector<std::vector<double>>{{-1.0, 0.5}, {0.0}});
  CHECK(part.num_cells() == 6);
  CounterRng rng(11);
  for (int i = 0; i < 200; ++i) {
    Vec x(2);
    x << 8.0 * rng.next_unit() - 4.0, 8.0 * rng.next_unit() - 4.0;
    int hits = 0;
    for (long k = 0; k < part.num_cells(); ++k) {
      const Region r = part.cell_region(k);
      bool inside = true;
      for (int m = 0; m < 2; ++m)
        inside = inside && x[m] > r[m].lo && x[m] <= r[m].hi;  // cells are (lo, hi]
      if (inside) ++hits;
    }
    CHECK(hits == 1);
    CHECK(part.cell_of_point(x) >= 0);
  }
}

TEST_CASE("lloyd quantizer: known optima") {
  auto one = lloyd_quantizer_1d(GaussianComponent{0.0, 1.0}, 1);
  CHECK(one.locations[0] == doctest::Approx(0.0));
  CHECK(one.theta == doctest::Approx(1.0).epsilon(1e-12));

  auto two = lloyd_quantizer_1d(GaussianComponent{0.0, 1.0}, 2);
  CHECK(std::abs(two.locations[0]) == doctest::Approx(0.7978845608).epsilon(1e-6));
  CHECK(two.theta == doctest::Approx(0.6028102749890869).epsilon(1e-7));

  auto u2 = lloyd_quantizer_1d(UniformComponent{0.0, 1.0}, 2);
  CHECK(u2.locations[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(u2.locations[1] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(u2.breakpoints[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("lloyd error is non-increasing across iterations") {
  // Re-run with increasing iteration caps; theta must not increase.
  double prev = kInf;
  for (int iters = 1; iters <= 20; iters += 3) {
    const auto r = lloyd_quantizer_1d(GaussianComponent{0.3, 1.7}, 7, 0.0, iters);
    CHECK(r.theta <= prev + 1e-12);
    prev = r.theta;
  }
}

TEST_CASE("optimized grid allocates towards the high-variance axis") {
  ProductDistribution p({GaussianComponent{0.0, 1.0}, GaussianComponent{0.0, 0.01}});
  const auto q = optimized_grid(p, 8);
  // Allocation (8, 1): each increment on axis 2 reduces theta_d^2 by <= 1e-4
  // while axis 1 reduces it by >= 1e-2.
  CHECK(q.partition.cells_on_axis(0) == 8);
  CHECK(q.partition.cells_on_axis(1) == 1);

  const auto q1 = optimized_grid(p, 1);
  CHECK(q1.size() == 1);
  CHECK(q1.locations[0][0] == doctest::Approx(0.0));
}

TEST_CASE("optimized grid error is monotone on a doubling ladder") {
  CounterRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Component> comps;
    const int d = 1 + static_cast<int>(rng.next_unit() * 3);
    for (int m = 0; m < d; ++m)
      comps.push_back(GaussianComponent{2.0 * rng.next_unit() - 1.0, 0.2 + 2.0 * rng.next_unit()});
    ProductDistribution p(comps);
    double prev = kInf;
    for (long budget = 1; budget <= 1024; budget *= 2) {
      const double td = theta_d(optimized_grid(p, budget), p, 2);
      CHECK(td <= prev + 1e-12);
      prev = td;
    }
  }
}

TEST_CASE("theta_d equals the Monte-Carlo Wasserstein for Voronoi-consistent grids") {
  ProductDistribution p({GaussianComponent{0.4, 1.3}});
  const auto q = optimized_grid(p, 8);  // conditional means + midpoint boundaries
  const double td = theta_d(q, p, 2);
  const auto atoms = wprop::apply(q, p);
  const auto est = mc_wasserstein(Distribution(p), Distribution(atoms), 1000, 10, 2, 99);
  // Finite-sample empirical W is biased upward; the same-law estimate
  // measures that bias at this sample size.
  const auto bias = mc_wasserstein(Distribution(p), Distribution(p), 1000, 10, 2, 98);
  CHECK(std::abs(est.estimate - td) <= 3.0 * est.stderr_ + bias.estimate);
}

TEST_CASE("uniform grid certifies the covering inequality") {
  CHECK(uniform_cells_per_axis(1.0, 1, 4.0, 1.0, 2) == 6);  // ceil(sqrt(2)*4)

  ProductDistribution p({GaussianComponent{0.0, 1.0}, GaussianComponent{0.5, 0.4}});
  SUBCASE("huge epsilon needs a single cell") {
    const auto q = uniform_grid(p, 100.0, 1.0, 2);
    CHECK(q.size() == 1);
  }
  SUBCASE("certificate L * theta_d <= epsilon") {
    CounterRng rng(5);
    for (int i = 0; i < 10; ++i) {
      const double eps = 0.2 + rng.next_unit();
      const double lip = 0.5 + 2.0 * rng.next_unit();
      const auto q = uniform_grid(p, eps, lip, 2);
      CHECK(lip * theta_d(q, p, 2) <= eps + 1e-9);
    }
  }
  SUBCASE("doubling the Lipschitz constant at least doubles the per-axis count") {
    const long n1 = uniform_cells_per_axis(1.0, 2, 3.0, 0.5, 2);
    const long n2 = uniform_cells_per_axis(2.0, 2, 3.0, 0.5, 2);
    CHECK(n2 >= 2 * n1 - 1);
  }
}

TEST_CASE("reduce_discrete: exact cases and the cost oracle") {
  DiscreteDistribution two({(Vec(1) << 0.0).finished(), (Vec(1) << 2.0).finished()}, {0.5, 0.5});
  SUBCASE("budget >= atoms returns the input") {
    const auto r = reduce_discrete(two, 2, 1);
    CHECK(r.theta == 0.0);
    CHECK(r.reduced.size() == 2);
  }
  SUBCASE("two symmetric atoms merge to the centroid") {
    const auto r = reduce_discrete(two, 1, 1);
    REQUIRE(r.reduced.size() == 1);
    CHECK(r.reduced.location(0)[0] == doctest::Approx(1.0));
    CHECK(r.theta == doctest::Approx(1.0));
  }
  SUBCASE("reported cost matches an independent recomputation") {
    CounterRng rng(31);
    std::vector<Vec> locs;
    std::vector<double> ws;
    double total = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vec x(2);
      x << rng.next_unit() * 4.0, rng.next_unit() * 4.0;
      locs.push_back(x);
      const double w = 0.1 + rng.next_unit();
      ws.push_back(w);
      total += w;
    }
    for (auto& w : ws) w /= total;
    DiscreteDistribution p(locs, ws);
    const auto r = reduce_discrete(p, 10, 17);
    CHECK(r.reduced.size() <= 10);
    double cost = 0.0;
    for (int i = 0; i < p.size(); ++i)
      cost += p.weight(i) * (p.location(i) - r.reduced.location(r.assignment[i])).squaredNorm();
    CHECK(r.theta == doctest::Approx(std::sqrt(cost)).epsilon(1e-12));

    // theta upper-bounds the exact W2 between input and output.
    const auto [w2, plan] = exact_wasserstein(p, r.reduced, 2);
    CHECK(w2 <= r.theta + 1e-9);
  }
}

TEST_CASE("quantizer JSON round-trip and CLI schema") {
  ProductDistribution p({GaussianComponent{0.0, 1.0}, GaussianComponent{1.0, 0.5}});
  const auto q = optimized_grid(p, 6);
  const auto j = to_json(q);
  const auto back = quantizer_from_json(j);
  CHECK(back.size() == q.size());
  CHECK(theta_d(back, p, 2) == doctest::Approx(theta_d(q, p, 2)));
  CHECK(j.contains("breakpoints"));
  CHECK(j.contains("locations"));
}
