#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "japs/mnl.hpp"
#include "japs/oracle.hpp"
#include "japs/rng.hpp"

using namespace japs;

namespace {

// Independent exhaustive search used to arbitrate the library oracles.
double brute_best_fixed(const std::vector<double>& utilities,
                        const std::vector<double>& revenues, int K) {
  const int n = static_cast<int>(utilities.size());
  double best = 0.0;  // empty assortment
  for (int mask = 1; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) > K) continue;
    double num = 0.0, den = 1.0;
    for (int i = 0; i < n; ++i) {
      if (!(mask & (1 << i))) continue;
      const double w = std::exp(std::clamp(utilities[i], -kUtilityClamp, kUtilityClamp));
      num += revenues[i] * w;
      den += w;
    }
    best = std::max(best, num / den);
  }
  return best;
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return g;
}

UtilityTable linear_table(const std::vector<double>& alpha,
                          const std::vector<double>& beta,
                          const std::vector<double>& grid) {
  UtilityTable t;
  t.grid = grid;
  t.values.resize(static_cast<int>(alpha.size()), static_cast<int>(grid.size()));
  for (int i = 0; i < t.items(); ++i)
    for (int g = 0; g < t.points(); ++g)
      t.values(i, g) = alpha[static_cast<std::size_t>(i)] -
                       beta[static_cast<std::size_t>(i)] * grid[static_cast<std::size_t>(g)];
  return t;
}

}  // namespace

TEST_CASE("revenue from explicit utilities matches the share formula") {
  // weights e^0 = 1 and e^{log 2} = 2: revenue = (1*1 + 3*2) / (1 + 1 + 2)
  CHECK(revenue_from_utilities({0.0, std::log(2.0)}, {1.0, 3.0}) ==
        doctest::Approx(7.0 / 4.0).epsilon(1e-14));
  CHECK(revenue_from_utilities({}, {}) == 0.0);
}

TEST_CASE("fixed-price assortment search on hand-checked instances") {
  // weights 1 and 3: {1} earns 2*1/2 = 1, {2} earns 1*3/4, {1,2} earns 5/5 = 1.
  // The tie resolves to the earlier candidate {1}.
  const OracleSolution s =
      best_assortment_fixed_prices({0.0, std::log(3.0)}, {2.0, 1.0}, 2);
  CHECK(s.revenue == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.assortment == std::vector<int>{1});
  CHECK(s.prices == std::vector<double>{2.0});

  // identical items: the first singleton wins
  const OracleSolution tie = best_assortment_fixed_prices({0.0, 0.0}, {1.0, 1.0}, 1);
  CHECK(tie.assortment == std::vector<int>{1});

  // nothing earns: the empty assortment stands at revenue zero
  const OracleSolution idle = best_assortment_fixed_prices({1.0, 2.0}, {0.0, 0.0}, 2);
  CHECK(idle.revenue == 0.0);
  CHECK(idle.assortment.empty());

  CHECK_THROWS_AS(
      best_assortment_fixed_prices(std::vector<double>(21, 0.0),
                                   std::vector<double>(21, 1.0), 2),
      std::invalid_argument);
}

TEST_CASE("fixed-price search agrees with a bitmask sweep on random instances") {
  Rng rng(1001);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + rng.uniform_int(8);
    const int K = 1 + rng.uniform_int(n);
    std::vector<double> u(static_cast<std::size_t>(n)), r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      u[static_cast<std::size_t>(i)] = 4.0 * rng.uniform01() - 2.0;
      r[static_cast<std::size_t>(i)] = 5.0 * rng.uniform01();
    }
    const OracleSolution s = best_assortment_fixed_prices(u, r, K);
    CHECK(s.revenue == doctest::Approx(brute_best_fixed(u, r, K)).epsilon(1e-12));
    CHECK(static_cast<int>(s.assortment.size()) <= K);
    CHECK(std::is_sorted(s.assortment.begin(), s.assortment.end()));

    // the reported revenue is reproducible from the reported action
    std::vector<double> su, sr;
    for (std::size_t j = 0; j < s.assortment.size(); ++j) {
      su.push_back(u[static_cast<std::size_t>(s.assortment[j] - 1)]);
      sr.push_back(r[static_cast<std::size_t>(s.assortment[j] - 1)]);
    }
    CHECK(revenue_from_utilities(su, sr) == doctest::Approx(s.revenue).epsilon(1e-12));
  }
}

TEST_CASE("joint optimizer satisfies the fixed-point price identity") {
  const std::vector<double> alpha = {0.9, 0.2, -0.4, 0.6};
  const std::vector<double> beta = {0.7, 0.4, 0.9, 1.1};
  const double P = 6.0;
  const OracleSolution s = best_joint_assortment_pricing(alpha, beta, 3, P);
  CHECK(s.method == "structural");
  REQUIRE(!s.assortment.empty());
  CHECK(std::is_sorted(s.assortment.begin(), s.assortment.end()));

  std::vector<double> su;
  for (std::size_t j = 0; j < s.assortment.size(); ++j) {
    const std::size_t i = static_cast<std::size_t>(s.assortment[j] - 1);
    su.push_back(alpha[i] - beta[i] * s.prices[j]);
    // interior prices sit exactly 1/beta above the optimal revenue
    if (s.prices[j] > 1e-9 && s.prices[j] < P - 1e-9)
      CHECK(s.prices[j] - s.revenue == doctest::Approx(1.0 / beta[i]).epsilon(1e-9));
    CHECK(s.prices[j] >= 0.0);
    CHECK(s.prices[j] <= P + 1e-12);
  }
  CHECK(revenue_from_utilities(su, s.prices) == doctest::Approx(s.revenue).epsilon(1e-10));
}

TEST_CASE("joint optimizer matches a dense single-item scan") {
  const double alpha = 0.7, beta = 0.6, P = 5.0;
  const OracleSolution s = best_joint_assortment_pricing({alpha}, {beta}, 1, P);

  double scan = 0.0;
  const int points = 400001;
  for (int g = 0; g < points; ++g) {
    const double p = P * static_cast<double>(g) / (points - 1);
    const double w = std::exp(alpha - beta * p);
    scan = std::max(scan, p * w / (1.0 + w));
  }
  CHECK(s.revenue == doctest::Approx(scan).epsilon(1e-8));
  CHECK(s.prices[0] - s.revenue == doctest::Approx(1.0 / beta).epsilon(1e-9));
}

TEST_CASE("joint optimizer dominates grid search on random instances") {
  Rng rng(1002);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 1 + rng.uniform_int(5);
    const int K = 1 + rng.uniform_int(2);
    const double P = 2.0 + 6.0 * rng.uniform01();
    std::vector<double> alpha(static_cast<std::size_t>(n)),
        beta(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      alpha[static_cast<std::size_t>(i)] = 2.0 * rng.uniform01() - 1.0;
      beta[static_cast<std::size_t>(i)] = 0.2 + rng.uniform01();
    }
    const OracleSolution cont = best_joint_assortment_pricing(alpha, beta, K, P);
    const UtilityTable table = linear_table(alpha, beta, linspace(0.0, P, 81));
    const OracleSolution grid = maximize_revenue_over_grid(table, true, K);
    CHECK(grid.method == "grid");
    CHECK(cont.revenue >= grid.revenue - 1e-9);
    CHECK(cont.revenue - grid.revenue <= 0.05);  // an 81-point grid gets close
  }
}

TEST_CASE("joint optimizer rejects malformed inputs") {
  CHECK_THROWS_AS(best_joint_assortment_pricing({1.0}, {1.0, 2.0}, 1, 5.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(best_joint_assortment_pricing({}, {}, 1, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(best_joint_assortment_pricing({1.0}, {1.0}, 0, 5.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(best_joint_assortment_pricing({1.0}, {1.0}, 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(best_joint_assortment_pricing({1.0}, {0.0}, 1, 5.0),
                  std::invalid_argument);
}

TEST_CASE("grid maximizer agrees with direct enumeration, both price modes") {
  const std::vector<double> alpha = {0.5, -0.2, 0.8};
  const std::vector<double> beta = {0.6, 0.3, 1.0};
  const std::vector<double> grid = {0.5, 1.5, 3.0};
  const UtilityTable table = linear_table(alpha, beta, grid);
  const int K = 2, n = 3;

  double best_per_item = 0.0;
  double best_shared = 0.0;
  for (int mask = 1; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) > K) continue;
    std::vector<int> items;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) items.push_back(i);
    const int m = static_cast<int>(items.size());

    // every per-item grid assignment via an odometer
    std::vector<int> pick(static_cast<std::size_t>(m), 0);
    while (true) {
      std::vector<double> u, p;
      for (int j = 0; j < m; ++j) {
        u.push_back(table.values(items[static_cast<std::size_t>(j)],
                                 pick[static_cast<std::size_t>(j)]));
        p.push_back(grid[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])]);
      }
      best_per_item = std::max(best_per_item, revenue_from_utilities(u, p));
      int j = m - 1;
      while (j >= 0 && pick[static_cast<std::size_t>(j)] == 2) {
        pick[static_cast<std::size_t>(j)] = 0;
        --j;
      }
      if (j < 0) break;
      ++pick[static_cast<std::size_t>(j)];
    }

    for (int g = 0; g < 3; ++g) {
      std::vector<double> u, p;
      for (int j = 0; j < m; ++j) {
        u.push_back(table.values(items[static_cast<std::size_t>(j)], g));
        p.push_back(grid[static_cast<std::size_t>(g)]);
      }
      best_shared = std::max(best_shared, revenue_from_utilities(u, p));
    }
  }

  const OracleSolution per_item = maximize_revenue_over_grid(table, true, K);
  CHECK(per_item.revenue == doctest::Approx(best_per_item).epsilon(1e-12));
  const OracleSolution shared = maximize_revenue_over_grid(table, false, K);
  CHECK(shared.revenue == doctest::Approx(best_shared).epsilon(1e-12));
  CHECK(per_item.revenue >= shared.revenue - 1e-12);

  // shared mode offers one common price
  if (shared.prices.size() > 1)
    for (std::size_t j = 1; j < shared.prices.size(); ++j)
      CHECK(shared.prices[j] == shared.prices[0]);
}

TEST_CASE("grid maximizer enforces its enumeration guards") {
  std::vector<double> alpha(61, 0.0), beta(61, 1.0);
  const UtilityTable too_many = linear_table(alpha, beta, {1.0});
  CHECK_THROWS_AS(maximize_revenue_over_grid(too_many, true, 1), std::invalid_argument);

  alpha.assign(20, 0.0);
  beta.assign(20, 1.0);
  const UtilityTable huge = linear_table(alpha, beta, linspace(0.0, 5.0, 10));
  CHECK_THROWS_AS(maximize_revenue_over_grid(huge, true, 10), std::invalid_argument);
}

TEST_CASE("utility table validation") {
  UtilityTable t;
  t.grid = {0.0, 1.0};
  t.values.resize(2, 2);
  t.values.setZero();
  CHECK_NOTHROW(t.validate());

  UtilityTable wrong_cols = t;
  wrong_cols.grid = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(wrong_cols.validate(), std::invalid_argument);

  UtilityTable unsorted = t;
  unsorted.grid = {1.0, 0.5};
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

  UtilityTable negative = t;
  negative.grid = {-0.5, 1.0};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("known-parameter enumeration cross-checks the table path") {
  ItemCatalog cat;
  cat.d = 2;
  cat.items.push_back((Vec(2) << 1.0, 0.2).finished());
  cat.items.push_back((Vec(2) << 1.0, 0.8).finished());
  cat.items.push_back((Vec(2) << 1.0, 0.5).finished());
  ModelParams params;
  params.psi = (Vec(2) << 0.8, -0.3).finished();
  params.phi = (Vec(2) << 0.5, 0.25).finished();
  params.W = 2.0;
  params.validate();

  const std::vector<double> grid = linspace(0.0, 6.0, 41);
  const OracleSolution brute = brute_force_joint(params, cat, 2, grid);
  CHECK(brute.method == "brute_force");

  std::vector<double> alpha, beta;
  for (int i = 1; i <= cat.count(); ++i) {
    alpha.push_back(params.psi.dot(cat.feature(i)));
    beta.push_back(params.phi.dot(cat.feature(i)));
  }
  const OracleSolution table =
      maximize_revenue_over_grid(linear_table(alpha, beta, grid), true, 2);
  CHECK(brute.revenue == doctest::Approx(table.revenue).epsilon(1e-12));
  CHECK(brute.assortment == table.assortment);
  CHECK(brute.prices == table.prices);

  const OracleSolution cont = best_joint_assortment_pricing(alpha, beta, 2, 6.0);
  CHECK(cont.revenue >= brute.revenue - 1e-9);

  CHECK_THROWS_AS(brute_force_joint(params, cat, 2, {}), std::invalid_argument);
}
