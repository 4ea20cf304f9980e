#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "japs/env.hpp"
#include "japs/offline.hpp"

using namespace japs;

namespace {

World small_world(std::uint64_t seed) {
  EnvironmentSpec spec;
  spec.d = 2;
  spec.N = 4;
  spec.K = 2;
  spec.W = 1.0;
  spec.L0 = 0.4;
  spec.seed = seed;
  Rng rng(seed);
  return generate_environment(spec, rng);
}

OfflineProblem make_problem(const World& world, int n, std::uint64_t seed) {
  OfflineProblem problem;
  Rng rng(seed);
  BehaviorPolicy policy;
  problem.dataset = generate_offline_dataset(world, policy, n, rng);
  problem.target_catalog = world.catalog;
  problem.K = world.spec.K;
  const double P = world.constants.P;
  for (int g = 0; g < 5; ++g)
    problem.price_grid.push_back(P * static_cast<double>(g) / 4.0);
  problem.delta = 0.1;
  problem.lambda = 1e-6;
  return problem;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("pessimistic cells subtract the exact width from the point estimate") {
  // One item, d = 1, diagonal Hessian: everything is hand-computable.
  OfflineProblem problem;
  problem.target_catalog.d = 1;
  problem.target_catalog.items.push_back((Vec(1) << 1.0).finished());
  problem.K = 1;
  problem.price_grid = {0.5, 2.0};
  problem.delta = 0.05;

  FitResult fit;
  fit.theta_hat = (Vec(2) << 0.4, 0.6).finished();
  fit.hessian_at_hat = (Vec(2) << 4.0, 25.0).finished().asDiagonal();
  fit.lambda = problem.lambda;
  fit.converged = true;

  UtilityTable widths;
  const UtilityTable cells = lcb_utilities(fit, problem, &widths);
  REQUIRE(cells.items() == 1);
  REQUIRE(cells.points() == 2);
  CHECK(cells.grid == problem.price_grid);

  const double scale = 16.0 * std::sqrt(3.0) * std::sqrt(std::log(1.0 / 0.05));
  for (int g = 0; g < 2; ++g) {
    const double p = problem.price_grid[static_cast<std::size_t>(g)];
    const double mean = 0.4 - p * 0.6;  // (1, -p) . theta_hat
    const double hnorm = std::sqrt(1.0 / 4.0 + p * p / 25.0);
    CHECK(widths.values(0, g) == doctest::Approx(scale * hnorm).epsilon(1e-12));
    CHECK(cells.values(0, g) ==
          doctest::Approx(mean - scale * hnorm).epsilon(1e-12));
  }
}

TEST_CASE("the end-to-end pessimistic policy returns a valid grid action") {
  const World world = small_world(201);
  const OfflineProblem problem = make_problem(world, 800, 202);
  const OfflineResult result = run_lcb(problem);

  CHECK(result.fit.converged);
  CHECK_NOTHROW(result.action.validate(world.catalog.count(), problem.K,
                                       world.constants.P + 1e-9));
  for (double p : result.action.prices)
    CHECK(std::count(problem.price_grid.begin(), problem.price_grid.end(), p) == 1);
  CHECK(std::is_sorted(result.action.assortment.begin(), result.action.assortment.end()));

  // the pessimistic value never exceeds the plug-in value of the same action
  std::vector<double> u;
  for (std::size_t j = 0; j < result.action.assortment.size(); ++j) {
    const Vec x = world.catalog.feature(result.action.assortment[j]);
    u.push_back(result.fit.theta_hat.head(2).dot(x) -
                result.action.prices[j] * result.fit.theta_hat.tail(2).dot(x));
  }
  CHECK(result.pessimistic_revenue <=
        revenue_from_utilities(u, result.action.prices) + 1e-9);

  CHECK(result.burn_in.threshold > 0.0);
  CHECK(result.burn_in.worst_norm >= 0.0);
  CHECK(suboptimality(result, world.params, problem) >= -1e-12);
}

TEST_CASE("suboptimality shrinks as the behavior sample grows") {
  std::vector<double> small_gaps, large_gaps;
  for (int s = 0; s < 5; ++s) {
    const World world = small_world(301 + static_cast<std::uint64_t>(s));
    const OfflineProblem small_problem =
        make_problem(world, 150, 400 + static_cast<std::uint64_t>(s));
    const OfflineProblem large_problem =
        make_problem(world, 1500, 500 + static_cast<std::uint64_t>(s));
    small_gaps.push_back(
        suboptimality(run_lcb(small_problem), world.params, small_problem));
    large_gaps.push_back(
        suboptimality(run_lcb(large_problem), world.params, large_problem));
  }
  CHECK(median(large_gaps) <= median(small_gaps) + 1e-12);
}

TEST_CASE("local coverage term sums choice-weighted leverage at the optimum") {
  // Single item, K = 1, two grid prices: the optimum is computable directly.
  OfflineProblem problem;
  problem.target_catalog.d = 1;
  problem.target_catalog.items.push_back((Vec(1) << 1.0).finished());
  problem.K = 1;
  problem.price_grid = {0.5, 1.0};
  ModelParams truth;
  truth.psi = (Vec(1) << 0.3).finished();
  truth.phi = (Vec(1) << 0.4).finished();
  truth.W = 1.0;

  // revenues: p * e^{0.3 - 0.4 p} / (1 + e^{0.3 - 0.4 p}); p = 1 wins
  const double u_half = 0.3 - 0.4 * 0.5, u_one = 0.3 - 0.4 * 1.0;
  REQUIRE(1.0 * std::exp(u_one) / (1.0 + std::exp(u_one)) >
          0.5 * std::exp(u_half) / (1.0 + std::exp(u_half)));

  const Mat H = (Vec(2) << 2.0, 8.0).finished().asDiagonal();
  const double q1 = std::exp(u_one) / (1.0 + std::exp(u_one));
  const double q0 = 1.0 - q1;
  const double leverage = 1.0 / 2.0 + 1.0 / 8.0;  // (1,-1) against diag(2,8)
  CHECK(local_coverage_term(truth, problem, H) ==
        doctest::Approx(q1 * q0 * leverage).epsilon(1e-12));
}

TEST_CASE("offline problem validation rejects malformed inputs") {
  const World world = small_world(211);
  OfflineProblem good = make_problem(world, 50, 212);
  CHECK_NOTHROW(good.validate());

  OfflineProblem no_grid = good;
  no_grid.price_grid.clear();
  CHECK_THROWS_AS(no_grid.validate(), std::invalid_argument);

  OfflineProblem unsorted = good;
  std::swap(unsorted.price_grid[0], unsorted.price_grid[1]);
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

  OfflineProblem bad_delta = good;
  bad_delta.delta = 0.0;
  CHECK_THROWS_AS(bad_delta.validate(), std::invalid_argument);

  OfflineProblem bad_k = good;
  bad_k.K = 0;
  CHECK_THROWS_AS(bad_k.validate(), std::invalid_argument);

  OfflineProblem bad_lambda = good;
  bad_lambda.lambda = -1.0;
  CHECK_THROWS_AS(bad_lambda.validate(), std::invalid_argument);

  OfflineProblem empty_data = good;
  empty_data.dataset = Dataset{};
  CHECK_THROWS_AS(empty_data.validate(), std::invalid_argument);
}

TEST_CASE("dimension mismatches between data and target context are rejected") {
  const World world = small_world(221);
  OfflineProblem problem = make_problem(world, 60, 222);
  ItemCatalog other;
  other.d = 3;
  other.items.push_back((Vec(3) << 1.0, 0.0, 0.0).finished());
  problem.target_catalog = other;
  CHECK_THROWS_AS(run_lcb(problem), std::invalid_argument);
}
