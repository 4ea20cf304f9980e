#include "japs/offline.hpp"

#include <cmath>
#include <stdexcept>

namespace japs {

void OfflineProblem::validate() const {
  target_catalog.validate();
  if (K < 1) throw std::invalid_argument("offline problem: K must be >= 1");
  if (price_grid.empty())
    throw std::invalid_argument("offline problem: price grid must be nonempty");
  for (size_t g = 1; g < price_grid.size(); ++g)
    if (price_grid[g] <= price_grid[g - 1])
      throw std::invalid_argument("offline problem: price grid must be ascending");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("offline problem: delta must be in (0,1)");
  if (lambda < 0.0)
    throw std::invalid_argument("offline problem: lambda must be >= 0");
  if (dataset.size() == 0)
    throw std::invalid_argument("offline problem: dataset must be nonempty");
  dataset.validate();
}

UtilityTable lcb_utilities(const FitResult& fit, const OfflineProblem& problem,
                           UtilityTable* widths_out) {
  const int n = problem.target_catalog.count();
  const int G = static_cast<int>(problem.price_grid.size());
  UtilityTable table;
  table.grid = problem.price_grid;
  table.values.resize(n, G);
  if (widths_out) {
    widths_out->grid = problem.price_grid;
    widths_out->values.resize(n, G);
  }

  Eigen::LLT<Mat> llt(fit.hessian_at_hat);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("lcb_utilities: Hessian not positive definite");
  const double scale =
      16.0 * std::sqrt(3.0) * std::sqrt(std::log(n / problem.delta));

  for (int i = 1; i <= n; ++i) {
    for (int g = 0; g < G; ++g) {
      const Vec x = augmented_feature(problem.target_catalog.feature(i),
                                      problem.price_grid[static_cast<size_t>(g)]);
      const double width = scale * std::sqrt(x.dot(llt.solve(x)));
      table.values(i - 1, g) = x.dot(fit.theta_hat) - width;
      if (widths_out) widths_out->values(i - 1, g) = width;
    }
  }
  return table;
}

OfflineResult run_lcb(const OfflineProblem& problem) {
  problem.validate();
  OfflineResult out;

  FitConfig fc;
  fc.lambda = problem.lambda;
  // a 1e-6 gradient pins theta far below the pessimism widths; tighter
  // certificates are unreachable once the loss hits its resolution floor
  fc.tolerance = 1e-6;
  out.fit = fit_mle(problem.dataset, fc);
  if (!out.fit.converged)
    throw std::runtime_error("run_lcb: likelihood fit did not converge");
  if (out.fit.theta_hat.size() != 2 * problem.target_catalog.d)
    throw std::invalid_argument("run_lcb: dataset and catalog dimensions differ");

  const UtilityTable table = lcb_utilities(out.fit, problem, &out.widths);
  const OracleSolution sol = maximize_revenue_over_grid(table, true, problem.K);
  out.action.assortment = sol.assortment;
  out.action.prices = sol.prices;
  out.pessimistic_revenue = sol.revenue;

  out.burn_in = burn_in_satisfied(problem.dataset, out.fit.hessian_at_hat,
                                  problem.target_catalog.d, problem.target_catalog.count(),
                                  problem.delta, problem.lambda,
                                  std::max(out.fit.theta_hat.norm(), 1e-12));
  return out;
}

double suboptimality(const OfflineResult& result, const ModelParams& truth,
                     const OfflineProblem& problem) {
  const OracleSolution opt =
      brute_force_joint(truth, problem.target_catalog, problem.K, problem.price_grid);
  const double realized =
      expected_revenue(truth, problem.target_catalog, result.action);
  return opt.revenue - realized;
}

double local_coverage_term(const ModelParams& truth, const OfflineProblem& problem,
                           const Mat& hessian_at_truth) {
  const OracleSolution opt =
      brute_force_joint(truth, problem.target_catalog, problem.K, problem.price_grid);
  Action act;
  act.assortment = opt.assortment;
  act.prices = opt.prices;
  const std::vector<double> q =
      choice_probabilities(truth, problem.target_catalog, act);
  Eigen::LLT<Mat> llt(hessian_at_truth);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("local_coverage_term: Hessian not positive definite");
  double total = 0.0;
  for (int j = 0; j < act.size(); ++j) {
    const Vec x = augmented_feature(problem.target_catalog.feature(act.assortment[static_cast<size_t>(j)]),
                                    act.prices[static_cast<size_t>(j)]);
    total += q[static_cast<size_t>(j) + 1] * q[0] * x.dot(llt.solve(x));
  }
  return total;
}

}  // namespace japs
