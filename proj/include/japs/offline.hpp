#pragma once

#include "japs/estimation.hpp"
#include "japs/oracle.hpp"

namespace japs {

struct OfflineProblem {
  Dataset dataset;
  ItemCatalog target_catalog;  // context the chosen action will face
  int K = 1;
  std::vector<double> price_grid;
  double delta = 0.1;
  double lambda = 1e-6;

  void validate() const;
};

struct OfflineResult {
  Action action;
  double pessimistic_revenue = 0.0;
  FitResult fit;
  BurnInReport burn_in;
  UtilityTable widths;  // per-cell widths that were subtracted
};

// Pessimistic utility table: cell(i, g) =
//   x(i,g)' theta_hat - 16 sqrt(3) ||x(i,g)||_{H(theta_hat)^-1} sqrt(log(N/delta)).
UtilityTable lcb_utilities(const FitResult& fit, const OfflineProblem& problem,
                           UtilityTable* widths_out = nullptr);

// Fit, build the pessimistic table, maximize over the grid.
OfflineResult run_lcb(const OfflineProblem& problem);

// Gap to the grid optimum under the true parameters.
double suboptimality(const OfflineResult& result, const ModelParams& truth,
                     const OfflineProblem& problem);

// sum_{j in S*} q_j q_0 ||x_j(p*_j)||^2_{H^-1} at the true grid optimum.
double local_coverage_term(const ModelParams& truth, const OfflineProblem& problem,
                           const Mat& hessian_at_truth);

}  // namespace japs
