#pragma once

#include <string>
#include <vector>

#include "japs/mnl.hpp"

namespace japs {

// Utilities per (item, grid point). values(i-1, g) is the utility of item i
// offered at grid[g].
struct UtilityTable {
  std::vector<double> grid;
  Mat values;

  int items() const { return static_cast<int>(values.rows()); }
  int points() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

struct OracleSolution {
  std::vector<int> assortment;
  std::vector<double> prices;
  double revenue = 0.0;
  std::string method;  // "structural" | "grid" | "brute_force"
};

// Enumeration guard for the discretized action space.
constexpr long long kActionSpaceCap = 2'000'000;

// Exhaustive search over assortments of size <= K at fixed prices/revenues.
// utilities[i], revenues[i] describe item i+1. Ties resolve to the
// lexicographically smallest assortment.
OracleSolution best_assortment_fixed_prices(const std::vector<double>& utilities,
                                            const std::vector<double>& revenues,
                                            int K);

// Continuous joint optimum for utilities alpha_i - beta_i * p. Uses the
// structural form p_i(R) = clip(R + 1/beta_i, 0, P) and bisects the unique
// root of f(R) = sum of top-K scores - R on [0, P].
OracleSolution best_joint_assortment_pricing(const std::vector<double>& alpha,
                                             const std::vector<double>& beta,
                                             int K, double P);

// Exact maximizer over the discretized action set induced by the table.
// prices_from_grid = true: each offered item picks its own grid price.
// prices_from_grid = false: all offered items share one grid index.
OracleSolution maximize_revenue_over_grid(const UtilityTable& table,
                                          bool prices_from_grid, int K);

// Ground-truth enumeration under known parameters; independent code path kept
// deliberately plain so it can arbitrate the other oracles in tests.
OracleSolution brute_force_joint(const ModelParams& params,
                                 const ItemCatalog& catalog, int K,
                                 const std::vector<double>& grid);

// Revenue of a (possibly clamped-utility) MNL with explicit utilities.
double revenue_from_utilities(const std::vector<double>& utilities,
                              const std::vector<double>& prices);

}  // namespace japs
