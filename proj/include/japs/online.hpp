#pragma once

#include <map>
#include <string>
#include <vector>

#include "japs/env.hpp"
#include "japs/oracle.hpp"

namespace japs {

enum class OnlineAlgo { supcb, ts, ucb_mle };

std::string to_string(OnlineAlgo a);
OnlineAlgo online_algo_from_string(const std::string& s);

struct OnlineConfig {
  long long T = 1000;
  OnlineAlgo algorithm = OnlineAlgo::ts;
  // lambda <= 0 means: use Pbar for supcb (its minimum legal value).
  double lambda = 0.0;
  std::vector<double> price_grid;  // explicit grid wins over grid_points
  int grid_points = 5;
  bool fixed_assortment_mode = false;
  std::vector<int> fixed_assortment;

  int mh_steps = 50;
  int mh_burn_in = 500;
  double mh_proposal_scale = 0.1;

  double c_seq = 5.43656365691809047;  // 2e

  double width_scale = 1.0;   // supcb width multiplier for exploratory runs
  long long explore_cap = -1; // supcb initial-exploration cap; -1 => T
  long long tau_explore = 50; // fixed-assortment mode: rounds per bin

  long long action_cap = kActionSpaceCap;

  std::vector<double> grid(const ProblemConstants& constants) const;
  double effective_lambda(const ProblemConstants& constants) const;
  void validate(const World& world) const;
};

struct TraceRow {
  long long t = 0;
  std::string phase;  // explore | bin-<l> | exploit | uniform
  int bin = -1;       // -1 => NA
  Action action;
  int chosen = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  int opt_in_candidates = -1;  // -1 => NA
};

struct RegretTrace {
  std::vector<TraceRow> rows;
  double total_regret = 0.0;
  std::map<std::string, long long> phase_counts;
  std::map<std::string, double> stats;
  std::vector<std::string> warnings;
  // supcb diagnostics: rounds per bin (index 0 = exploit bucket) and the final
  // per-bin design matrices, so tests can recompute them from the rows.
  std::vector<long long> bin_counts;
  std::vector<Mat> bin_design;

  double cum_regret_at(long long t) const;
};

// One discretized action: ascending items plus a grid index per item.
struct GridCandidate {
  std::vector<int> items;
  std::vector<int> gidx;

  Action to_action(const std::vector<double>& grid) const;
};

// All (assortment, price-assignment) pairs with |S| <= K, lexicographic order;
// throws when the count exceeds cap.
std::vector<GridCandidate> enumerate_candidates(int N, int K, int G, long long cap);

// Price assignments for one fixed assortment, lexicographic order.
std::vector<GridCandidate> enumerate_price_candidates(const std::vector<int>& items,
                                                      int G, long long cap);

struct UncertaintyResult {
  std::vector<double> w;  // one per offered item
  double W = 0.0;
};

// w_i = width_scale * 16 sqrt(3) ||x_i||_{H^-1} (sqrt(log_union) + sqrt(lambda) W_bound)
// W   = 4e^2 P sqrt(2 sum q_i q_0 w_i^2) + 20 P max w_i^2, probabilities at theta0.
UncertaintyResult uncertainty_levels(const Mat& bin_hessian, const Vec& theta0,
                                     const ItemCatalog& context, const Action& action,
                                     double P, double lambda, double W_bound,
                                     double log_union, double width_scale);

// -L_t(theta) for ||theta|| <= W, -inf outside; uniform prior on the W-ball.
double ts_posterior_log_density(const Dataset& history, const Vec& theta, double W);

RegretTrace run_supcb(const World& world, const OnlineConfig& config, Rng& rng);
RegretTrace run_supcb_fixed_assortment(const World& world, const OnlineConfig& config,
                                       Rng& rng);
RegretTrace run_ts(const World& world, const OnlineConfig& config, Rng& rng);
RegretTrace run_ucb_mle(const World& world, const OnlineConfig& config, Rng& rng);

// Uniform draw over the discretized candidate set each round.
RegretTrace run_uniform_baseline(const World& world, const OnlineConfig& config,
                                 Rng& rng);

// Dispatch on config.algorithm / fixed_assortment_mode.
RegretTrace run_online(const World& world, const OnlineConfig& config, Rng& rng);

}  // namespace japs
