#pragma once

#include <cmath>
#include <stdexcept>

#include "japs/online.hpp"

namespace japs {
namespace detail {

// True expected revenue of every candidate under the given context; the argmax
// (strict, first wins) is the per-round benchmark action.
struct Benchmark {
  int opt_index = -1;
  double opt_revenue = 0.0;
};

inline Benchmark benchmark_over(const std::vector<GridCandidate>& candidates,
                                const std::vector<double>& grid,
                                const ModelParams& params, const ItemCatalog& ctx) {
  Benchmark b;
  b.opt_revenue = -1.0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    Action a = candidates[c].to_action(grid);
    const double rev = expected_revenue(params, ctx, a);
    if (rev > b.opt_revenue + 1e-15) {
      b.opt_revenue = rev;
      b.opt_index = static_cast<int>(c);
    }
  }
  if (b.opt_index < 0) throw std::logic_error("benchmark: empty candidate set");
  return b;
}

inline void append_row(RegretTrace& trace, long long t, const std::string& phase,
                       int bin, const Action& action, int chosen, double inst_regret,
                       int opt_flag) {
  TraceRow row;
  row.t = t;
  row.phase = phase;
  row.bin = bin;
  row.action = action;
  row.chosen = chosen;
  row.inst_regret = inst_regret;
  trace.total_regret += inst_regret;
  row.cum_regret = trace.total_regret;
  row.opt_in_candidates = opt_flag;
  trace.phase_counts[phase] += 1;
  trace.rows.push_back(std::move(row));
}

// Utility table of a parameter vector over (item, grid) cells of a context.
inline Mat utility_table(const Vec& theta, const ItemCatalog& ctx,
                         const std::vector<double>& grid) {
  const int n = ctx.count();
  const int G = static_cast<int>(grid.size());
  Mat u(n, G);
  for (int i = 1; i <= n; ++i)
    for (int g = 0; g < G; ++g)
      u(i - 1, g) = augmented_feature(ctx.feature(i), grid[static_cast<size_t>(g)]).dot(theta);
  return u;
}

// Revenue of a candidate from a per-cell utility matrix.
inline double candidate_revenue(const GridCandidate& c, const Mat& util,
                                const std::vector<double>& grid) {
  double umax = 0.0;
  for (size_t j = 0; j < c.items.size(); ++j)
    umax = std::max(umax, std::min(util(c.items[j] - 1, c.gidx[j]), kUtilityClamp));
  double denom = std::exp(-umax), numer = 0.0;
  for (size_t j = 0; j < c.items.size(); ++j) {
    const double u = std::min(std::max(util(c.items[j] - 1, c.gidx[j]), -kUtilityClamp),
                              kUtilityClamp);
    const double e = std::exp(u - umax);
    denom += e;
    numer += grid[static_cast<size_t>(c.gidx[j])] * e;
  }
  return numer / denom;
}

}  // namespace detail
}  // namespace japs
