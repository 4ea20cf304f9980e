#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "japs/online.hpp"
#include "online_common.hpp"

namespace japs {

double ts_posterior_log_density(const Dataset& history, const Vec& theta, double W) {
  if (theta.norm() > W) return -std::numeric_limits<double>::infinity();
  return -neg_log_likelihood_compiled(compile_dataset(history), theta, 0.0);
}

namespace {

using detail::append_row;
using detail::Benchmark;
using detail::benchmark_over;

// Flattened history: one row per offered item, so that the log-likelihood of a
// proposal is a single matrix-vector product plus a pass over the segments.
// With utilities clamped to +-40 the raw exp sum cannot overflow, which lets
// the pass skip per-segment max shifts.
struct FlatHistory {
  struct Segment {
    int start = 0;
    int len = 0;
    int chosen_pos = -1;  // -1 = outside option
  };

  Mat X;  // capacity rows x dim
  int used = 0;
  std::vector<Segment> segments;

  explicit FlatHistory(int dim) : X(64, dim) {}

  void push(const ItemCatalog& ctx, const Action& action, int chosen) {
    Segment seg;
    seg.start = used;
    seg.len = action.size();
    for (int i = 0; i < action.size(); ++i) {
      if (used == X.rows()) {
        Mat grown(X.rows() * 2, X.cols());
        grown.topRows(X.rows()) = X;
        X.swap(grown);
      }
      X.row(used++) = augmented_feature(
          ctx.feature(action.assortment[static_cast<size_t>(i)]),
          action.prices[static_cast<size_t>(i)]);
      if (action.assortment[static_cast<size_t>(i)] == chosen) seg.chosen_pos = i;
    }
    segments.push_back(seg);
  }

  double log_likelihood(const Vec& theta) const {
    if (used == 0) return 0.0;
    const Eigen::ArrayXd u =
        (X.topRows(used) * theta).array().min(kUtilityClamp).max(-kUtilityClamp);
    const Eigen::ArrayXd e = u.exp();
    double ll = 0.0;
    for (const Segment& seg : segments) {
      double sum = 0.0;
      for (int i = seg.start; i < seg.start + seg.len; ++i) sum += e(i);
      ll -= std::log1p(sum);
      if (seg.chosen_pos >= 0) ll += u(seg.start + seg.chosen_pos);
    }
    return ll;
  }

  // Contribution of the most recent record; keeps the chain's cached density
  // current without a full recomputation.
  double last_segment_log_likelihood(const Vec& theta) const {
    const Segment& seg = segments.back();
    double sum = 0.0, uc = 0.0;
    for (int i = seg.start; i < seg.start + seg.len; ++i) {
      const double u = std::min(std::max(X.row(i).dot(theta), -kUtilityClamp),
                                kUtilityClamp);
      sum += std::exp(u);
      if (i - seg.start == seg.chosen_pos) uc = u;
    }
    return uc - std::log1p(sum);
  }
};

int snap_to_grid(const std::vector<double>& grid, double price) {
  int best = 0;
  double best_dist = std::abs(grid[0] - price);
  for (size_t g = 1; g < grid.size(); ++g) {
    const double dist = std::abs(grid[g] - price);
    if (dist < best_dist - 1e-15) {
      best = static_cast<int>(g);
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

RegretTrace run_ts(const World& world, const OnlineConfig& config, Rng& rng) {
  config.validate(world);
  if (config.algorithm != OnlineAlgo::ts)
    throw std::invalid_argument("run_ts: config.algorithm must be ts");

  const std::vector<double> grid = config.grid(world.constants);
  const int G = static_cast<int>(grid.size());
  const int dim = 2 * world.spec.d;
  const double W = world.params.W;
  const double P = world.constants.P;
  const bool fixed_ctx = world.spec.context_mode == ContextMode::fixed;

  const std::vector<GridCandidate> candidates =
      enumerate_candidates(world.spec.N, world.spec.K, G, config.action_cap);
  Benchmark fixed_bench;
  if (fixed_ctx) fixed_bench = benchmark_over(candidates, grid, world.params, world.catalog);

  FlatHistory history(dim);
  Vec theta = uniform_ball(dim, W, rng);
  double theta_ll = 0.0;  // log-likelihood of the chain state on current history
  long long proposed = 0, accepted = 0;

  // Rolling acceptance-rate monitor: a chain that accepts almost never or
  // almost always over a full window is poorly tuned, which degrades the
  // sampled utilities without making the run invalid.
  constexpr long long kAcceptWindow = 500;
  long long window_proposed = 0, window_accepted = 0, bad_windows = 0, windows = 0;
  double first_bad_rate = 0.0;

  auto mh_steps = [&](int steps) {
    for (int s = 0; s < steps; ++s) {
      Vec cand = theta;
      for (int i = 0; i < dim; ++i) cand(i) += config.mh_proposal_scale * rng.normal();
      ++proposed;
      ++window_proposed;
      if (cand.norm() <= W) {  // uniform prior on the ball: zero density outside
        const double cand_ll = history.log_likelihood(cand);
        if (std::log(std::max(rng.uniform01(), 1e-300)) < cand_ll - theta_ll) {
          theta = cand;
          theta_ll = cand_ll;
          ++accepted;
          ++window_accepted;
        }
      }
      if (window_proposed == kAcceptWindow) {
        const double rate =
            static_cast<double>(window_accepted) / static_cast<double>(window_proposed);
        ++windows;
        if (rate < 0.05 || rate > 0.95) {
          if (bad_windows == 0) first_bad_rate = rate;
          ++bad_windows;
        }
        window_proposed = window_accepted = 0;
      }
    }
  };

  RegretTrace trace;
  for (long long t = 1; t <= config.T; ++t) {
    const ItemCatalog ctx = fixed_ctx ? world.catalog : world.context(t);
    mh_steps(t == 1 ? config.mh_burn_in + config.mh_steps : config.mh_steps);

    const ModelParams sampled = ModelParams::from_stacked(theta, W);
    std::vector<double> alpha, beta;
    for (int i = 1; i <= ctx.count(); ++i) {
      alpha.push_back(sampled.psi.dot(ctx.feature(i)));
      beta.push_back(std::max(sampled.phi.dot(ctx.feature(i)), 1e-6));
    }
    const OracleSolution sol =
        best_joint_assortment_pricing(alpha, beta, world.spec.K, P);

    std::vector<std::pair<int, int>> picks;  // (item, grid index), sorted by item
    for (size_t i = 0; i < sol.assortment.size(); ++i)
      picks.emplace_back(sol.assortment[i], snap_to_grid(grid, sol.prices[i]));
    std::sort(picks.begin(), picks.end());
    Action a;
    for (const auto& [item, g] : picks) {
      a.assortment.push_back(item);
      a.prices.push_back(grid[static_cast<size_t>(g)]);
    }

    const int chosen = sample_choice(world.params, ctx, a, rng);
    history.push(ctx, a, chosen);
    theta_ll += history.last_segment_log_likelihood(theta);

    const Benchmark bench =
        fixed_ctx ? fixed_bench : benchmark_over(candidates, grid, world.params, ctx);
    append_row(trace, t, "exploit", -1, a, chosen,
               bench.opt_revenue - expected_revenue(world.params, ctx, a), -1);
  }

  trace.stats["mh_accept_rate"] =
      proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  if (bad_windows > 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "mh_accept_rate_out_of_range: %.3f in %lld of %lld windows of %lld "
                  "proposals (healthy range [0.05, 0.95])",
                  first_bad_rate, bad_windows, windows, kAcceptWindow);
    trace.warnings.emplace_back(buf);
  }
  return trace;
}

}  // namespace japs
