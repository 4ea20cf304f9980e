#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "japs/online.hpp"
#include "online_common.hpp"

namespace japs {

std::string to_string(OnlineAlgo a) {
  switch (a) {
    case OnlineAlgo::supcb: return "supcb";
    case OnlineAlgo::ts: return "ts";
    case OnlineAlgo::ucb_mle: return "ucb_mle";
  }
  throw std::logic_error("unknown algorithm");
}

OnlineAlgo online_algo_from_string(const std::string& s) {
  if (s == "supcb") return OnlineAlgo::supcb;
  if (s == "ts") return OnlineAlgo::ts;
  if (s == "ucb-mle" || s == "ucb_mle") return OnlineAlgo::ucb_mle;
  throw std::invalid_argument("unknown algorithm: " + s);
}

std::vector<double> OnlineConfig::grid(const ProblemConstants& constants) const {
  if (!price_grid.empty()) {
    for (size_t g = 1; g < price_grid.size(); ++g)
      if (price_grid[g] <= price_grid[g - 1])
        throw std::invalid_argument("config: price grid must be strictly ascending");
    if (price_grid.front() < 0.0 || price_grid.back() > constants.P + 1e-9)
      throw std::invalid_argument("config: price grid outside [0, P]");
    return price_grid;
  }
  return uniform_grid(constants.P, grid_points);
}

double OnlineConfig::effective_lambda(const ProblemConstants& constants) const {
  if (lambda > 0.0) return lambda;
  return constants.Pbar;
}

void OnlineConfig::validate(const World& world) const {
  if (T < 1) throw std::invalid_argument("config: T must be >= 1");
  if (algorithm == OnlineAlgo::supcb &&
      effective_lambda(world.constants) < world.constants.Pbar - 1e-9)
    throw std::invalid_argument("config: supcb requires lambda >= Pbar");
  if (mh_steps < 1 || mh_burn_in < 0 || mh_proposal_scale <= 0.0)
    throw std::invalid_argument("config: bad posterior sampler controls");
  if (c_seq <= 0.0) throw std::invalid_argument("config: c_seq must be positive");
  if (width_scale <= 0.0) throw std::invalid_argument("config: width_scale must be positive");
  if (tau_explore < 1) throw std::invalid_argument("config: tau_explore must be >= 1");
  if (fixed_assortment_mode) {
    if (fixed_assortment.empty())
      throw std::invalid_argument("config: fixed assortment mode needs items");
    int prev = 0;
    for (int item : fixed_assortment) {
      if (item <= prev || item > world.spec.N)
        throw std::invalid_argument("config: fixed assortment must be ascending and in range");
      prev = item;
    }
    if (static_cast<int>(fixed_assortment.size()) > world.spec.K)
      throw std::invalid_argument("config: fixed assortment larger than K");
  }
  grid(world.constants);
}

Action GridCandidate::to_action(const std::vector<double>& grid) const {
  Action a;
  a.assortment = items;
  for (int g : gidx) a.prices.push_back(grid[static_cast<size_t>(g)]);
  return a;
}

double RegretTrace::cum_regret_at(long long t) const {
  if (rows.empty() || t < 1) return 0.0;
  const size_t idx = std::min(static_cast<size_t>(t), rows.size()) - 1;
  return rows[idx].cum_regret;
}

std::vector<GridCandidate> enumerate_candidates(int N, int K, int G, long long cap) {
  if (N < 1 || K < 1 || G < 1)
    throw std::invalid_argument("enumerate_candidates: need N, K, G >= 1");
  std::vector<GridCandidate> out;
  std::vector<int> items;
  std::function<void(int)> rec = [&](int next) {
    for (int item = next; item <= N; ++item) {
      items.push_back(item);
      // all grid assignments for this assortment, odometer order
      std::vector<int> g(items.size(), 0);
      while (true) {
        if (static_cast<long long>(out.size()) >= cap)
          throw std::invalid_argument(
              "enumerate_candidates: discretized action space exceeds cap of " +
              std::to_string(cap));
        out.push_back(GridCandidate{items, g});
        int pos = static_cast<int>(g.size()) - 1;
        while (pos >= 0 && g[static_cast<size_t>(pos)] == G - 1) {
          g[static_cast<size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
        ++g[static_cast<size_t>(pos)];
      }
      if (static_cast<int>(items.size()) < std::min(K, N)) rec(item + 1);
      items.pop_back();
    }
  };
  rec(1);
  return out;
}

std::vector<GridCandidate> enumerate_price_candidates(const std::vector<int>& items,
                                                      int G, long long cap) {
  if (items.empty() || G < 1)
    throw std::invalid_argument("enumerate_price_candidates: need items and G >= 1");
  std::vector<GridCandidate> out;
  std::vector<int> g(items.size(), 0);
  while (true) {
    if (static_cast<long long>(out.size()) >= cap)
      throw std::invalid_argument(
          "enumerate_price_candidates: discretized action space exceeds cap of " +
          std::to_string(cap));
    out.push_back(GridCandidate{items, g});
    int pos = static_cast<int>(g.size()) - 1;
    while (pos >= 0 && g[static_cast<size_t>(pos)] == G - 1) {
      g[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++g[static_cast<size_t>(pos)];
  }
  return out;
}

UncertaintyResult uncertainty_levels(const Mat& bin_hessian, const Vec& theta0,
                                     const ItemCatalog& context, const Action& action,
                                     double P, double lambda, double W_bound,
                                     double log_union, double width_scale) {
  Eigen::LLT<Mat> llt(bin_hessian);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("uncertainty_levels: bin Hessian not positive definite");
  const double mult =
      width_scale * 16.0 * std::sqrt(3.0) * (std::sqrt(log_union) + std::sqrt(lambda) * W_bound);

  UncertaintyResult out;
  std::vector<double> u;
  for (int i = 0; i < action.size(); ++i) {
    const Vec x = augmented_feature(context.feature(action.assortment[static_cast<size_t>(i)]),
                                    action.prices[static_cast<size_t>(i)]);
    out.w.push_back(mult * std::sqrt(x.dot(llt.solve(x))));
    u.push_back(std::min(std::max(x.dot(theta0), -kUtilityClamp), kUtilityClamp));
  }

  double umax = 0.0;
  for (double ui : u) umax = std::max(umax, ui);
  double denom = std::exp(-umax);
  for (double ui : u) denom += std::exp(ui - umax);
  const double q0 = std::exp(-umax) / denom;

  double dot = 0.0, wmax2 = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    const double qi = std::exp(u[i] - umax) / denom;
    dot += qi * q0 * out.w[i] * out.w[i];
    wmax2 = std::max(wmax2, out.w[i] * out.w[i]);
  }
  const double fourE2 = 4.0 * std::exp(2.0);
  out.W = fourE2 * P * std::sqrt(2.0 * dot) + 20.0 * P * wmax2;
  return out;
}

namespace {

using detail::append_row;
using detail::Benchmark;
using detail::benchmark_over;
using detail::candidate_revenue;
using detail::utility_table;

struct SupCbCore {
  const World& world;
  const OnlineConfig& config;
  Rng& rng;

  std::vector<double> grid;
  double lambda, P, Pbar, W, kappa, log_union;
  int N, G, dim, J, nbins;
  long long T;

  std::vector<GridCandidate> candidates;
  std::vector<Dataset> bin_data;      // 1-based: index 0 unused
  std::vector<Mat> V;                 // raw design per bin
  std::vector<Mat> H0;                // lambda*I + Fisher at theta0 per bin
  std::vector<Eigen::LLT<Mat>> H0_llt;
  std::vector<bool> H0_dirty;
  std::vector<FitResult> bin_fit;     // regularized MLE per bin
  std::vector<bool> fit_dirty;
  Vec theta0;

  RegretTrace trace;

  SupCbCore(const World& w, const OnlineConfig& c, Rng& r, bool fixed_mode)
      : world(w), config(c), rng(r) {
    config.validate(world);
    if (config.algorithm != OnlineAlgo::supcb)
      throw std::invalid_argument("run_supcb: config.algorithm must be supcb");
    grid = config.grid(world.constants);
    lambda = config.effective_lambda(world.constants);
    P = world.constants.P;
    Pbar = world.constants.Pbar;
    W = world.params.W;
    kappa = world.constants.kappa_lb;
    N = world.spec.N;
    G = static_cast<int>(grid.size());
    dim = 2 * world.spec.d;
    T = config.T;
    J = static_cast<int>(std::ceil(0.5 * std::log2(static_cast<double>(T))));
    nbins = J + 1;
    log_union = std::log((fixed_mode ? static_cast<double>(world.spec.K)
                                     : static_cast<double>(N)) *
                         static_cast<double>(T));
    if (fixed_mode)
      candidates = enumerate_price_candidates(config.fixed_assortment, G, config.action_cap);
    else
      candidates = enumerate_candidates(N, world.spec.K, G, config.action_cap);

    bin_data.assign(static_cast<size_t>(nbins) + 1, Dataset{});
    V.assign(static_cast<size_t>(nbins) + 1, Mat::Zero(dim, dim));
    H0.assign(static_cast<size_t>(nbins) + 1, Mat::Zero(dim, dim));
    H0_llt.resize(static_cast<size_t>(nbins) + 1);
    H0_dirty.assign(static_cast<size_t>(nbins) + 1, true);
    bin_fit.assign(static_cast<size_t>(nbins) + 1, FitResult{});
    fit_dirty.assign(static_cast<size_t>(nbins) + 1, true);
    trace.bin_counts.assign(static_cast<size_t>(nbins) + 1, 0);
  }

  const Eigen::LLT<Mat>& h0_factor(int ell) {
    if (H0_dirty[static_cast<size_t>(ell)]) {
      H0_llt[static_cast<size_t>(ell)].compute(H0[static_cast<size_t>(ell)]);
      if (H0_llt[static_cast<size_t>(ell)].info() != Eigen::Success)
        throw std::runtime_error("supcb: bin Hessian not positive definite");
      H0_dirty[static_cast<size_t>(ell)] = false;
    }
    return H0_llt[static_cast<size_t>(ell)];
  }

  const Vec& bin_theta(int ell) {
    if (fit_dirty[static_cast<size_t>(ell)]) {
      FitConfig fc;
      fc.lambda = lambda;
      if (bin_fit[static_cast<size_t>(ell)].theta_hat.size() == dim)
        fc.warm_start = bin_fit[static_cast<size_t>(ell)].theta_hat;
      bin_fit[static_cast<size_t>(ell)] =
          fit_mle_compiled(compile_dataset(bin_data[static_cast<size_t>(ell)]), dim, fc);
      fit_dirty[static_cast<size_t>(ell)] = false;
    }
    return bin_fit[static_cast<size_t>(ell)].theta_hat;
  }

  // Width per (item, grid) cell from bin ell's Hessian at theta0.
  Mat width_table(int ell, const ItemCatalog& ctx) {
    const Eigen::LLT<Mat>& llt = h0_factor(ell);
    const double mult = config.width_scale * 16.0 * std::sqrt(3.0) *
                        (std::sqrt(log_union) + std::sqrt(lambda) * W);
    Mat wtab(N, G);
    for (int i = 1; i <= N; ++i)
      for (int g = 0; g < G; ++g) {
        const Vec x = augmented_feature(ctx.feature(i), grid[static_cast<size_t>(g)]);
        wtab(i - 1, g) = mult * std::sqrt(x.dot(llt.solve(x)));
      }
    return wtab;
  }

  // W_{t,l} for one candidate given the width table and exp-utilities at theta0.
  double level_of(const GridCandidate& c, const Mat& wtab, const Mat& u0) const {
    double umax = 0.0;
    for (size_t j = 0; j < c.items.size(); ++j)
      umax = std::max(umax, std::min(u0(c.items[j] - 1, c.gidx[j]), kUtilityClamp));
    double denom = std::exp(-umax);
    for (size_t j = 0; j < c.items.size(); ++j) {
      const double u = std::min(std::max(u0(c.items[j] - 1, c.gidx[j]), -kUtilityClamp),
                                kUtilityClamp);
      denom += std::exp(u - umax);
    }
    const double q0 = std::exp(-umax) / denom;
    double dot = 0.0, wmax2 = 0.0;
    for (size_t j = 0; j < c.items.size(); ++j) {
      const double u = std::min(std::max(u0(c.items[j] - 1, c.gidx[j]), -kUtilityClamp),
                                kUtilityClamp);
      const double qi = std::exp(u - umax) / denom;
      const double w = wtab(c.items[j] - 1, c.gidx[j]);
      dot += qi * q0 * w * w;
      wmax2 = std::max(wmax2, w * w);
    }
    return 4.0 * std::exp(2.0) * P * std::sqrt(2.0 * dot) + 20.0 * P * wmax2;
  }

  void feed_bin(int ell, const ItemCatalog& ctx, const Action& action, int chosen,
                bool theta0_ready) {
    bin_data[static_cast<size_t>(ell)].push(ctx, action, chosen);
    const CompiledRecord rec = compile_record(bin_data[static_cast<size_t>(ell)].records.back());
    for (const Vec& x : rec.x)
      V[static_cast<size_t>(ell)].noalias() += x * x.transpose();
    if (theta0_ready) {
      record_fisher_add(rec, dim, theta0, H0[static_cast<size_t>(ell)]);
      H0_dirty[static_cast<size_t>(ell)] = true;
    }
    fit_dirty[static_cast<size_t>(ell)] = true;
    trace.bin_counts[static_cast<size_t>(ell)] += 1;
  }

  void init_theta0() {
    if (bin_data[static_cast<size_t>(nbins)].size() > 0) {
      FitConfig fc;
      fc.lambda = 1e-6;
      theta0 = fit_mle_compiled(compile_dataset(bin_data[static_cast<size_t>(nbins)]), dim, fc)
                   .theta_hat;
    } else {
      theta0 = Vec::Zero(dim);
      trace.warnings.push_back("theta0_bin_empty");
    }
    for (int ell = 1; ell <= nbins; ++ell) {
      H0[static_cast<size_t>(ell)] = lambda * Mat::Identity(dim, dim);
      for (const DatasetRecord& r : bin_data[static_cast<size_t>(ell)].records)
        record_fisher_add(compile_record(r), dim, theta0, H0[static_cast<size_t>(ell)]);
      H0_dirty[static_cast<size_t>(ell)] = true;
    }
  }

  void finalize() {
    trace.bin_design.assign(V.begin(), V.end());
    trace.stats["bins"] = static_cast<double>(nbins);
  }
};

// Exploration criterion: max_{j, p in [0,P]} ||x_j(p)||_{(kappa V + lambda I)^-1}
// against the burn-in threshold. The norm is a convex parabola in p, so the
// continuous max is attained at p = 0 or p = P.
double exploration_worst_norm(const Mat& V, double kappa, double lambda,
                              const ItemCatalog& ctx, double P) {
  const int dim = 2 * ctx.d;
  Mat M = kappa * V + lambda * Mat::Identity(dim, dim);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("supcb: exploration matrix not positive definite");
  double worst = 0.0;
  for (int j = 1; j <= ctx.count(); ++j) {
    for (double p : {0.0, P}) {
      const Vec x = augmented_feature(ctx.feature(j), p);
      worst = std::max(worst, std::sqrt(x.dot(llt.solve(x))));
    }
  }
  return worst;
}

RegretTrace run_supcb_impl(const World& world, const OnlineConfig& config, Rng& rng,
                           bool fixed_mode) {
  SupCbCore core(world, config, rng, fixed_mode);
  const long long T = core.T;
  const bool fixed_ctx = world.spec.context_mode == ContextMode::fixed;

  Benchmark fixed_bench;
  if (fixed_ctx)
    fixed_bench = benchmark_over(core.candidates, core.grid, world.params, world.catalog);

  const double crit16 =
      std::min(1.0 / (144.0 * std::sqrt(2.0 * world.spec.d * core.log_union)),
               1.0 / (24.0 * std::sqrt(core.lambda) * core.W));
  const long long cap =
      config.explore_cap < 0 ? T : std::min(config.explore_cap, T);

  long long t = 1;

  if (!fixed_mode) {
    // Initial exploration: singletons chosen for maximal design uncertainty,
    // assigned round-robin to the emptiest violating bin.
    while (t <= T) {
      const ItemCatalog ctx = fixed_ctx ? world.catalog : world.context(t);
      int target = -1;
      long long target_count = 0;
      bool any_violating = false;
      for (int ell = 1; ell <= core.nbins; ++ell) {
        const double worst = exploration_worst_norm(core.V[static_cast<size_t>(ell)],
                                                    core.kappa, core.lambda, ctx, core.P);
        if (worst > crit16) {
          any_violating = true;
          const long long cnt = core.trace.bin_counts[static_cast<size_t>(ell)];
          if (target < 0 || cnt < target_count) {
            target = ell;
            target_count = cnt;
          }
        }
      }
      if (!any_violating) break;
      if (t > cap) {
        core.trace.warnings.push_back("exploration_criterion_unmet");
        break;
      }

      Mat M = core.kappa * core.V[static_cast<size_t>(target)] +
              core.lambda * Mat::Identity(core.dim, core.dim);
      Eigen::LLT<Mat> llt(M);
      double best = -1.0;
      int best_item = 1, best_g = 0;
      for (int j = 1; j <= core.N; ++j)
        for (int g = 0; g < core.G; ++g) {
          const Vec x = augmented_feature(ctx.feature(j), core.grid[static_cast<size_t>(g)]);
          const double norm2 = x.dot(llt.solve(x));
          if (norm2 > best + 1e-15) {
            best = norm2;
            best_item = j;
            best_g = g;
          }
        }
      Action a;
      a.assortment = {best_item};
      a.prices = {core.grid[static_cast<size_t>(best_g)]};
      const int chosen = sample_choice(world.params, ctx, a, rng);
      core.feed_bin(target, ctx, a, chosen, false);

      const Benchmark bench =
          fixed_ctx ? fixed_bench
                    : benchmark_over(core.candidates, core.grid, world.params, ctx);
      append_row(core.trace, t, "explore", target, a, chosen,
                 bench.opt_revenue - expected_revenue(world.params, ctx, a), -1);
      ++t;
    }
  } else {
    // Fixed-length exploration with i.i.d. uniform grid prices, bins filled in
    // blocks of tau rounds.
    if (world.spec.context_mode != ContextMode::iid_per_round)
      throw std::invalid_argument(
          "run_supcb_fixed_assortment: environment must use iid_per_round contexts");
    const long long explore_len =
        std::min(T, static_cast<long long>(core.nbins) * config.tau_explore);
    for (; t <= explore_len; ++t) {
      const ItemCatalog ctx = world.context(t);
      Action a;
      a.assortment = config.fixed_assortment;
      for (size_t i = 0; i < config.fixed_assortment.size(); ++i)
        a.prices.push_back(core.grid[static_cast<size_t>(core.rng.uniform_int(core.G))]);
      const int chosen = sample_choice(world.params, ctx, a, rng);
      const int bin = static_cast<int>(
          std::min(static_cast<long long>(core.nbins), (t - 1) / config.tau_explore + 1));
      core.feed_bin(bin, ctx, a, chosen, false);
      const Benchmark bench =
          benchmark_over(core.candidates, core.grid, world.params, ctx);
      append_row(core.trace, t, "explore", bin, a, chosen,
                 bench.opt_revenue - expected_revenue(world.params, ctx, a), -1);
    }
  }

  if (t > T) {
    core.finalize();
    return core.trace;
  }

  core.init_theta0();
  const int J_eff = std::max(core.J, 1);
  const double exploit_gate = 1.0 / std::sqrt(static_cast<double>(T));

  for (; t <= T; ++t) {
    const ItemCatalog ctx = fixed_ctx ? world.catalog : world.context(t);
    const Benchmark bench =
        fixed_ctx ? fixed_bench
                  : benchmark_over(core.candidates, core.grid, world.params, ctx);
    const Mat u0 = utility_table(core.theta0, ctx, core.grid);

    std::vector<int> alive(core.candidates.size());
    for (size_t c = 0; c < alive.size(); ++c) alive[c] = static_cast<int>(c);

    int opt_flag = -1;
    bool played = false;
    for (int ell = 1; ell <= J_eff && !played; ++ell) {
      const Mat wtab = core.width_table(ell, ctx);

      double level_max = -1.0;
      int level_arg = alive.front();
      for (int c : alive) {
        const double lv = core.level_of(core.candidates[static_cast<size_t>(c)], wtab, u0);
        if (lv > level_max + 1e-15) {
          level_max = lv;
          level_arg = c;
        }
      }

      if (level_max > std::ldexp(1.0, -ell)) {
        // (a) explore the most uncertain surviving candidate inside bin ell
        const Action a = core.candidates[static_cast<size_t>(level_arg)].to_action(core.grid);
        const int chosen = sample_choice(world.params, ctx, a, rng);
        core.feed_bin(ell, ctx, a, chosen, true);
        append_row(core.trace, t, "bin-" + std::to_string(ell), ell, a, chosen,
                   bench.opt_revenue - expected_revenue(world.params, ctx, a), opt_flag);
        played = true;
        break;
      }

      const Mat u_hat = utility_table(core.bin_theta(ell), ctx, core.grid);
      double rev_max = -1.0;
      int rev_arg = alive.front();
      std::vector<double> revs(alive.size());
      for (size_t k = 0; k < alive.size(); ++k) {
        const GridCandidate& cand = core.candidates[static_cast<size_t>(alive[k])];
        double rev;
        {
          double umax = 0.0;
          for (size_t j = 0; j < cand.items.size(); ++j) {
            const double u = u_hat(cand.items[j] - 1, cand.gidx[j]) +
                             wtab(cand.items[j] - 1, cand.gidx[j]);
            umax = std::max(umax, std::min(u, kUtilityClamp));
          }
          double denom = std::exp(-umax), numer = 0.0;
          for (size_t j = 0; j < cand.items.size(); ++j) {
            double u = u_hat(cand.items[j] - 1, cand.gidx[j]) +
                       wtab(cand.items[j] - 1, cand.gidx[j]);
            u = std::min(std::max(u, -kUtilityClamp), kUtilityClamp);
            const double e = std::exp(u - umax);
            denom += e;
            numer += core.grid[static_cast<size_t>(cand.gidx[j])] * e;
          }
          rev = numer / denom;
        }
        revs[k] = rev;
        if (rev > rev_max + 1e-15) {
          rev_max = rev;
          rev_arg = alive[k];
        }
      }

      if (level_max <= exploit_gate || ell == J_eff) {
        // (b) exploit; the round goes to the side bucket and never feeds a fit
        const Action a = core.candidates[static_cast<size_t>(rev_arg)].to_action(core.grid);
        const int chosen = sample_choice(world.params, ctx, a, rng);
        core.trace.bin_counts[0] += 1;
        append_row(core.trace, t, "exploit", 0, a, chosen,
                   bench.opt_revenue - expected_revenue(world.params, ctx, a), opt_flag);
        played = true;
        break;
      }

      // (c) eliminate candidates more than 2^-ell below the bin-ell UCB leader
      std::vector<int> survivors;
      const double floor_rev = rev_max - std::ldexp(1.0, -ell);
      for (size_t k = 0; k < alive.size(); ++k)
        if (revs[k] >= floor_rev) survivors.push_back(alive[k]);
      alive.swap(survivors);
      const bool opt_alive =
          std::find(alive.begin(), alive.end(), bench.opt_index) != alive.end();
      opt_flag = (opt_flag != 0 && opt_alive) ? 1 : 0;
      if (alive.empty()) throw std::logic_error("supcb: eliminated every candidate");
    }
    if (!played) throw std::logic_error("supcb: round ended with no action");
  }

  core.finalize();
  return core.trace;
}

}  // namespace

RegretTrace run_supcb(const World& world, const OnlineConfig& config, Rng& rng) {
  if (config.fixed_assortment_mode)
    return run_supcb_impl(world, config, rng, true);
  return run_supcb_impl(world, config, rng, false);
}

RegretTrace run_supcb_fixed_assortment(const World& world, const OnlineConfig& config,
                                       Rng& rng) {
  OnlineConfig c = config;
  c.fixed_assortment_mode = true;
  return run_supcb_impl(world, c, rng, true);
}

RegretTrace run_uniform_baseline(const World& world, const OnlineConfig& config,
                                 Rng& rng) {
  const std::vector<double> grid = config.grid(world.constants);
  const std::vector<GridCandidate> candidates = enumerate_candidates(
      world.spec.N, world.spec.K, static_cast<int>(grid.size()), config.action_cap);
  const bool fixed_ctx = world.spec.context_mode == ContextMode::fixed;
  Benchmark fixed_bench;
  if (fixed_ctx) fixed_bench = benchmark_over(candidates, grid, world.params, world.catalog);

  RegretTrace trace;
  for (long long t = 1; t <= config.T; ++t) {
    const ItemCatalog ctx = fixed_ctx ? world.catalog : world.context(t);
    const Benchmark bench =
        fixed_ctx ? fixed_bench : benchmark_over(candidates, grid, world.params, ctx);
    const GridCandidate& cand =
        candidates[static_cast<size_t>(rng.uniform_int(static_cast<int>(candidates.size())))];
    const Action a = cand.to_action(grid);
    const int chosen = sample_choice(world.params, ctx, a, rng);
    append_row(trace, t, "uniform", -1, a, chosen,
               bench.opt_revenue - expected_revenue(world.params, ctx, a), -1);
  }
  return trace;
}

RegretTrace run_online(const World& world, const OnlineConfig& config, Rng& rng) {
  if (config.fixed_assortment_mode) {
    if (config.algorithm != OnlineAlgo::supcb)
      throw std::invalid_argument("fixed assortment mode is only available for supcb");
    return run_supcb_fixed_assortment(world, config, rng);
  }
  switch (config.algorithm) {
    case OnlineAlgo::supcb: return run_supcb(world, config, rng);
    case OnlineAlgo::ts: return run_ts(world, config, rng);
    case OnlineAlgo::ucb_mle: return run_ucb_mle(world, config, rng);
  }
  throw std::logic_error("unknown algorithm");
}

}  // namespace japs
