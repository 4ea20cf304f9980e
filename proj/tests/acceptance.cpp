// Acceptance gates for the assortment-pricing simulator. Each criterion prints
// exactly one [PASS]/[FAIL] line with its measured statistics and elapsed time;
// tolerances and seeds are pinned here. `--only N` runs a single criterion.
// Exit code: 0 when every executed criterion passes, 1 otherwise.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "japs/io.hpp"
#include "japs/validate.hpp"

using namespace japs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

void parallel_for(int jobs, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(thread_budget(), jobs));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
        try {
          fn(j);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error.empty()) first_error = e.what();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

std::string read_bytes(const std::string& path) {
  std::ifstream ifs(path, std::ios::binary);
  std::ostringstream out;
  out << ifs.rdbuf();
  return out.str();
}

// ---------------------------------------------------------------- criterion 1
Outcome crit_derivatives() {
  const GradientCheck c = check_gradients(50, 0x6AD1E57);
  char buf[160];
  std::snprintf(buf, sizeof buf, "grad err %.2e, hess err %.2e over %d instances; tol 1e-5",
                c.max_gradient_error, c.max_hessian_error, c.instances);
  return {c.instances == 50 && c.max_gradient_error < 1e-5 && c.max_hessian_error < 1e-5,
          buf};
}

// ---------------------------------------------------------------- criterion 2
Outcome crit_sampling_law() {
  constexpr std::uint64_t kSeed = 0x5A11;
  constexpr int kDraws = 30000;
  double worst = 0.0;
  int checked = 0;
  bool ok = true;
  for (int pair = 0; pair < 10; ++pair) {
    EnvironmentSpec spec;
    spec.d = 2;
    spec.N = 5;
    spec.K = 3;
    spec.W = 1.0;
    spec.L0 = 0.4;
    spec.seed = derive_seed(kSeed, 1, static_cast<std::uint64_t>(pair));
    Rng env_rng(spec.seed);
    const World world = generate_environment(spec, env_rng);

    Rng action_rng(derive_seed(kSeed, 2, static_cast<std::uint64_t>(pair)));
    const Action action = BehaviorPolicy{}.draw(world, action_rng);
    const std::vector<double> q =
        choice_probabilities(world.params, world.catalog, action);

    std::vector<long long> counts(q.size(), 0);
    Rng draw_rng(derive_seed(kSeed, 3, static_cast<std::uint64_t>(pair)));
    for (int n = 0; n < kDraws; ++n) {
      const int chosen = sample_choice(world.params, world.catalog, action, draw_rng);
      std::size_t slot = 0;
      for (std::size_t i = 0; i < action.assortment.size(); ++i)
        if (action.assortment[i] == chosen) slot = i + 1;
      counts[slot] += 1;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double freq = static_cast<double>(counts[i]) / kDraws;
      const double sigma = std::sqrt(q[i] * (1.0 - q[i]) / kDraws);
      const double z = std::abs(freq - q[i]) / sigma;
      worst = std::max(worst, z);
      ok = ok && z <= 3.0;
      ++checked;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d outcomes over 10 pairs x %d draws, worst |z| %.2f; gate 3 sigma",
                checked, kDraws, worst);
  return {ok, buf};
}

// ---------------------------------------------------------------- criterion 3
Outcome crit_estimator_consistency() {
  constexpr std::uint64_t kSeed = 0xC0517;
  const World world = reference_world();
  std::vector<double> errors(20, 0.0);
  parallel_for(20, [&](int s) {
    Rng rng(derive_seed(kSeed, 0, static_cast<std::uint64_t>(s)));
    const Dataset data = generate_offline_dataset(world, BehaviorPolicy{}, 20000, rng);
    FitConfig fc;
    fc.lambda = 1e-6;
    fc.tolerance = 1e-6;  // the resolution floor at n=20000 sits above 1e-8
    const FitResult fit = fit_mle(data, fc);
    errors[static_cast<std::size_t>(s)] =
        fit.converged ? (fit.theta_hat - world.params.stacked()).norm() : 1e9;
  });
  int good = 0;
  double worst = 0.0;
  for (double e : errors) {
    if (e < 0.1) ++good;
    worst = std::max(worst, e);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/20 seeds with ||err|| < 0.1 at n=20000 (worst %.4f); gate 18", good,
                worst);
  return {good >= 18, buf};
}

// ------------------------------------------------------- criteria 4, 5, and 8
const CoverageCheck& shared_coverage() {
  static const CoverageCheck cached = check_coverage(
      reference_world(), 200, 5000, 0.1, 40, 0xC0FE0001, thread_budget());
  return cached;
}

Outcome crit_coverage() {
  const CoverageCheck& c = shared_coverage();
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%d reps covered on all 40 directions at delta=0.1; gate 170",
                c.covered, c.reps);
  return {c.reps == 200 && c.covered >= 170, buf};
}

Outcome crit_sandwich() {
  const CoverageCheck& c = shared_coverage();
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%d reps with generalized eigenvalues in [1/3, 3]; gate 170",
                c.sandwich_ok, c.reps);
  return {c.reps == 200 && c.sandwich_ok >= 170, buf};
}

Outcome crit_pessimism() {
  const CoverageCheck& c = shared_coverage();
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%d reps with every pessimistic cell below truth; gate 170",
                c.pessimism_ok, c.reps);
  return {c.reps == 200 && c.pessimism_ok >= 170, buf};
}

// ---------------------------------------------------------------- criterion 6
Outcome crit_oracle_agreement() {
  const OracleCheck c = check_oracle(50, 41, 0x0AC1E);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d/%d within the grid gap, %d/%d dominated, identity err %.2e; "
                "gates 50/50/1e-6",
                c.agreements, c.instances, c.dominated, c.instances,
                c.max_identity_error);
  return {c.instances == 50 && c.agreements == 50 && c.dominated == 50 &&
              c.max_identity_error < 1e-6,
          buf};
}

// ---------------------------------------------------------------- criterion 7
Outcome crit_offline_curve() {
  constexpr std::uint64_t kSeed = 0x0FF1;
  const World world = reference_world();
  const int sizes[2] = {250, 4000};
  std::vector<double> gaps[2];
  gaps[0].assign(20, 0.0);
  gaps[1].assign(20, 0.0);

  parallel_for(40, [&](int job) {
    const int which = job / 20;
    const int seed_idx = job % 20;
    OfflineProblem problem;
    Rng rng(derive_seed(kSeed, static_cast<std::uint64_t>(sizes[which]),
                        static_cast<std::uint64_t>(seed_idx)));
    problem.dataset =
        generate_offline_dataset(world, BehaviorPolicy{}, sizes[which], rng);
    problem.target_catalog = world.catalog;
    problem.K = world.spec.K;
    problem.price_grid = uniform_grid(world.constants.P, 5);
    problem.delta = 0.1;
    problem.lambda = 1e-6;
    const OfflineResult result = run_lcb(problem);
    gaps[which][static_cast<std::size_t>(seed_idx)] =
        suboptimality(result, world.params, problem);
  });

  const double med_small = median_of(gaps[0]);
  const double med_large = median_of(gaps[1]);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "median gap %.4f at n=250 vs %.4f at n=4000 (ratio %.3f); gate 0.55",
                med_small, med_large, med_large / med_small);
  return {med_large < 0.55 * med_small, buf};
}

// ---------------------------------------------------------------- criterion 9
Outcome crit_elimination_safety() {
  const EliminationCheck c =
      check_elimination(reference_world(), 20, 2000, 1.0, -1, 0xE11, thread_budget());
  char buf[200];
  if (c.elimination_rounds == 0) {
    std::snprintf(buf, sizeof buf,
                  "no elimination engaged over %d seeds x 2000 rounds "
                  "(explore %lld, exploit %lld): vacuously safe",
                  c.seeds, c.explore_rounds, c.exploit_rounds);
    return {true, buf};
  }
  const double safety = static_cast<double>(c.safe_rounds) /
                        static_cast<double>(c.elimination_rounds);
  std::snprintf(buf, sizeof buf,
                "optimum alive in %lld/%lld eliminating rounds (%.1f%%); gate 95%%",
                c.safe_rounds, c.elimination_rounds, 100.0 * safety);
  return {safety >= 0.95, buf};
}

// --------------------------------------------------------------- criterion 10
Outcome crit_online_regret() {
  constexpr std::uint64_t kSeed = 0xACC10;
  constexpr long long kT = 5000;
  constexpr int kSeeds = 10;
  const World world = reference_world();

  struct Leg {
    const char* name;
    OnlineAlgo algo;
    bool uniform;
  };
  const Leg legs[4] = {{"supcb", OnlineAlgo::supcb, false},
                       {"ts", OnlineAlgo::ts, false},
                       {"ucb_mle", OnlineAlgo::ucb_mle, false},
                       {"uniform", OnlineAlgo::ts, true}};

  double finals[4][kSeeds];
  double mids[4][kSeeds];
  parallel_for(4 * kSeeds, [&](int job) {
    const int leg = job / kSeeds;
    const int s = job % kSeeds;
    OnlineConfig config;
    config.T = kT;
    config.algorithm = legs[leg].algo;
    Rng rng(derive_seed(kSeed, static_cast<std::uint64_t>(leg),
                        static_cast<std::uint64_t>(s)));
    const RegretTrace trace = legs[leg].uniform
                                  ? run_uniform_baseline(world, config, rng)
                                  : run_online(world, config, rng);
    finals[leg][s] = trace.cum_regret_at(kT);
    mids[leg][s] = trace.cum_regret_at(kT / 4);
  });

  double mean_final[4] = {0, 0, 0, 0}, mean_mid[4] = {0, 0, 0, 0};
  for (int leg = 0; leg < 4; ++leg)
    for (int s = 0; s < kSeeds; ++s) {
      mean_final[leg] += finals[leg][s] / kSeeds;
      mean_mid[leg] += mids[leg][s] / kSeeds;
    }

  bool all_pass = true;
  std::string detail;
  for (int leg = 0; leg < 3; ++leg) {
    const double ratio = mean_final[leg] / mean_mid[leg];
    const bool below = 3.0 * mean_final[leg] <= mean_final[3];
    const bool sublinear = ratio <= 2.6;
    all_pass = all_pass && below && sublinear;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s mean %.1f (3x-vs-uniform %s, growth %.2f %s)",
                  leg ? "; " : "", legs[leg].name, mean_final[leg],
                  below ? "ok" : "VIOLATED", ratio, sublinear ? "ok" : "VIOLATED");
    detail += buf;
  }
  char tail[80];
  std::snprintf(tail, sizeof tail, "; uniform mean %.1f; gates 3x and 2.6",
                mean_final[3]);
  detail += tail;
  return {all_pass, detail};
}

// --------------------------------------------------------------- criterion 11
Outcome crit_perturbation() {
  const PerturbationCheck c = check_perturbation(1000, 0x9E27);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/%d tuples violate beyond 1e-9 (worst excess %.2e); gate 0",
                c.violations, c.tuples, c.worst_excess);
  return {c.tuples == 1000 && c.violations == 0, buf};
}

// --------------------------------------------------------------- criterion 12
Outcome crit_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "japs_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  bool ok = true;
  std::string what = "regenerated byte-identical:";

  for (int round = 0; round < 2; ++round)
    save_world(reference_world(), (dir / ("world" + std::to_string(round) + ".json")).string());
  const bool world_same =
      read_bytes((dir / "world0.json").string()) == read_bytes((dir / "world1.json").string());
  ok = ok && world_same;
  what += std::string(" world=") + (world_same ? "yes" : "NO");

  const World world = reference_world();
  struct Leg {
    const char* name;
    OnlineAlgo algo;
    bool uniform;
  };
  const Leg legs[4] = {{"supcb", OnlineAlgo::supcb, false},
                       {"ts", OnlineAlgo::ts, false},
                       {"ucb_mle", OnlineAlgo::ucb_mle, false},
                       {"uniform", OnlineAlgo::ts, true}};
  for (int leg = 0; leg < 4; ++leg) {
    OnlineConfig config;
    config.T = 120;
    config.algorithm = legs[leg].algo;
    std::string bytes[2];
    for (int round = 0; round < 2; ++round) {
      Rng rng(derive_seed(0xD0, static_cast<std::uint64_t>(leg), 0));
      const RegretTrace trace = legs[leg].uniform
                                    ? run_uniform_baseline(world, config, rng)
                                    : run_online(world, config, rng);
      const fs::path path =
          dir / (std::string(legs[leg].name) + std::to_string(round) + ".csv");
      save_trace(trace, path.string());
      bytes[round] = read_bytes(path.string());
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    ok = ok && same;
    what += std::string(" ") + legs[leg].name + "=" + (same ? "yes" : "NO");
  }
  return {ok, what};
}

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;  // 0 => no pinned time budget
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "derivative-accuracy", 10.0, crit_derivatives},
    {2, "sampling-law", 10.0, crit_sampling_law},
    {3, "estimator-consistency", 120.0, crit_estimator_consistency},
    {4, "confidence-coverage", 300.0, crit_coverage},
    {5, "hessian-sandwich", 300.0, crit_sandwich},
    {6, "oracle-agreement", 60.0, crit_oracle_agreement},
    {7, "offline-learning-curve", 300.0, crit_offline_curve},
    {8, "pessimism", 300.0, crit_pessimism},
    {9, "elimination-safety", 0.0, crit_elimination_safety},
    {10, "online-regret", 1800.0, crit_online_regret},
    {11, "width-perturbation", 0.0, crit_perturbation},
    {12, "determinism", 0.0, crit_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }

  int executed = 0, failed = 0;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    ++executed;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = c.budget_seconds <= 0.0 || elapsed <= c.budget_seconds;
    const bool pass = out.pass && in_budget;
    if (!pass) ++failed;
    if (c.budget_seconds > 0.0)
      std::printf("[%s] %02d %s: %s (%.1fs, budget %.0fs)\n", pass ? "PASS" : "FAIL",
                  c.number, c.name, out.detail.c_str(), elapsed, c.budget_seconds);
    else
      std::printf("[%s] %02d %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", c.number,
                  c.name, out.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d executed, %d failed\n", executed, failed);
  return failed > 0 ? 1 : 0;
}
