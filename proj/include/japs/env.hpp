#pragma once

#include <cstdint>
#include <string>

#include "japs/estimation.hpp"

namespace japs {

enum class ContextMode { fixed, iid_per_round };
enum class FeatureStyle { nonneg_unit_ball, canonical };

std::string to_string(ContextMode m);
std::string to_string(FeatureStyle s);
ContextMode context_mode_from_string(const std::string& s);
FeatureStyle feature_style_from_string(const std::string& s);

struct EnvironmentSpec {
  int d = 2;
  int N = 6;
  int K = 2;
  double W = 1.0;
  double L0 = 0.5;
  ContextMode context_mode = ContextMode::fixed;
  FeatureStyle feature_style = FeatureStyle::nonneg_unit_ball;
  std::uint64_t seed = 0;

  void validate() const;
};

// A concrete instantiated problem: catalog, true parameters, constants.
struct World {
  EnvironmentSpec spec;
  ItemCatalog catalog;
  ModelParams params;
  ProblemConstants constants;

  // Context faced at round t (1-based). Fixed mode returns the base catalog;
  // iid mode redraws features deterministically from (spec.seed, t).
  ItemCatalog context(long long t) const;

  // Audits ||x_i|| <= 1, ||theta|| <= W, phi' x_i >= L0.
  void audit() const;
};

// Draws a world satisfying the three feasibility inequalities; rejection loop
// capped at 10000 attempts, error names the violated inequality.
World generate_environment(const EnvironmentSpec& spec, Rng& rng);

struct BehaviorPolicy {
  enum class Kind { uniform_random, fixed_action_mix, epsilon_optimal };
  Kind kind = Kind::uniform_random;
  // uniform_random draws uniformly over the finite action space shared with the
  // optimizers: every (assortment, per-item grid price) pair with 1 <= |S| <= K,
  // prices on the evenly spaced grid of `grid_points` levels spanning [0, P].
  int grid_points = 5;
  std::vector<Action> mix_actions;   // fixed_action_mix
  std::vector<double> mix_weights;   // same length, positive
  double epsilon = 0.1;              // epsilon_optimal
  Action optimal_action;             // epsilon_optimal

  Action draw(const World& world, Rng& rng) const;
};

// n logged rounds under the policy; choices sampled from the true model.
Dataset generate_offline_dataset(const World& world, const BehaviorPolicy& policy,
                                 int n, Rng& rng);

// Evenly spaced grid of G points spanning [0, P].
std::vector<double> uniform_grid(double P, int points);

}  // namespace japs
