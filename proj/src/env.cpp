#include "japs/env.hpp"

#include <cmath>
#include <stdexcept>

namespace japs {

std::string to_string(ContextMode m) {
  return m == ContextMode::fixed ? "fixed" : "iid_per_round";
}

std::string to_string(FeatureStyle s) {
  return s == FeatureStyle::nonneg_unit_ball ? "nonneg_unit_ball" : "canonical";
}

ContextMode context_mode_from_string(const std::string& s) {
  if (s == "fixed") return ContextMode::fixed;
  if (s == "iid_per_round") return ContextMode::iid_per_round;
  throw std::invalid_argument("unknown context mode: " + s);
}

FeatureStyle feature_style_from_string(const std::string& s) {
  if (s == "nonneg_unit_ball") return FeatureStyle::nonneg_unit_ball;
  if (s == "canonical") return FeatureStyle::canonical;
  throw std::invalid_argument("unknown feature style: " + s);
}

void EnvironmentSpec::validate() const {
  if (d < 1) throw std::invalid_argument("environment: d must be >= 1");
  if (N < 1) throw std::invalid_argument("environment: N must be >= 1");
  if (K < 1 || K > N) throw std::invalid_argument("environment: need 1 <= K <= N");
  if (W <= 0.0) throw std::invalid_argument("environment: W must be positive");
  if (L0 <= 0.0) throw std::invalid_argument("environment: L0 must be positive");
  if (feature_style == FeatureStyle::canonical && d != N)
    throw std::invalid_argument("environment: canonical features require d == N");
}

namespace {

// Features with nonnegative entries on the unit sphere.
Vec draw_feature(int d, Rng& rng) {
  Vec x(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) x(i) = rng.uniform01();
    norm = x.norm();
  } while (norm < 1e-9);
  return x / norm;
}

}  // namespace

World generate_environment(const EnvironmentSpec& spec, Rng& rng) {
  spec.validate();
  std::string violation = "no feasible draw found";
  for (int attempt = 0; attempt < 10000; ++attempt) {
    World w;
    w.spec = spec;
    w.catalog.d = spec.d;
    w.catalog.items.clear();
    if (spec.feature_style == FeatureStyle::canonical) {
      for (int i = 0; i < spec.N; ++i) {
        Vec e = Vec::Zero(spec.d);
        e(i) = 1.0;
        w.catalog.items.push_back(e);
      }
    } else {
      for (int i = 0; i < spec.N; ++i) w.catalog.items.push_back(draw_feature(spec.d, rng));
    }

    // phi = c * ones/sqrt(d) + perturbation, floor phi' x_i kept above L0 with
    // a 10% margin so the perturbation cannot break it.
    double min_align = 1e300;
    const Vec ones_dir = Vec::Constant(spec.d, 1.0 / std::sqrt(static_cast<double>(spec.d)));
    for (const Vec& x : w.catalog.items) min_align = std::min(min_align, ones_dir.dot(x));
    if (min_align <= 0.0) continue;
    const double c = 1.1 * spec.L0 / min_align;
    Vec phi = c * ones_dir;
    for (int i = 0; i < spec.d; ++i) phi(i) += 0.05 * c * rng.normal() / std::sqrt(static_cast<double>(spec.d));

    bool floor_ok = true;
    for (const Vec& x : w.catalog.items)
      if (phi.dot(x) < spec.L0) floor_ok = false;
    if (!floor_ok) {
      violation = "phi' x_i >= L0 failed after perturbation";
      continue;
    }
    if (phi.norm() >= spec.W) {
      violation = "||theta|| <= W: W too small to support the L0 floor (need ||phi|| < W)";
      continue;
    }

    const double budget = std::sqrt(spec.W * spec.W - phi.squaredNorm());
    Vec psi(spec.d);
    for (int i = 0; i < spec.d; ++i) psi(i) = rng.normal();
    const double r = budget * std::pow(rng.uniform01(), 1.0 / spec.d);
    psi *= (psi.norm() > 1e-12 ? r / psi.norm() : 0.0);

    w.params.psi = psi;
    w.params.phi = phi;
    w.params.W = spec.W;
    w.constants = ProblemConstants::from(spec.W, spec.K, spec.L0);
    try {
      w.audit();
    } catch (const std::exception& e) {
      violation = e.what();
      continue;
    }
    return w;
  }
  throw std::runtime_error("generate_environment: rejection cap hit; " + violation);
}

ItemCatalog World::context(long long t) const {
  if (spec.context_mode == ContextMode::fixed) return catalog;
  ItemCatalog ctx;
  ctx.d = spec.d;
  Rng ctx_rng(derive_seed(spec.seed, 0x17D1CA7E, static_cast<std::uint64_t>(t)));
  for (int i = 0; i < spec.N; ++i) {
    // Redraw until this round's features keep the price-sensitivity floor.
    Vec x;
    int guard = 0;
    do {
      x = draw_feature(spec.d, ctx_rng);
      if (++guard > 10000)
        throw std::runtime_error("context generation: cannot satisfy phi' x >= L0");
    } while (params.phi.dot(x) < spec.L0);
    ctx.items.push_back(x);
  }
  return ctx;
}

void World::audit() const {
  catalog.validate();
  if (catalog.count() != spec.N)
    throw std::runtime_error("world audit failed: catalog size != N");
  params.validate();
  for (int i = 1; i <= spec.N; ++i)
    if (params.phi.dot(catalog.feature(i)) < spec.L0 - 1e-12)
      throw std::runtime_error("world audit failed: phi' x_i >= L0 violated at item " +
                               std::to_string(i));
}

Action BehaviorPolicy::draw(const World& world, Rng& rng) const {
  switch (kind) {
    case Kind::uniform_random: {
      const int N = world.spec.N;
      const int K = world.spec.K;
      const int G = grid_points;
      const std::vector<double> grid = uniform_grid(world.constants.P, G);
      // Uniform over all (assortment, price-assignment) pairs: the assortment
      // size k carries weight C(N,k) * G^k, then the set and the per-item grid
      // levels are uniform, so every candidate action has equal probability.
      std::vector<double> weight(static_cast<size_t>(K));
      double binom = 1.0;
      double total = 0.0;
      for (int k = 1; k <= K; ++k) {
        binom *= static_cast<double>(N - k + 1) / static_cast<double>(k) * static_cast<double>(G);
        weight[static_cast<size_t>(k - 1)] = binom;
        total += binom;
      }
      double u = rng.uniform01() * total;
      int k = K;
      for (int j = 1; j <= K; ++j) {
        u -= weight[static_cast<size_t>(j - 1)];
        if (u < 0.0) {
          k = j;
          break;
        }
      }
      Action a;
      a.assortment = rng.sample_without_replacement(N, k);
      for (int i = 0; i < k; ++i)
        a.prices.push_back(grid[static_cast<size_t>(rng.uniform_int(G))]);
      return a;
    }
    case Kind::fixed_action_mix: {
      if (mix_actions.empty() || mix_actions.size() != mix_weights.size())
        throw std::invalid_argument("behavior policy: bad action mix");
      double total = 0.0;
      for (double wgt : mix_weights) {
        if (wgt <= 0.0) throw std::invalid_argument("behavior policy: weights must be positive");
        total += wgt;
      }
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      for (size_t i = 0; i < mix_actions.size(); ++i) {
        acc += mix_weights[i];
        if (u < acc) return mix_actions[i];
      }
      return mix_actions.back();
    }
    case Kind::epsilon_optimal: {
      if (rng.uniform01() < epsilon) {
        BehaviorPolicy uniform;
        return uniform.draw(world, rng);
      }
      return optimal_action;
    }
  }
  throw std::logic_error("behavior policy: unknown kind");
}

Dataset generate_offline_dataset(const World& world, const BehaviorPolicy& policy,
                                 int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("generate_offline_dataset: n must be >= 0");
  Dataset data;
  data.records.reserve(static_cast<size_t>(n));
  for (int m = 0; m < n; ++m) {
    const Action a = policy.draw(world, rng);
    a.validate(world.spec.N, world.spec.K, world.constants.P);
    const int chosen = sample_choice(world.params, world.catalog, a, rng);
    data.push(world.catalog, a, chosen);
  }
  return data;
}

std::vector<double> uniform_grid(double P, int points) {
  if (points < 1) throw std::invalid_argument("uniform_grid: need at least one point");
  if (P <= 0.0) throw std::invalid_argument("uniform_grid: P must be positive");
  std::vector<double> g;
  if (points == 1) {
    g.push_back(0.0);
    return g;
  }
  for (int i = 0; i < points; ++i)
    g.push_back(P * static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

}  // namespace japs
