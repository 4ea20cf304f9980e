#pragma once

#include <Eigen/Dense>
#include <vector>

#include "japs/rng.hpp"

namespace japs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Utilities are clamped to this range before exponentiation.
constexpr double kUtilityClamp = 40.0;

// Item features. Items are indexed 1..N on every public surface; index 0 is
// reserved for the no-purchase option.
struct ItemCatalog {
  int d = 0;
  std::vector<Vec> items;

  int count() const { return static_cast<int>(items.size()); }
  const Vec& feature(int item) const;
  void validate() const;  // dimensions consistent, ||x_i|| <= 1
};

// theta = (psi, phi) stacked, ||theta|| <= W.
struct ModelParams {
  Vec psi;
  Vec phi;
  double W = 0.0;

  int d() const { return static_cast<int>(psi.size()); }
  Vec stacked() const;
  static ModelParams from_stacked(const Vec& theta, double W);
  void validate() const;
};

// An offered assortment with per-item prices, aligned index-for-index.
struct Action {
  std::vector<int> assortment;
  std::vector<double> prices;

  int size() const { return static_cast<int>(assortment.size()); }
  void validate(int n_items, int K, double P) const;
};

// Constants induced by (W, K, L0).
struct ProblemConstants {
  double L0 = 0.0;
  double P = 0.0;
  double Pbar = 0.0;
  double kappa_lb = 0.0;

  static ProblemConstants from(double W, int K, double L0);
};

// (x, -p*x), the feature of item x offered at price p.
Vec augmented_feature(const Vec& x, double price);

// Utility of one item at one price under theta (clamped).
double item_utility(const ModelParams& params, const Vec& x, double price);

// Probability vector over {outside} followed by the assortment, in order.
// Entry 0 is the no-purchase probability.
std::vector<double> choice_probabilities(const ModelParams& params,
                                         const ItemCatalog& catalog,
                                         const Action& action);

// Expected per-round revenue sum_i p_i q_i.
double expected_revenue(const ModelParams& params, const ItemCatalog& catalog,
                        const Action& action);

// One draw from the choice law; returns 0 or a member of action.assortment.
int sample_choice(const ModelParams& params, const ItemCatalog& catalog,
                  const Action& action, Rng& rng);

// Uniform draw from the closed ball of the given radius in R^dim.
Vec uniform_ball(int dim, double radius, Rng& rng);

// (3 + W + log K) / L0; every optimal price lies in [0, P].
double price_upper_bound(double W, int K, double L0);

// Analytic floor on q_i*q_0 over the W-ball: e^{-W*Pbar} / (1 + K e^{W*Pbar})^2.
double kappa_lower_bound(double W, int K, double Pbar);

}  // namespace japs
