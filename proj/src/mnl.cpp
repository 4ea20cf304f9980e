#include "japs/mnl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace japs {

const Vec& ItemCatalog::feature(int item) const {
  if (item < 1 || item > count())
    throw std::out_of_range("item index " + std::to_string(item) +
                            " outside catalog of size " + std::to_string(count()));
  return items[static_cast<size_t>(item - 1)];
}

void ItemCatalog::validate() const {
  if (d <= 0) throw std::invalid_argument("catalog: d must be positive");
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].size() != d)
      throw std::invalid_argument("catalog: item " + std::to_string(i + 1) +
                                  " has dimension " + std::to_string(items[i].size()) +
                                  ", expected " + std::to_string(d));
    if (items[i].norm() > 1.0 + 1e-9)
      throw std::invalid_argument("catalog: item " + std::to_string(i + 1) +
                                  " has norm > 1");
  }
}

Vec ModelParams::stacked() const {
  Vec v(psi.size() + phi.size());
  v << psi, phi;
  return v;
}

ModelParams ModelParams::from_stacked(const Vec& theta, double W) {
  if (theta.size() % 2 != 0)
    throw std::invalid_argument("stacked parameter must have even dimension");
  const int d = static_cast<int>(theta.size()) / 2;
  ModelParams p;
  p.psi = theta.head(d);
  p.phi = theta.tail(d);
  p.W = W;
  return p;
}

void ModelParams::validate() const {
  if (psi.size() != phi.size())
    throw std::invalid_argument("params: psi and phi dimensions differ");
  if (W <= 0.0) throw std::invalid_argument("params: W must be positive");
  if (stacked().norm() > W + 1e-9)
    throw std::invalid_argument("params: ||(psi,phi)|| exceeds W");
}

void Action::validate(int n_items, int K, double P) const {
  if (assortment.size() != prices.size())
    throw std::invalid_argument("action: assortment and prices lengths differ");
  if (K >= 0 && size() > K)
    throw std::invalid_argument("action: assortment larger than K");
  int prev = 0;
  for (int i = 0; i < size(); ++i) {
    const int item = assortment[static_cast<size_t>(i)];
    if (item < 1 || item > n_items)
      throw std::invalid_argument("action: item index " + std::to_string(item) +
                                  " out of range");
    if (item <= prev)
      throw std::invalid_argument("action: assortment must be strictly ascending");
    prev = item;
    const double p = prices[static_cast<size_t>(i)];
    if (p < -1e-12 || (P > 0.0 && p > P + 1e-9))
      throw std::invalid_argument("action: price " + std::to_string(p) +
                                  " outside [0, P]");
  }
}

ProblemConstants ProblemConstants::from(double W, int K, double L0) {
  ProblemConstants c;
  c.L0 = L0;
  c.P = price_upper_bound(W, K, L0);
  c.Pbar = std::sqrt(1.0 + c.P * c.P);
  c.kappa_lb = kappa_lower_bound(W, K, c.Pbar);
  return c;
}

Vec augmented_feature(const Vec& x, double price) {
  Vec v(2 * x.size());
  v.head(x.size()) = x;
  v.tail(x.size()) = -price * x;
  return v;
}

static double clamp_utility(double u) {
  return std::min(kUtilityClamp, std::max(-kUtilityClamp, u));
}

double item_utility(const ModelParams& params, const Vec& x, double price) {
  return clamp_utility(params.psi.dot(x) - price * params.phi.dot(x));
}

std::vector<double> choice_probabilities(const ModelParams& params,
                                         const ItemCatalog& catalog,
                                         const Action& action) {
  const int m = action.size();
  std::vector<double> u(static_cast<size_t>(m));
  double umax = 0.0;  // outside option has utility 0
  for (int i = 0; i < m; ++i) {
    u[static_cast<size_t>(i)] = item_utility(params, catalog.feature(action.assortment[static_cast<size_t>(i)]),
                                             action.prices[static_cast<size_t>(i)]);
    umax = std::max(umax, u[static_cast<size_t>(i)]);
  }
  double denom = std::exp(-umax);
  std::vector<double> out(static_cast<size_t>(m) + 1);
  for (int i = 0; i < m; ++i) {
    out[static_cast<size_t>(i) + 1] = std::exp(u[static_cast<size_t>(i)] - umax);
    denom += out[static_cast<size_t>(i) + 1];
  }
  out[0] = std::exp(-umax) / denom;
  for (int i = 1; i <= m; ++i) out[static_cast<size_t>(i)] /= denom;
  return out;
}

double expected_revenue(const ModelParams& params, const ItemCatalog& catalog,
                        const Action& action) {
  const std::vector<double> q = choice_probabilities(params, catalog, action);
  double rev = 0.0;
  for (int i = 0; i < action.size(); ++i)
    rev += action.prices[static_cast<size_t>(i)] * q[static_cast<size_t>(i) + 1];
  return rev;
}

int sample_choice(const ModelParams& params, const ItemCatalog& catalog,
                  const Action& action, Rng& rng) {
  const std::vector<double> q = choice_probabilities(params, catalog, action);
  const double u = rng.uniform01();
  double acc = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    acc += q[i];
    if (u < acc) return i == 0 ? 0 : action.assortment[i - 1];
  }
  return action.assortment.empty() ? 0 : action.assortment.back();
}

Vec uniform_ball(int dim, double radius, Rng& rng) {
  Vec z(dim);
  for (int i = 0; i < dim; ++i) z(i) = rng.normal();
  const double n = z.norm();
  if (n == 0.0) return Vec::Zero(dim);
  return z * (radius * std::pow(rng.uniform01(), 1.0 / dim) / n);
}

double price_upper_bound(double W, int K, double L0) {
  if (L0 <= 0.0) throw std::invalid_argument("price_upper_bound: L0 must be positive");
  if (W < 0.0) throw std::invalid_argument("price_upper_bound: W must be nonnegative");
  if (K < 1) throw std::invalid_argument("price_upper_bound: K must be at least 1");
  return (3.0 + W + std::log(static_cast<double>(K))) / L0;
}

double kappa_lower_bound(double W, int K, double Pbar) {
  if (W < 0.0 || Pbar < 0.0)
    throw std::invalid_argument("kappa_lower_bound: W and Pbar must be nonnegative");
  if (K < 1) throw std::invalid_argument("kappa_lower_bound: K must be at least 1");
  const double a = std::exp(-W * Pbar);
  const double b = 1.0 + static_cast<double>(K) * std::exp(W * Pbar);
  return a / (b * b);
}

}  // namespace japs
