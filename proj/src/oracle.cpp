#include "japs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace japs {

void UtilityTable::validate() const {
  if (static_cast<int>(grid.size()) != points())
    throw std::invalid_argument("utility table: grid size does not match columns");
  for (size_t g = 1; g < grid.size(); ++g)
    if (grid[g] <= grid[g - 1])
      throw std::invalid_argument("utility table: grid must be strictly ascending");
  if (!grid.empty() && grid.front() < -1e-12)
    throw std::invalid_argument("utility table: grid prices must be nonnegative");
}

double revenue_from_utilities(const std::vector<double>& utilities,
                              const std::vector<double>& prices) {
  if (utilities.size() != prices.size())
    throw std::invalid_argument("revenue_from_utilities: length mismatch");
  double umax = 0.0;
  for (double u : utilities) umax = std::max(umax, std::min(u, kUtilityClamp));
  double denom = std::exp(-umax);
  double numer = 0.0;
  for (size_t i = 0; i < utilities.size(); ++i) {
    const double e = std::exp(std::min(std::max(utilities[i], -kUtilityClamp), kUtilityClamp) - umax);
    denom += e;
    numer += prices[i] * e;
  }
  return numer / denom;
}

namespace {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Visits all ascending item subsets of size 1..K in lexicographic order.
template <typename F>
void for_each_assortment(int n, int K, F&& visit) {
  std::vector<int> s;
  // Depth-first lexicographic: [1], [1,2], .., [1..K], [1,..,K-1,K+1], ..
  std::function<void(int)> rec = [&](int next) {
    for (int item = next; item <= n; ++item) {
      s.push_back(item);
      visit(s);
      if (static_cast<int>(s.size()) < K) rec(item + 1);
      s.pop_back();
    }
  };
  rec(1);
}

}  // namespace

OracleSolution best_assortment_fixed_prices(const std::vector<double>& utilities,
                                            const std::vector<double>& revenues,
                                            int K) {
  const int n = static_cast<int>(utilities.size());
  if (revenues.size() != utilities.size())
    throw std::invalid_argument("best_assortment_fixed_prices: length mismatch");
  if (K < 1) throw std::invalid_argument("best_assortment_fixed_prices: K must be >= 1");
  if (n > 20)
    throw std::invalid_argument("best_assortment_fixed_prices: catalog too large for exhaustive search");

  std::vector<double> ev(utilities.size());
  for (size_t i = 0; i < utilities.size(); ++i)
    ev[i] = std::exp(std::min(std::max(utilities[i], -kUtilityClamp), kUtilityClamp));

  OracleSolution best;
  best.method = "brute_force";
  best.revenue = 0.0;  // empty assortment baseline
  for_each_assortment(n, std::min(K, n), [&](const std::vector<int>& s) {
    double denom = 1.0, numer = 0.0;
    for (int item : s) {
      denom += ev[static_cast<size_t>(item - 1)];
      numer += revenues[static_cast<size_t>(item - 1)] * ev[static_cast<size_t>(item - 1)];
    }
    const double rev = numer / denom;
    if (rev > best.revenue + 1e-15) {
      best.assortment = s;
      best.revenue = rev;
      best.prices.clear();
      for (int item : s) best.prices.push_back(revenues[static_cast<size_t>(item - 1)]);
    }
  });
  return best;
}

OracleSolution best_joint_assortment_pricing(const std::vector<double>& alpha,
                                             const std::vector<double>& beta,
                                             int K, double P) {
  const int n = static_cast<int>(alpha.size());
  if (beta.size() != alpha.size())
    throw std::invalid_argument("best_joint_assortment_pricing: length mismatch");
  if (n == 0) throw std::invalid_argument("best_joint_assortment_pricing: empty catalog");
  if (K < 1) throw std::invalid_argument("best_joint_assortment_pricing: K must be >= 1");
  if (P <= 0.0) throw std::invalid_argument("best_joint_assortment_pricing: P must be positive");
  for (double b : beta)
    if (b <= 0.0)
      throw std::invalid_argument("best_joint_assortment_pricing: price sensitivities must be positive");

  const auto price_at = [&](int i, double R) {
    return std::min(P, std::max(0.0, R + 1.0 / beta[static_cast<size_t>(i)]));
  };
  const auto score_at = [&](int i, double R) {
    const double p = price_at(i, R);
    return (p - R) * std::exp(std::min(alpha[static_cast<size_t>(i)] -
                                           beta[static_cast<size_t>(i)] * p,
                                       kUtilityClamp));
  };
  // Sum of the K largest positive scores minus R; strictly decreasing in R.
  const auto f = [&](double R) {
    std::vector<double> sc(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) sc[static_cast<size_t>(i)] = score_at(i, R);
    std::sort(sc.begin(), sc.end(), std::greater<double>());
    double s = 0.0;
    for (int i = 0; i < std::min(K, n); ++i)
      if (sc[static_cast<size_t>(i)] > 0.0) s += sc[static_cast<size_t>(i)];
    return s - R;
  };

  double lo = 0.0, hi = P;
  if (f(lo) <= 0.0) {
    // All scores vanish at R = 0 only in degenerate cases; root is 0.
    hi = 0.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, P); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double R = 0.5 * (lo + hi);

  std::vector<std::pair<double, int>> ranked;
  for (int i = 0; i < n; ++i) ranked.emplace_back(-score_at(i, R), i + 1);
  std::sort(ranked.begin(), ranked.end());

  OracleSolution sol;
  sol.method = "structural";
  for (int r = 0; r < std::min(K, n); ++r) {
    if (-ranked[static_cast<size_t>(r)].first <= 1e-15) break;
    sol.assortment.push_back(ranked[static_cast<size_t>(r)].second);
  }
  std::sort(sol.assortment.begin(), sol.assortment.end());
  std::vector<double> u;
  for (int item : sol.assortment) {
    const double p = price_at(item - 1, R);
    sol.prices.push_back(p);
    u.push_back(alpha[static_cast<size_t>(item - 1)] - beta[static_cast<size_t>(item - 1)] * p);
  }
  sol.revenue = revenue_from_utilities(u, sol.prices);
  return sol;
}

OracleSolution maximize_revenue_over_grid(const UtilityTable& table,
                                          bool prices_from_grid, int K) {
  table.validate();
  const int n = table.items();
  const int G = table.points();
  if (n == 0 || G == 0)
    throw std::invalid_argument("maximize_revenue_over_grid: empty table");
  if (K < 1) throw std::invalid_argument("maximize_revenue_over_grid: K must be >= 1");

  const int Keff = std::min(K, n);
  if (n > 60)
    throw std::invalid_argument(
        "maximize_revenue_over_grid: discretized action space exceeds cap of " +
        std::to_string(kActionSpaceCap));
  long long count = 0;
  for (int k = 1; k <= Keff; ++k) {
    long long per = binomial(n, k);
    if (prices_from_grid) {
      for (int j = 0; j < k; ++j) {
        per *= G;
        if (per > kActionSpaceCap) break;
      }
    } else {
      per *= G;
    }
    count += per;
    if (count > kActionSpaceCap)
      throw std::invalid_argument(
          "maximize_revenue_over_grid: discretized action space exceeds cap of " +
          std::to_string(kActionSpaceCap));
  }

  // exp(utility) per cell
  Mat ev(n, G);
  for (int i = 0; i < n; ++i)
    for (int g = 0; g < G; ++g)
      ev(i, g) = std::exp(std::min(std::max(table.values(i, g), -kUtilityClamp), kUtilityClamp));

  OracleSolution best;
  best.method = "grid";
  best.revenue = -1.0;
  std::vector<int> gidx;

  const auto consider = [&](const std::vector<int>& s, const std::vector<int>& gs) {
    double denom = 1.0, numer = 0.0;
    for (size_t j = 0; j < s.size(); ++j) {
      const double e = ev(s[j] - 1, gs[j]);
      denom += e;
      numer += table.grid[static_cast<size_t>(gs[j])] * e;
    }
    const double rev = numer / denom;
    if (rev > best.revenue + 1e-15) {
      best.revenue = rev;
      best.assortment = s;
      best.prices.clear();
      for (int g : gs) best.prices.push_back(table.grid[static_cast<size_t>(g)]);
    }
  };

  for_each_assortment(n, Keff, [&](const std::vector<int>& s) {
    const int k = static_cast<int>(s.size());
    if (prices_from_grid) {
      gidx.assign(static_cast<size_t>(k), 0);
      while (true) {
        consider(s, gidx);
        int pos = k - 1;
        while (pos >= 0 && gidx[static_cast<size_t>(pos)] == G - 1) {
          gidx[static_cast<size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
        ++gidx[static_cast<size_t>(pos)];
      }
    } else {
      for (int g = 0; g < G; ++g) {
        gidx.assign(static_cast<size_t>(k), g);
        consider(s, gidx);
      }
    }
  });

  if (best.revenue < 0.0) best.revenue = 0.0;
  return best;
}

OracleSolution brute_force_joint(const ModelParams& params,
                                 const ItemCatalog& catalog, int K,
                                 const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("brute_force_joint: empty grid");
  UtilityTable table;
  table.grid = grid;
  table.values.resize(catalog.count(), static_cast<int>(grid.size()));
  for (int i = 1; i <= catalog.count(); ++i)
    for (size_t g = 0; g < grid.size(); ++g)
      table.values(i - 1, static_cast<int>(g)) =
          params.psi.dot(catalog.feature(i)) - grid[g] * params.phi.dot(catalog.feature(i));
  OracleSolution sol = maximize_revenue_over_grid(table, true, K);
  sol.method = "brute_force";
  return sol;
}

}  // namespace japs
