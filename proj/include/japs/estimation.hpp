#pragma once

#include <optional>
#include <vector>

#include "japs/mnl.hpp"

namespace japs {

// One logged interaction: the catalog snapshot seen that round, the offered
// action, and the chosen index (0 = no purchase).
struct DatasetRecord {
  ItemCatalog features;
  Action action;
  int chosen = 0;
};

struct Dataset {
  std::vector<DatasetRecord> records;

  int size() const { return static_cast<int>(records.size()); }
  int d() const;
  void push(const ItemCatalog& features, const Action& action, int chosen);
  void validate() const;
};

struct FitConfig {
  double lambda = 1e-6;
  double tolerance = 1e-8;
  int max_iterations = 200;
  std::optional<double> norm_cap;       // constrain ||theta|| <= norm_cap
  std::optional<Vec> warm_start;
  // Starting guess for the norm constraint's multiplier (see
  // FitResult::cap_multiplier); speeds up repeated capped fits on growing data.
  std::optional<double> cap_multiplier_hint;
};

struct FitResult {
  Vec theta_hat;
  Mat hessian_at_hat;    // includes the lambda*I ridge term
  double lambda = 0.0;
  double final_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // Multiplier mu >= 0 of the active norm constraint: the capped fit equals the
  // unconstrained ridge fit at lambda + mu. Zero when the cap is slack or unset.
  double cap_multiplier = 0.0;
};

// -sum_m log q_{chosen} + (lambda/2)||theta||^2; a loss to be minimized.
double neg_log_likelihood(const Vec& theta, const Dataset& data, double lambda);

struct Derivatives {
  Vec gradient;
  Mat hessian;
};

// gradient = sum_m sum_{j in S_m} x_mj (q_mj - y_mj) + lambda*theta
// hessian  = lambda*I + sum_m [sum_j q x x' - (sum_j q x)(sum_j q x)']
Derivatives likelihood_derivatives(const Vec& theta, const Dataset& data,
                                   double lambda);

// Damped Newton with backtracking; projects onto the norm_cap ball when set.
// lambda = 0 is honored only when the Hessian is numerically invertible.
FitResult fit_mle(const Dataset& data, const FitConfig& config);

struct ConfidenceSpec {
  double delta = 0.1;
  double N_effective = 1.0;  // union-bound cardinality: N offline, N*T online
  double W = 1.0;
  bool use_hat_hessian_inflation = false;  // sqrt(3) factor for H at theta_hat
};

// 16 * c * ||xtilde||_{H^-1} * (sqrt(log(N_eff/delta)) + sqrt(lambda)*W),
// c = sqrt(3) under inflation, else 1.
double confidence_width(const Vec& xtilde, const FitResult& fit,
                        const ConfidenceSpec& spec);

struct BurnInReport {
  bool satisfied = false;
  double worst_norm = 0.0;
  double threshold = 0.0;
};

// Checks max_{m,j} ||x_mj||_{H^-1} against
// min{ 1/(144 sqrt(2 d log(N_eff/delta))), 1/(24 sqrt(lambda) W) }.
// d is the raw feature dimension; the parameter lives in R^{2d}.
BurnInReport burn_in_satisfied(const Dataset& data, const Mat& hessian, int d,
                               double N_effective, double delta, double lambda,
                               double W);

// log T + dim * log(C * (1 + W * Pbar * t / dim)); dim is the dimension of the
// parameter vector the radius is used for.
double sequential_radius(double t, int dim, double W, double Pbar, double C,
                         double T);

// Membership in the sequential likelihood-ratio set:
// L(theta) - L(theta_hat) <= radius, losses unregularized.
bool sequential_set_contains(const Vec& theta, const Dataset& data,
                             const Vec& theta_hat, double radius);

// ||x||_{H^-1} via a Cholesky solve; H must be positive definite.
double inverse_hessian_norm(const Mat& hessian, const Vec& x);

// Pre-augmented view of one record; lets per-round loops avoid recompilation.
struct CompiledRecord {
  std::vector<Vec> x;   // augmented features of the offered items
  int chosen_pos = -1;  // position within the assortment, -1 = outside
};

CompiledRecord compile_record(const DatasetRecord& record);
std::vector<CompiledRecord> compile_dataset(const Dataset& data);

double neg_log_likelihood_compiled(const std::vector<CompiledRecord>& views,
                                   const Vec& theta, double lambda);
Derivatives likelihood_derivatives_compiled(const std::vector<CompiledRecord>& views,
                                            int dim, const Vec& theta, double lambda);
FitResult fit_mle_compiled(const std::vector<CompiledRecord>& views, int dim,
                           const FitConfig& config);

// Fisher contribution of a single record at theta (no ridge term). The _add
// form accumulates into an existing symmetric matrix without allocating.
Mat record_fisher(const CompiledRecord& record, int dim, const Vec& theta);
void record_fisher_add(const CompiledRecord& record, int dim, const Vec& theta,
                       Mat& into);

}  // namespace japs
