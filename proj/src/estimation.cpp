#include "japs/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace japs {

int Dataset::d() const {
  if (records.empty()) throw std::runtime_error("dataset: empty, dimension unknown");
  return records.front().features.d;
}

void Dataset::push(const ItemCatalog& features, const Action& action, int chosen) {
  records.push_back(DatasetRecord{features, action, chosen});
}

void Dataset::validate() const {
  for (size_t m = 0; m < records.size(); ++m) {
    const DatasetRecord& r = records[m];
    r.features.validate();
    if (r.features.d != records.front().features.d)
      throw std::invalid_argument("dataset: inconsistent feature dimension at record " +
                                  std::to_string(m));
    r.action.validate(r.features.count(), -1, -1.0);
    if (r.chosen != 0 &&
        std::find(r.action.assortment.begin(), r.action.assortment.end(), r.chosen) ==
            r.action.assortment.end())
      throw std::invalid_argument("dataset: chosen index not in assortment at record " +
                                  std::to_string(m));
  }
}

CompiledRecord compile_record(const DatasetRecord& r) {
  CompiledRecord v;
  v.chosen_pos = -1;
  v.x.reserve(r.action.assortment.size());
  for (int i = 0; i < r.action.size(); ++i) {
    v.x.push_back(augmented_feature(r.features.feature(r.action.assortment[static_cast<size_t>(i)]),
                                    r.action.prices[static_cast<size_t>(i)]));
    if (r.action.assortment[static_cast<size_t>(i)] == r.chosen) v.chosen_pos = i;
  }
  if (r.chosen != 0 && v.chosen_pos < 0)
    throw std::invalid_argument("dataset: chosen index not in assortment");
  return v;
}

std::vector<CompiledRecord> compile_dataset(const Dataset& data) {
  std::vector<CompiledRecord> views;
  views.reserve(data.records.size());
  for (const DatasetRecord& r : data.records) views.push_back(compile_record(r));
  return views;
}

namespace {

double clamp_u(double u) {
  return std::min(kUtilityClamp, std::max(-kUtilityClamp, u));
}

Vec project_ball(const Vec& v, double radius) {
  const double n = v.norm();
  return n > radius ? Vec((radius / n) * v) : v;
}

// Tiny-dimension kernels: Eigen's generic dot/rank-update dispatch dominates
// the runtime for the 2d-sized vectors used here, so do the arithmetic inline.
double dot_small(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// hessian += w * x x' (lower triangle only; hessian is dim x dim column-major).
void rank1_lower(Mat& hessian, const double* x, double w, int dim) {
  double* h = hessian.data();
  for (int c = 0; c < dim; ++c) {
    const double wc = w * x[c];
    double* col = h + static_cast<ptrdiff_t>(c) * dim;
    for (int r = c; r < dim; ++r) col[r] += wc * x[r];
  }
}

}  // namespace

double neg_log_likelihood_compiled(const std::vector<CompiledRecord>& views,
                                   const Vec& theta, double lambda) {
  const double* th = theta.data();
  const int dim = static_cast<int>(theta.size());
  double loss = 0.0;
  std::vector<double> u;
  for (const CompiledRecord& v : views) {
    u.clear();
    double umax = 0.0;
    for (const Vec& x : v.x) {
      u.push_back(clamp_u(dot_small(th, x.data(), dim)));
      umax = std::max(umax, u.back());
    }
    double s = std::exp(-umax);
    for (double ui : u) s += std::exp(ui - umax);
    const double lse = umax + std::log(s);
    const double u_chosen = v.chosen_pos < 0 ? 0.0 : u[static_cast<size_t>(v.chosen_pos)];
    loss += lse - u_chosen;
  }
  return loss + 0.5 * lambda * theta.squaredNorm();
}

Derivatives likelihood_derivatives_compiled(const std::vector<CompiledRecord>& views,
                                            int dim, const Vec& theta, double lambda) {
  Derivatives out;
  out.gradient = lambda * theta;
  out.hessian = lambda * Mat::Identity(dim, dim);
  const double* th = theta.data();
  double* grad = out.gradient.data();
  std::vector<double> q;
  Vec b(dim);
  double* bd = b.data();
  for (const CompiledRecord& v : views) {
    q.clear();
    double umax = 0.0;
    for (const Vec& x : v.x) {
      q.push_back(clamp_u(dot_small(th, x.data(), dim)));
      umax = std::max(umax, q.back());
    }
    double s = std::exp(-umax);
    for (double& qi : q) {
      qi = std::exp(qi - umax);
      s += qi;
    }
    b.setZero();
    for (size_t i = 0; i < v.x.size(); ++i) {
      q[i] /= s;
      const double y = (static_cast<int>(i) == v.chosen_pos) ? 1.0 : 0.0;
      const double w = q[i] - y;
      const double* xd = v.x[i].data();
      for (int k = 0; k < dim; ++k) {
        grad[k] += w * xd[k];
        bd[k] += q[i] * xd[k];
      }
      rank1_lower(out.hessian, xd, q[i], dim);
    }
    rank1_lower(out.hessian, bd, -1.0, dim);
  }
  out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
  return out;
}

void record_fisher_add(const CompiledRecord& record, int dim, const Vec& theta,
                       Mat& into) {
  double qbuf[64];
  const size_t n = record.x.size();
  std::vector<double> qheap;
  double* q = qbuf;
  if (n > 64) {
    qheap.resize(n);
    q = qheap.data();
  }
  const double* th = theta.data();
  double umax = 0.0;
  for (size_t i = 0; i < n; ++i) {
    q[i] = clamp_u(dot_small(th, record.x[i].data(), dim));
    umax = std::max(umax, q[i]);
  }
  double s = std::exp(-umax);
  for (size_t i = 0; i < n; ++i) {
    q[i] = std::exp(q[i] - umax);
    s += q[i];
  }
  Vec b = Vec::Zero(dim);
  double* bd = b.data();
  for (size_t i = 0; i < n; ++i) {
    q[i] /= s;
    const double* xd = record.x[i].data();
    for (int k = 0; k < dim; ++k) bd[k] += q[i] * xd[k];
    rank1_lower(into, xd, q[i], dim);
  }
  rank1_lower(into, bd, -1.0, dim);
  // Mirror the freshly accumulated lower triangle.
  for (int c = 0; c < dim; ++c)
    for (int r = c + 1; r < dim; ++r) into(c, r) = into(r, c);
}

Mat record_fisher(const CompiledRecord& record, int dim, const Vec& theta) {
  Mat h = Mat::Zero(dim, dim);
  record_fisher_add(record, dim, theta, h);
  return h;
}

double neg_log_likelihood(const Vec& theta, const Dataset& data, double lambda) {
  return neg_log_likelihood_compiled(compile_dataset(data), theta, lambda);
}

Derivatives likelihood_derivatives(const Vec& theta, const Dataset& data,
                                   double lambda) {
  const int dim = static_cast<int>(theta.size());
  return likelihood_derivatives_compiled(compile_dataset(data), dim, theta, lambda);
}

namespace {

struct NewtonOutcome {
  Vec theta;
  Vec gradient;  // ridge gradient at theta, at the lambda passed in
  Mat hessian;   // ridge Hessian at theta, at the lambda passed in
  int iterations = 0;
  bool converged = false;
};

// Smooth damped-Newton descent of the ridge loss at the given lambda. bail_norm
// stops early once the iterate has clearly left the region of interest (used by
// the constrained path below, where the unconstrained optimum may be far out or
// unbounded). polish takes one extra step after first reaching tolerance.
NewtonOutcome newton_descent(const std::vector<CompiledRecord>& views, int dim,
                             double lambda, const Vec& start, double tolerance,
                             int max_iterations, double bail_norm, bool polish) {
  const bool dbg2 = std::getenv("JAPS_FIT_DEBUG2") != nullptr;
  NewtonOutcome out;
  out.theta = start;
  double loss = neg_log_likelihood_compiled(views, out.theta, lambda);
  bool met_tol = false;
  int flat_steps = 0;
  for (; out.iterations < max_iterations; ++out.iterations) {
    if (bail_norm > 0.0 && out.theta.norm() > bail_norm) break;
    // Once accepted steps stop changing the loss beyond a few ulps, theta is at
    // the resolution floor of the objective; tighter gradients are unreachable.
    if (flat_steps >= 3) break;
    Derivatives der = likelihood_derivatives_compiled(views, dim, out.theta, lambda);
    const double gnorm = der.gradient.norm();
    if (dbg2 && out.iterations < 12)
      std::fprintf(stderr, "    inner %d: gnorm %.6e loss %.17g\n", out.iterations,
                   gnorm, loss);
    if (gnorm <= tolerance) {
      if (met_tol || !polish) break;  // one polish step after first reaching tolerance
      met_tol = true;
    }

    Eigen::LDLT<Mat> ldlt(der.hessian);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("fit_mle: Hessian factorization failed");
    if (lambda == 0.0) {
      const Vec dv = ldlt.vectorD();
      const double dmin = dv.minCoeff(), dmax = dv.maxCoeff();
      if (dmin <= 0.0 || dmax / dmin > 1e12)
        throw std::runtime_error(
            "fit_mle: lambda = 0 with an ill-conditioned Hessian; set lambda > 0");
    }
    const Vec step = ldlt.solve(der.gradient);
    // The iterate is within the step of the optimum; tighter gradient norms may
    // be unreachable (the per-step loss decrease drops below one ulp), so stop
    // once theta itself is resolved to high precision.
    if (step.norm() <= 1e-10 * std::max(1.0, out.theta.norm())) break;

    double s = 1.0;
    const double slope = der.gradient.dot(step);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = out.theta - s * step;
      const double cand_loss = neg_log_likelihood_compiled(views, cand, lambda);
      if (cand_loss <= loss - 1e-4 * s * slope + 1e-15 * std::abs(loss)) {
        out.theta = cand;
        const double dloss = loss - cand_loss;
        const double ulp = 2.220446049250313e-16 * std::max(1.0, std::abs(cand_loss));
        flat_steps = (std::abs(dloss) <= 4.0 * ulp) ? flat_steps + 1 : 0;
        loss = cand_loss;
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) break;  // no representable progress left
  }
  Derivatives der = likelihood_derivatives_compiled(views, dim, out.theta, lambda);
  out.gradient = der.gradient;
  out.hessian = der.hessian;
  out.converged = out.gradient.norm() <= tolerance;
  return out;
}

}  // namespace

FitResult fit_mle_compiled(const std::vector<CompiledRecord>& views, int dim,
                           const FitConfig& config) {
  if (config.lambda < 0.0) throw std::invalid_argument("fit_mle: lambda must be >= 0");
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("fit_mle: parameter dimension must be even and positive");
  if (config.norm_cap && *config.norm_cap <= 0.0)
    throw std::invalid_argument("fit_mle: norm_cap must be positive");

  Vec start = Vec::Zero(dim);
  if (config.warm_start) {
    if (config.warm_start->size() != dim)
      throw std::invalid_argument("fit_mle: warm start has wrong dimension");
    start = *config.warm_start;
    if (config.norm_cap) start = project_ball(start, *config.norm_cap);
  }

  FitResult out;
  out.lambda = config.lambda;

  if (!config.norm_cap) {
    const NewtonOutcome o =
        newton_descent(views, dim, config.lambda, start, config.tolerance,
                       config.max_iterations, 0.0, true);
    out.theta_hat = o.theta;
    out.hessian_at_hat = o.hessian;
    out.final_gradient_norm = o.gradient.norm();
    out.iterations = o.iterations;
    out.converged = o.converged;
    return out;
  }

  const bool fit_debug = std::getenv("JAPS_FIT_DEBUG") != nullptr;
  // Capped fit. The constrained optimum satisfies the KKT condition
  // grad L_lambda(theta) = -mu * theta for some mu >= 0, so it is the
  // unconstrained ridge fit at lambda + mu whose norm equals the cap (or the
  // plain fit when that already lands inside the ball). ||theta_hat(mu)|| is
  // continuous and decreasing in mu; find the root with a safeguarded Newton
  // iteration on mu, each evaluation being a warm-started smooth fit.
  const double cap = *config.norm_cap;
  const double inner_tol = 0.1 * config.tolerance;
  const int inner_cap = std::min(config.max_iterations, 50);
  int iterations = 0;

  auto finish = [&](const NewtonOutcome& o, double mu) {
    out.theta_hat = o.theta.norm() > cap ? Vec(project_ball(o.theta, cap)) : o.theta;
    // o was solved at lambda + mu: strip the extra ridge term from both pieces.
    const Vec grad = o.gradient - mu * out.theta_hat;
    out.hessian_at_hat = o.hessian - mu * Mat::Identity(dim, dim);
    out.final_gradient_norm =
        (out.theta_hat - project_ball(out.theta_hat - grad, cap)).norm();
    out.iterations = iterations;
    out.converged = out.final_gradient_norm <= config.tolerance;
    out.cap_multiplier = mu;
    return out;
  };

  // First multiplier to try: the carried-over hint when given, otherwise a
  // small default (after checking whether the cap binds at all).
  double mu_cur = std::max(config.cap_multiplier_hint.value_or(0.0), 0.0);
  if (mu_cur <= 0.0) {
    // Interior attempt at the requested lambda; abandon it once the iterate has
    // clearly left the ball (the unconstrained optimum may sit at infinity).
    NewtonOutcome o = newton_descent(views, dim, config.lambda, start,
                                     config.tolerance, config.max_iterations,
                                     5.0 * cap, true);
    iterations += o.iterations;
    if (o.theta.norm() <= cap) return finish(o, 0.0);  // cap slack (or honest non-convergence)
    start = project_ball(o.theta, cap);
    mu_cur = std::max(1e-4, config.lambda);
  }

  NewtonOutcome cur = newton_descent(views, dim, config.lambda + mu_cur, start,
                                     inner_tol, inner_cap, 0.0, false);
  iterations += cur.iterations;

  // Bracket ends: mu_lo infeasible (norm > cap), mu_hi feasible; mu_hi < 0
  // until a feasible multiplier has been seen. Safeguarded Newton iteration on
  // 1/cap - 1/||theta(mu)|| from the latest evaluation; the evaluation closest
  // to the cap is the answer.
  double mu_lo = 0.0, mu_hi = -1.0;
  (cur.theta.norm() <= cap ? mu_hi : mu_lo) = mu_cur;
  NewtonOutcome best = cur;
  double mu_best = mu_cur;
  int outer_flat = 0;  // evaluations since |norm - cap| last improved by >= 10%

  for (int outer = 0; outer < 60; ++outer) {
    if (std::abs(best.theta.norm() - cap) <= 0.1 * config.tolerance) break;
    if (mu_hi >= 0.0 && mu_hi <= 1e-18) break;  // constraint effectively slack after all
    // When further multiplier refinement stops tightening |norm - cap|, theta
    // has hit the precision floor of the inner solves; keep the best seen.
    if (outer_flat >= 3) break;

    const double nrm = cur.theta.norm();
    Eigen::LDLT<Mat> ldlt(cur.hessian);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("fit_mle: Hessian factorization failed");
    const double quad = cur.theta.dot(ldlt.solve(cur.theta));
    double mu_next = quad > 0.0 && nrm > 0.0
                         ? mu_cur + ((nrm - cap) / cap) * (nrm * nrm / quad)
                         : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(mu_next) && mu_next <= 0.0) {
      // Root at or below zero: the cap has gone slack. Confirm with an
      // unconstrained fit before falling back to the bracket.
      NewtonOutcome o =
          newton_descent(views, dim, config.lambda, project_ball(cur.theta, cap),
                         config.tolerance, config.max_iterations, 5.0 * cap, true);
      iterations += o.iterations;
      if (o.theta.norm() <= cap) return finish(o, 0.0);
      mu_next = std::numeric_limits<double>::quiet_NaN();
    }
    if (mu_hi >= 0.0) {
      if (!std::isfinite(mu_next) || !(mu_next > mu_lo && mu_next < mu_hi))
        mu_next = 0.5 * (mu_lo + mu_hi);
    } else if (!std::isfinite(mu_next) || !(mu_next > mu_lo)) {
      mu_next = std::max({2.0 * mu_lo, 1e-4, config.lambda});
    }

    NewtonOutcome o = newton_descent(views, dim, config.lambda + mu_next, cur.theta,
                                     inner_tol, inner_cap, 0.0, false);
    iterations += o.iterations;
    if (fit_debug)
      std::fprintf(stderr,
                   "  outer %d: mu ∈ [%.6e, %.6e] try %.6e -> norm %.12f iters %d conv %d "
                   "gnorm %.3e\n",
                   outer, mu_lo, mu_hi, mu_next, o.theta.norm(), o.iterations,
                   int(o.converged), o.gradient.norm());
    if (o.theta.norm() <= cap)
      mu_hi = mu_next;
    else
      mu_lo = std::max(mu_lo, mu_next);
    if (std::abs(o.theta.norm() - cap) < 0.9 * std::abs(best.theta.norm() - cap))
      outer_flat = 0;
    else
      ++outer_flat;
    if (std::abs(o.theta.norm() - cap) < std::abs(best.theta.norm() - cap)) {
      best = o;
      mu_best = mu_next;
    }
    mu_cur = mu_next;
    cur = std::move(o);
    if (mu_hi >= 0.0 && mu_hi - mu_lo <= 1e-15 * mu_hi) break;  // bracket exhausted
  }
  return finish(best, mu_best);
}

FitResult fit_mle(const Dataset& data, const FitConfig& config) {
  const int dim = 2 * (data.records.empty() ? 1 : data.d());
  return fit_mle_compiled(compile_dataset(data), dim, config);
}

double inverse_hessian_norm(const Mat& hessian, const Vec& x) {
  Eigen::LLT<Mat> llt(hessian);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("inverse_hessian_norm: matrix not positive definite");
  return std::sqrt(x.dot(llt.solve(x)));
}

double confidence_width(const Vec& xtilde, const FitResult& fit,
                        const ConfidenceSpec& spec) {
  if (spec.delta <= 0.0 || spec.delta >= 1.0)
    throw std::invalid_argument("confidence_width: delta must be in (0,1)");
  if (spec.N_effective < 1.0)
    throw std::invalid_argument("confidence_width: N_effective must be >= 1");
  const double c = spec.use_hat_hessian_inflation ? std::sqrt(3.0) : 1.0;
  const double log_term = std::sqrt(std::log(spec.N_effective / spec.delta));
  const double reg_term = std::sqrt(fit.lambda) * spec.W;
  return 16.0 * c * inverse_hessian_norm(fit.hessian_at_hat, xtilde) *
         (log_term + reg_term);
}

BurnInReport burn_in_satisfied(const Dataset& data, const Mat& hessian, int d,
                               double N_effective, double delta, double lambda,
                               double W) {
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("burn_in_satisfied: delta must be in (0,1)");
  BurnInReport rep;
  Eigen::LLT<Mat> llt(hessian);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("burn_in_satisfied: Hessian not positive definite");
  for (const DatasetRecord& r : data.records) {
    for (int i = 0; i < r.action.size(); ++i) {
      const Vec x = augmented_feature(r.features.feature(r.action.assortment[static_cast<size_t>(i)]),
                                      r.action.prices[static_cast<size_t>(i)]);
      rep.worst_norm = std::max(rep.worst_norm, std::sqrt(x.dot(llt.solve(x))));
    }
  }
  const double t1 = 1.0 / (144.0 * std::sqrt(2.0 * d * std::log(N_effective / delta)));
  double threshold = t1;
  if (lambda > 0.0 && W > 0.0)
    threshold = std::min(threshold, 1.0 / (24.0 * std::sqrt(lambda) * W));
  rep.threshold = threshold;
  rep.satisfied = rep.worst_norm <= threshold;
  return rep;
}

double sequential_radius(double t, int dim, double W, double Pbar, double C,
                         double T) {
  if (t < 0.0 || T < 1.0 || dim < 1 || C <= 0.0)
    throw std::invalid_argument("sequential_radius: bad arguments");
  return std::log(T) + dim * std::log(C * (1.0 + W * Pbar * t / dim));
}

bool sequential_set_contains(const Vec& theta, const Dataset& data,
                             const Vec& theta_hat, double radius) {
  return neg_log_likelihood(theta, data, 0.0) -
             neg_log_likelihood(theta_hat, data, 0.0) <=
         radius;
}

}  // namespace japs
