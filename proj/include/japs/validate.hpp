#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "japs/experiment.hpp"

namespace japs {

// Desk-scale world used by the validation suites and the acceptance harness:
// d=2, N=6, K=2, W=1, L0=0.5, fixed contexts. 405 grid candidates at G=5.
constexpr std::uint64_t kReferenceSeed = 90210;
World reference_world(std::uint64_t seed = kReferenceSeed);

struct GradientCheck {
  int instances = 0;
  double max_gradient_error = 0.0;  // relative, sup norm
  double max_hessian_error = 0.0;
  int worst_instance = -1;
};

// Random small instances; analytic derivatives vs central finite differences.
GradientCheck check_gradients(int instances, std::uint64_t seed);

struct CoverageCheck {
  int reps = 0;
  int covered = 0;       // all 40 direction inequalities hold
  int sandwich_ok = 0;   // generalized eigenvalues within [1/3, 3]
  int pessimism_ok = 0;  // LCB table below true utilities on every cell
  int burn_in_pass = 0;
  std::vector<int> uncovered_reps;
};

// Replicated fits on fresh datasets from the world's true model.
CoverageCheck check_coverage(const World& world, int reps, int n, double delta,
                             int directions, std::uint64_t seed, int threads);

struct OracleCheck {
  int instances = 0;
  int agreements = 0;          // |struct - grid| within the adjacent-step gap
  int dominated = 0;           // struct >= grid - 1e-12
  double max_gap = 0.0;        // worst struct-vs-grid gap beyond tolerance
  double max_identity_error = 0.0;  // p*_i - R* - 1/beta_i at unclipped optima
  int worst_instance = -1;
};

OracleCheck check_oracle(int instances, int grid_points, std::uint64_t seed);

struct PerturbationCheck {
  int tuples = 0;
  int violations = 0;       // beyond 1e-9 slack
  double worst_excess = 0.0;
  int worst_tuple = -1;
};

PerturbationCheck check_perturbation(int tuples, std::uint64_t seed);

struct EliminationCheck {
  int seeds = 0;
  long long elimination_rounds = 0;  // rounds where any candidate was eliminated
  long long safe_rounds = 0;         // ... with the grid optimum still alive
  long long explore_rounds = 0;
  long long exploit_rounds = 0;
};

EliminationCheck check_elimination(const World& world, int seeds, long long T,
                                   double width_scale, long long explore_cap,
                                   std::uint64_t seed, int threads);

struct SuiteReport {
  std::string suite;
  bool passed = false;
  std::map<std::string, double> stats;
  std::vector<std::string> notes;
  std::string failure_artifact;  // replay file written on failure
};

// suite in {gradients, coverage, oracle, perturbation, elimination}
SuiteReport run_validation_suite(const std::string& suite,
                                 const std::string& artifact_dir);

std::string suite_report_text(const SuiteReport& report);

}  // namespace japs
