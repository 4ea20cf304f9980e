// Command-line front end: simulate | offline | oracle | validate | gen-env |
// experiment. Every subcommand is a thin shell over the library.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "japs/validate.hpp"

namespace {

int cmd_simulate(const std::string& algo, const std::string& env_path,
                 const std::string& config_path, std::uint64_t seed,
                 const std::string& out_path) {
  const japs::World world = japs::load_world(env_path);
  japs::OnlineConfig config;
  if (!config_path.empty()) config = japs::load_online_config(config_path);
  if (!algo.empty()) config.algorithm = japs::online_algo_from_string(algo);

  japs::Rng rng = japs::replication_rng(world.spec.seed, 0, seed);
  const japs::RegretTrace trace = japs::run_online(world, config, rng);
  japs::save_trace(trace, out_path);

  std::cout << "algorithm " << japs::to_string(config.algorithm) << ", T " << config.T
            << ", total regret " << japs::format_double(trace.total_regret) << "\n";
  for (const auto& [phase, count] : trace.phase_counts)
    std::cout << "  rounds[" << phase << "] = " << count << "\n";
  for (const auto& [key, value] : trace.stats)
    std::cout << "  " << key << " = " << japs::format_double(value) << "\n";
  for (const std::string& warning : trace.warnings)
    std::cout << "  warning: " << warning << "\n";
  std::cout << "trace written to " << out_path << "\n";
  return 0;
}

int cmd_offline(const std::string& problem_path, const std::string& out_path,
                bool emit_widths) {
  const japs::OfflineProblem problem = japs::load_offline_problem(problem_path);
  const japs::OfflineResult result = japs::run_lcb(problem);
  japs::save_offline_result(result, emit_widths, out_path);

  std::cout << "records " << problem.dataset.size() << ", pessimistic revenue "
            << japs::format_double(result.pessimistic_revenue) << "\n";
  std::cout << "assortment";
  for (int item : result.action.assortment) std::cout << " " << item;
  std::cout << "\nprices";
  for (double p : result.action.prices)
    std::cout << " " << japs::format_double(p);
  std::cout << "\nburn-in " << (result.burn_in.satisfied ? "satisfied" : "not satisfied")
            << " (worst norm " << japs::format_double(result.burn_in.worst_norm)
            << ", threshold " << japs::format_double(result.burn_in.threshold) << ")\n";
  std::cout << "result written to " << out_path << "\n";
  return 0;
}

int cmd_oracle(const std::string& params_path, const std::string& catalog_path, int K,
               int grid_points, double pmax) {
  const japs::ModelParams params = japs::load_params(params_path);
  const japs::ItemCatalog catalog = japs::load_catalog(catalog_path);
  if (params.d() != catalog.d)
    throw std::runtime_error("params and catalog dimensions differ");

  std::vector<double> alpha, beta;
  double min_beta = 0.0;
  for (int i = 1; i <= catalog.count(); ++i) {
    alpha.push_back(params.psi.dot(catalog.feature(i)));
    beta.push_back(params.phi.dot(catalog.feature(i)));
    min_beta = i == 1 ? beta.back() : std::min(min_beta, beta.back());
  }
  double P = pmax;
  if (P <= 0.0) {
    if (min_beta <= 0.0)
      throw std::runtime_error(
          "price sensitivity floor is not positive; pass --pmax explicitly");
    P = japs::price_upper_bound(params.W, K, min_beta);
  }

  japs::OracleSolution sol;
  if (grid_points > 0)
    sol = japs::brute_force_joint(params, catalog, K, japs::uniform_grid(P, grid_points));
  else
    sol = japs::best_joint_assortment_pricing(alpha, beta, K, P);
  std::cout << japs::oracle_solution_json(sol);
  return 0;
}

int cmd_validate(const std::string& suite, const std::string& artifact_dir) {
  const japs::SuiteReport report = japs::run_validation_suite(suite, artifact_dir);
  std::cout << japs::suite_report_text(report);
  return report.passed ? 0 : 1;
}

int cmd_gen_env(const std::string& spec_path, const std::string& out_path) {
  const japs::EnvironmentSpec spec = japs::load_environment_spec(spec_path);
  japs::Rng rng(spec.seed);
  const japs::World world = japs::generate_environment(spec, rng);
  japs::save_world(world, out_path);

  double min_align = 0.0;
  for (int i = 1; i <= world.catalog.count(); ++i) {
    const double a = world.params.phi.dot(world.catalog.feature(i));
    min_align = i == 1 ? a : std::min(min_align, a);
  }
  std::cout << "N " << world.spec.N << ", d " << world.spec.d << ", P "
            << japs::format_double(world.constants.P) << ", kappa_lb "
            << japs::format_double(world.constants.kappa_lb)
            << ", min price sensitivity " << japs::format_double(min_align) << "\n";
  std::cout << "world written to " << out_path << "\n";
  return 0;
}

int cmd_experiment(const std::string& spec_path) {
  const japs::ExperimentSpec spec = japs::load_experiment_spec(spec_path);
  const japs::ExperimentReport report = japs::run_experiment(spec);
  std::cout << report.written.size() << " trace/result files, summary at "
            << report.summary_path << "\n";
  for (const std::string& msg : report.messages) std::cout << "failed: " << msg << "\n";
  return report.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"assortment-and-pricing simulator for the price-based MNL model"};
  app.require_subcommand(1);

  std::string algo, env_path, config_path, out_path, problem_path, params_path,
      catalog_path, suite, artifact_dir, spec_path;
  std::uint64_t seed = 0;
  int K = 1, grid_points = 0;
  double pmax = 0.0;
  bool emit_widths = false;

  CLI::App* simulate = app.add_subcommand("simulate", "run one online algorithm");
  simulate->add_option("--algo", algo, "supcb | ts | ucb-mle (overrides config)")
      ->check(CLI::IsMember({"supcb", "ts", "ucb-mle"}));
  simulate->add_option("--env", env_path, "world JSON from gen-env")->required();
  simulate->add_option("--config", config_path, "flat key=value run config");
  simulate->add_option("--seed", seed, "replication seed")->required();
  simulate->add_option("--out", out_path, "trace CSV path")->required();

  CLI::App* offline = app.add_subcommand("offline", "pessimistic planning from a log");
  offline->add_option("--problem", problem_path, "problem JSON")->required();
  offline->add_option("--out", out_path, "result JSON path")->required();
  offline->add_flag("--emit-widths", emit_widths, "include the width table");

  CLI::App* oracle = app.add_subcommand("oracle", "solve one pricing instance");
  oracle->add_option("--params", params_path, "params JSON (psi, phi, W)")->required();
  oracle->add_option("--catalog", catalog_path, "catalog JSON (d, items)")->required();
  oracle->add_option("--k", K, "assortment capacity")->required();
  oracle->add_option("--grid", grid_points, "grid points; omit for the structural solver");
  oracle->add_option("--pmax", pmax, "price cap; default derives from W, K and the data");

  CLI::App* validate = app.add_subcommand("validate", "run a property suite");
  validate
      ->add_option("--suite", suite,
                   "gradients | coverage | oracle | perturbation | elimination")
      ->required();
  validate->add_option("--artifacts", artifact_dir, "directory for failure replays");

  CLI::App* gen_env = app.add_subcommand("gen-env", "draw a world from a spec");
  gen_env->add_option("--spec", spec_path, "environment spec JSON")->required();
  gen_env->add_option("--out", out_path, "world JSON path")->required();

  CLI::App* experiment = app.add_subcommand("experiment", "run a (runs x seeds) sweep");
  experiment->add_option("--spec", spec_path, "experiment spec JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(algo, env_path, config_path, seed, out_path);
    if (offline->parsed()) return cmd_offline(problem_path, out_path, emit_widths);
    if (oracle->parsed())
      return cmd_oracle(params_path, catalog_path, K, grid_points, pmax);
    if (validate->parsed()) return cmd_validate(suite, artifact_dir);
    if (gen_env->parsed()) return cmd_gen_env(spec_path, out_path);
    if (experiment->parsed()) return cmd_experiment(spec_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
