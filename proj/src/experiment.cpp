#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "japs/experiment.hpp"

namespace japs {

using njson = nlohmann::ordered_json;

void ExperimentSpec::validate() const {
  environment.validate();
  if (runs.empty()) throw std::invalid_argument("experiment: no runs");
  if (seeds.empty()) throw std::invalid_argument("experiment: no seeds");
  if (output_dir.empty()) throw std::invalid_argument("experiment: no output_dir");
  std::set<std::string> names;
  for (const ExperimentRun& run : runs) {
    if (run.name.empty()) throw std::invalid_argument("experiment: run without a name");
    for (char c : run.name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
        throw std::invalid_argument("experiment: run name '" + run.name +
                                    "' must match [A-Za-z0-9_-]+");
    if (!names.insert(run.name).second)
      throw std::invalid_argument("experiment: duplicate run name '" + run.name + "'");
  }
}

Rng replication_rng(std::uint64_t master, std::uint64_t run_index,
                    std::uint64_t seed_value) {
  return Rng(derive_seed(master, run_index, seed_value));
}

int thread_budget() {
  if (const char* env = std::getenv("JAPS_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(hw);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

namespace {

ExperimentRun run_from(const njson& doc, const std::string& what) {
  static const std::set<std::string> online_keys = {"name", "kind", "config"};
  static const std::set<std::string> offline_keys = {"name", "kind",  "n",
                                                     "K",    "grid_points", "delta",
                                                     "lambda"};
  if (!doc.is_object()) throw std::runtime_error(what + ": run must be an object");
  ExperimentRun run;
  if (!doc.contains("name")) throw std::runtime_error(what + ": run missing 'name'");
  run.name = doc["name"].get<std::string>();
  const std::string kind =
      doc.contains("kind") ? doc["kind"].get<std::string>() : "online";

  if (kind == "online") {
    run.kind = ExperimentRun::Kind::online;
    for (const auto& item : doc.items())
      if (!online_keys.count(item.key()))
        throw std::runtime_error(what + ": unknown key '" + item.key() + "'");
    if (!doc.contains("config"))
      throw std::runtime_error(what + ": online run missing 'config'");
    // funnel the object through the flat-config parser so key/type policing
    // lives in one place
    std::ostringstream text;
    for (const auto& item : doc["config"].items()) {
      const njson& v = item.value();
      text << item.key() << " = ";
      if (v.is_string())
        text << '"' << v.get<std::string>() << '"';
      else if (v.is_boolean())
        text << (v.get<bool>() ? "true" : "false");
      else if (v.is_number_integer())
        text << v.get<long long>();
      else if (v.is_number())
        text << format_double(v.get<double>());
      else if (v.is_array()) {
        text << "[";
        for (size_t i = 0; i < v.size(); ++i) {
          if (i) text << ", ";
          if (v[i].is_number_integer())
            text << v[i].get<long long>();
          else
            text << format_double(v[i].get<double>());
        }
        text << "]";
      } else {
        throw std::runtime_error(what + ": config." + item.key() + " has bad type");
      }
      text << "\n";
    }
    run.online = parse_online_config(text.str(), what + ": config");
  } else if (kind == "offline") {
    run.kind = ExperimentRun::Kind::offline;
    for (const auto& item : doc.items())
      if (!offline_keys.count(item.key()))
        throw std::runtime_error(what + ": unknown key '" + item.key() + "'");
    if (doc.contains("n")) run.offline_n = doc["n"].get<int>();
    if (doc.contains("K")) run.offline_K = doc["K"].get<int>();
    if (doc.contains("grid_points")) run.offline_grid_points = doc["grid_points"].get<int>();
    if (doc.contains("delta")) run.offline_delta = doc["delta"].get<double>();
    if (doc.contains("lambda")) run.offline_lambda = doc["lambda"].get<double>();
  } else {
    throw std::runtime_error(what + ": kind must be online or offline");
  }
  return run;
}

struct JobResult {
  bool ok = false;
  std::string error;
  std::string file;      // written output, relative to output_dir
  double subopt = 0.0;   // offline runs
};

struct OfflineOutcome {
  OfflineResult result;
  double subopt = 0.0;
};

OfflineOutcome offline_job(const World& world, const ExperimentRun& run, Rng& rng) {
  BehaviorPolicy policy;  // uniform over valid actions
  OfflineProblem problem;
  problem.dataset = generate_offline_dataset(world, policy, run.offline_n, rng);
  problem.target_catalog = world.catalog;
  problem.K = run.offline_K;
  problem.price_grid = uniform_grid(world.constants.P, run.offline_grid_points);
  problem.delta = run.offline_delta;
  problem.lambda = run.offline_lambda;
  OfflineOutcome out;
  out.result = run_lcb(problem);
  out.subopt = suboptimality(out.result, world.params, problem);
  return out;
}

void append_stats(njson& node, std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  const double q25 = quantile_sorted(values, 0.25);
  const double q75 = quantile_sorted(values, 0.75);
  node["mean"] = mean;
  node["median"] = quantile_sorted(values, 0.5);
  node["q25"] = q25;
  node["q75"] = q75;
  node["iqr"] = q75 - q25;
}

}  // namespace

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw std::runtime_error("cannot open " + path);
  njson doc;
  try {
    ifs >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  for (const auto& item : doc.items())
    if (item.key() != "environment" && item.key() != "runs" && item.key() != "seeds" &&
        item.key() != "output_dir")
      throw std::runtime_error(path + ": unknown key '" + item.key() + "'");

  ExperimentSpec spec;
  if (!doc.contains("environment"))
    throw std::runtime_error(path + ": missing 'environment'");
  {
    const njson& env = doc["environment"];
    for (const auto& item : env.items()) {
      static const std::set<std::string> keys = {"d",  "N",  "K",           "W",
                                                 "L0", "context_mode", "feature_style",
                                                 "seed"};
      if (!keys.count(item.key()))
        throw std::runtime_error(path + ": environment: unknown key '" + item.key() + "'");
    }
    spec.environment.d = env.at("d").get<int>();
    spec.environment.N = env.at("N").get<int>();
    spec.environment.K = env.at("K").get<int>();
    spec.environment.W = env.at("W").get<double>();
    spec.environment.L0 = env.at("L0").get<double>();
    if (env.contains("context_mode"))
      spec.environment.context_mode =
          context_mode_from_string(env["context_mode"].get<std::string>());
    if (env.contains("feature_style"))
      spec.environment.feature_style =
          feature_style_from_string(env["feature_style"].get<std::string>());
    if (env.contains("seed")) spec.environment.seed = env["seed"].get<std::uint64_t>();
  }
  if (!doc.contains("runs")) throw std::runtime_error(path + ": missing 'runs'");
  for (size_t r = 0; r < doc["runs"].size(); ++r)
    spec.runs.push_back(
        run_from(doc["runs"][r], path + ": runs[" + std::to_string(r) + "]"));
  if (!doc.contains("seeds")) throw std::runtime_error(path + ": missing 'seeds'");
  for (const njson& s : doc["seeds"]) spec.seeds.push_back(s.get<std::uint64_t>());
  if (!doc.contains("output_dir"))
    throw std::runtime_error(path + ": missing 'output_dir'");
  spec.output_dir = doc["output_dir"].get<std::string>();
  spec.validate();
  return spec;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.output_dir);

  Rng env_rng(spec.environment.seed);
  const World world = generate_environment(spec.environment, env_rng);

  const size_t n_runs = spec.runs.size();
  const size_t n_seeds = spec.seeds.size();
  std::vector<JobResult> results(n_runs * n_seeds);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t job = next.fetch_add(1);
      if (job >= results.size()) return;
      const size_t r = job / n_seeds;
      const size_t s = job % n_seeds;
      const ExperimentRun& run = spec.runs[r];
      JobResult& out = results[job];
      try {
        Rng rng = replication_rng(spec.environment.seed, 1 + r, spec.seeds[s]);
        if (run.kind == ExperimentRun::Kind::online) {
          const RegretTrace trace = run_online(world, run.online, rng);
          out.file = run.name + "_seed" + std::to_string(spec.seeds[s]) + ".csv";
          save_trace(trace, (std::filesystem::path(spec.output_dir) / out.file).string());
        } else {
          const OfflineOutcome outcome = offline_job(world, run, rng);
          out.file = run.name + "_seed" + std::to_string(spec.seeds[s]) + ".json";
          out.subopt = outcome.subopt;
          save_offline_result(outcome.result, false,
                              (std::filesystem::path(spec.output_dir) / out.file).string());
        }
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };

  const int budget = std::min<int>(thread_budget(), static_cast<int>(results.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < budget; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  ExperimentReport report;
  njson summary;
  {
    njson env;
    env["d"] = spec.environment.d;
    env["N"] = spec.environment.N;
    env["K"] = spec.environment.K;
    env["W"] = spec.environment.W;
    env["L0"] = spec.environment.L0;
    env["context_mode"] = to_string(spec.environment.context_mode);
    env["feature_style"] = to_string(spec.environment.feature_style);
    env["seed"] = spec.environment.seed;
    summary["environment"] = env;
  }
  summary["seeds"] = spec.seeds;
  summary["runs"] = njson::array();

  for (size_t r = 0; r < n_runs; ++r) {
    const ExperimentRun& run = spec.runs[r];
    njson node;
    node["name"] = run.name;
    node["kind"] = run.kind == ExperimentRun::Kind::online ? "online" : "offline";
    njson files = njson::array();
    njson failed = njson::array();

    if (run.kind == ExperimentRun::Kind::online) {
      node["algorithm"] = to_string(run.online.algorithm);
      const long long T = run.online.T;
      const std::vector<std::pair<std::string, long long>> checkpoints = {
          {"quarter", std::max<long long>(1, T / 4)},
          {"half", std::max<long long>(1, T / 2)},
          {"final", T}};
      std::map<std::string, std::vector<double>> at;
      for (size_t s = 0; s < n_seeds; ++s) {
        const JobResult& jr = results[r * n_seeds + s];
        if (!jr.ok) {
          failed.push_back(std::to_string(spec.seeds[s]) + ": " + jr.error);
          continue;
        }
        files.push_back(jr.file);
        report.written.push_back(jr.file);
        // recompute from the written file, not from memory
        const RegretTrace trace =
            load_trace((std::filesystem::path(spec.output_dir) / jr.file).string());
        for (const auto& [label, t] : checkpoints)
          at[label].push_back(trace.cum_regret_at(t));
      }
      njson cum;
      for (const auto& [label, t] : checkpoints) {
        if (at[label].empty()) continue;
        njson stat;
        stat["t"] = t;
        append_stats(stat, at[label]);
        cum[label] = stat;
      }
      node["cum_regret"] = cum;
    } else {
      std::vector<double> subopts;
      for (size_t s = 0; s < n_seeds; ++s) {
        const JobResult& jr = results[r * n_seeds + s];
        if (!jr.ok) {
          failed.push_back(std::to_string(spec.seeds[s]) + ": " + jr.error);
          continue;
        }
        files.push_back(jr.file);
        report.written.push_back(jr.file);
        subopts.push_back(jr.subopt);
      }
      if (!subopts.empty()) {
        njson stat;
        stat["values"] = subopts;
        append_stats(stat, subopts);
        node["subopt"] = stat;
      }
    }

    node["files"] = files;
    if (!failed.empty()) node["failed"] = failed;
    summary["runs"].push_back(node);
  }

  for (size_t job = 0; job < results.size(); ++job)
    if (!results[job].ok) {
      ++report.failures;
      const size_t r = job / n_seeds;
      const size_t s = job % n_seeds;
      report.messages.push_back(spec.runs[r].name + " seed " +
                                std::to_string(spec.seeds[s]) + ": " +
                                results[job].error);
    }

  report.summary_path = (std::filesystem::path(spec.output_dir) / "summary.json").string();
  std::ofstream ofs(report.summary_path, std::ios::binary);
  if (!ofs) throw std::runtime_error("cannot open " + report.summary_path);
  ofs << summary.dump(2) << "\n";
  if (!ofs.good()) throw std::runtime_error("write failed: " + report.summary_path);
  return report;
}

}  // namespace japs
