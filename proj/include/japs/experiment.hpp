#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "japs/io.hpp"

namespace japs {

struct ExperimentRun {
  std::string name;  // file stem: [A-Za-z0-9_-]+
  enum class Kind { online, offline } kind = Kind::online;

  OnlineConfig online;  // kind == online

  // kind == offline: dataset sizing for the pessimistic planner
  int offline_n = 1000;
  int offline_K = 1;
  int offline_grid_points = 5;
  double offline_delta = 0.1;
  double offline_lambda = 1e-6;
};

struct ExperimentSpec {
  EnvironmentSpec environment;
  std::vector<ExperimentRun> runs;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;

  void validate() const;
};

struct ExperimentReport {
  int failures = 0;
  std::vector<std::string> messages;  // one line per failed (run, seed)
  std::string summary_path;
  std::vector<std::string> written;  // all output files, in (run, seed) order
};

// {"environment": {...}, "runs": [{"name","kind","config"|sizing...}],
//  "seeds": [...], "output_dir": "..."}
ExperimentSpec load_experiment_spec(const std::string& path);

// Fans (run, seed) jobs out to a bounded worker pool (JAPS_THREADS), writes one
// trace/result file per job plus summary.json; statistics are recomputed from
// the written files. Failed jobs are recorded, not fatal.
ExperimentReport run_experiment(const ExperimentSpec& spec);

// Replication stream for (master seed, run index, seed value). Run index 0 is
// the `simulate`/`offline` CLI surface; experiment runs use 1 + position.
Rng replication_rng(std::uint64_t master, std::uint64_t run_index,
                    std::uint64_t seed_value);

int thread_budget();

// Linear-interpolation quantile of a sorted sample, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace japs
