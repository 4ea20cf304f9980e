#pragma once

#include <string>

#include "japs/offline.hpp"
#include "japs/online.hpp"

namespace japs {

// "%.17g" — enough digits to round-trip a double through text.
std::string format_double(double v);

// Combined parameter/catalog document:
// {"d": int, "items": [[...]], "psi": [...], "phi": [...], "W": float}
// save_world appends the environment fields (K, L0, context_mode, feature_style,
// seed) so the document reconstructs a full World; the loaders below accept
// either the combined document or a bare catalog/params file.
void save_catalog_params(const ModelParams& params, const ItemCatalog& catalog,
                         const std::string& path);
void save_world(const World& world, const std::string& path);
World load_world(const std::string& path);
ItemCatalog load_catalog(const std::string& path);
ModelParams load_params(const std::string& path);

// {"d","N","K","W","L0","context_mode","feature_style","seed"}; the last three
// are optional and default to fixed / nonneg_unit_ball / 0.
EnvironmentSpec load_environment_spec(const std::string& path);

// JSON Lines, one record per line:
// {"chosen": int, "assortment": [int], "prices": [float], "features": [[float]]}
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

// CSV columns, exact order:
// t,phase,bin,assortment,prices,chosen,inst_regret,cum_regret,opt_in_candidates
// Lists are semicolon-joined; bin and opt_in_candidates print NA when absent.
void save_trace(const RegretTrace& trace, const std::string& path);
RegretTrace load_trace(const std::string& path);

// {"data": <jsonl path>, "catalog": <json path>, "K": int, "price_grid": [...],
//  "delta": float, "lambda": float}; relative paths resolve against the
// problem file's directory.
OfflineProblem load_offline_problem(const std::string& path);
void save_offline_result(const OfflineResult& result, bool emit_widths,
                         const std::string& path);
void save_oracle_solution(const OracleSolution& solution, const std::string& path);
std::string oracle_solution_json(const OracleSolution& solution);

// Flat key = value text with # comments; unknown keys are errors. Values are
// ints, floats, bools, strings, or [v1, v2, ...] arrays.
OnlineConfig load_online_config(const std::string& path);
OnlineConfig parse_online_config(const std::string& text, const std::string& origin);

}  // namespace japs
