#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "japs/io.hpp"

namespace japs {

using njson = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

njson parse_json_file(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw std::runtime_error("cannot open " + path);
  njson doc;
  try {
    ifs >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return doc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream ofs(path, std::ios::binary);
  if (!ofs) throw std::runtime_error("cannot open " + path + " for writing");
  ofs << text;
  if (!ofs.good()) throw std::runtime_error("write failed: " + path);
}

void check_keys(const njson& doc, const std::set<std::string>& allowed,
                const std::string& what) {
  if (!doc.is_object()) throw std::runtime_error(what + ": expected a JSON object");
  for (const auto& item : doc.items())
    if (!allowed.count(item.key()))
      throw std::runtime_error(what + ": unknown key '" + item.key() + "'");
}

const njson& need(const njson& doc, const std::string& key, const std::string& what) {
  if (!doc.contains(key)) throw std::runtime_error(what + ": missing key '" + key + "'");
  return doc.at(key);
}

Vec vec_from(const njson& arr, const std::string& what) {
  if (!arr.is_array()) throw std::runtime_error(what + ": expected an array");
  Vec v(static_cast<int>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw std::runtime_error(what + ": expected numbers");
    v(static_cast<int>(i)) = arr[i].get<double>();
  }
  return v;
}

njson vec_to(const Vec& v) {
  njson arr = njson::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

njson core_document(const ModelParams& params, const ItemCatalog& catalog) {
  njson doc;
  doc["d"] = catalog.d;
  njson items = njson::array();
  for (const Vec& x : catalog.items) items.push_back(vec_to(x));
  doc["items"] = items;
  doc["psi"] = vec_to(params.psi);
  doc["phi"] = vec_to(params.phi);
  doc["W"] = params.W;
  return doc;
}

ItemCatalog catalog_from(const njson& doc, const std::string& what) {
  ItemCatalog catalog;
  catalog.d = need(doc, "d", what).get<int>();
  for (const njson& row : need(doc, "items", what))
    catalog.items.push_back(vec_from(row, what + ": items"));
  catalog.validate();
  return catalog;
}

ModelParams params_from(const njson& doc, const std::string& what) {
  ModelParams params;
  params.psi = vec_from(need(doc, "psi", what), what + ": psi");
  params.phi = vec_from(need(doc, "phi", what), what + ": phi");
  params.W = need(doc, "W", what).get<double>();
  params.validate();
  return params;
}

}  // namespace

void save_catalog_params(const ModelParams& params, const ItemCatalog& catalog,
                         const std::string& path) {
  write_text(path, core_document(params, catalog).dump(2) + "\n");
}

void save_world(const World& world, const std::string& path) {
  njson doc = core_document(world.params, world.catalog);
  doc["K"] = world.spec.K;
  doc["L0"] = world.spec.L0;
  doc["context_mode"] = to_string(world.spec.context_mode);
  doc["feature_style"] = to_string(world.spec.feature_style);
  doc["seed"] = world.spec.seed;
  write_text(path, doc.dump(2) + "\n");
}

World load_world(const std::string& path) {
  const njson doc = parse_json_file(path);
  check_keys(doc,
             {"d", "items", "psi", "phi", "W", "K", "L0", "context_mode",
              "feature_style", "seed"},
             path);
  World world;
  world.catalog = catalog_from(doc, path);
  world.params = params_from(doc, path);
  world.spec.d = world.catalog.d;
  world.spec.N = world.catalog.count();
  world.spec.K = need(doc, "K", path).get<int>();
  world.spec.W = world.params.W;
  world.spec.L0 = need(doc, "L0", path).get<double>();
  world.spec.context_mode = doc.contains("context_mode")
                                ? context_mode_from_string(doc["context_mode"].get<std::string>())
                                : ContextMode::fixed;
  world.spec.feature_style =
      doc.contains("feature_style")
          ? feature_style_from_string(doc["feature_style"].get<std::string>())
          : FeatureStyle::nonneg_unit_ball;
  world.spec.seed = doc.contains("seed") ? doc["seed"].get<std::uint64_t>() : 0;
  world.spec.validate();
  world.constants = ProblemConstants::from(world.spec.W, world.spec.K, world.spec.L0);
  world.audit();
  return world;
}

ItemCatalog load_catalog(const std::string& path) {
  return catalog_from(parse_json_file(path), path);
}

ModelParams load_params(const std::string& path) {
  return params_from(parse_json_file(path), path);
}

EnvironmentSpec load_environment_spec(const std::string& path) {
  const njson doc = parse_json_file(path);
  check_keys(doc, {"d", "N", "K", "W", "L0", "context_mode", "feature_style", "seed"},
             path);
  EnvironmentSpec spec;
  spec.d = need(doc, "d", path).get<int>();
  spec.N = need(doc, "N", path).get<int>();
  spec.K = need(doc, "K", path).get<int>();
  spec.W = need(doc, "W", path).get<double>();
  spec.L0 = need(doc, "L0", path).get<double>();
  if (doc.contains("context_mode"))
    spec.context_mode = context_mode_from_string(doc["context_mode"].get<std::string>());
  if (doc.contains("feature_style"))
    spec.feature_style = feature_style_from_string(doc["feature_style"].get<std::string>());
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  spec.validate();
  return spec;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  for (const DatasetRecord& rec : data.records) {
    njson line;
    line["chosen"] = rec.chosen;
    line["assortment"] = rec.action.assortment;
    njson prices = njson::array();
    for (double p : rec.action.prices) prices.push_back(p);
    line["prices"] = prices;
    njson features = njson::array();
    for (const Vec& x : rec.features.items) features.push_back(vec_to(x));
    line["features"] = features;
    out << line.dump() << "\n";
  }
  write_text(path, out.str());
}

Dataset load_dataset(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw std::runtime_error("cannot open " + path);
  Dataset data;
  std::string line;
  long long lineno = 0;
  while (std::getline(ifs, line)) {
    ++lineno;
    if (line.empty()) continue;
    njson doc;
    try {
      doc = njson::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string what = path + ":" + std::to_string(lineno);
    check_keys(doc, {"chosen", "assortment", "prices", "features"}, what);

    ItemCatalog catalog;
    for (const njson& row : need(doc, "features", what))
      catalog.items.push_back(vec_from(row, what + ": features"));
    if (catalog.items.empty()) throw std::runtime_error(what + ": empty features");
    catalog.d = static_cast<int>(catalog.items.front().size());
    catalog.validate();

    Action action;
    for (const njson& v : need(doc, "assortment", what))
      action.assortment.push_back(v.get<int>());
    for (const njson& v : need(doc, "prices", what))
      action.prices.push_back(v.get<double>());
    action.validate(catalog.count(), -1, -1.0);

    data.push(catalog, action, need(doc, "chosen", what).get<int>());
  }
  data.validate();
  return data;
}

namespace {

template <typename T>
std::string join_semicolon(const std::vector<T>& values, bool as_double) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ";";
    if (as_double)
      out += format_double(static_cast<double>(values[i]));
    else
      out += std::to_string(static_cast<long long>(values[i]));
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

constexpr const char* kTraceHeader =
    "t,phase,bin,assortment,prices,chosen,inst_regret,cum_regret,opt_in_candidates";

}  // namespace

void save_trace(const RegretTrace& trace, const std::string& path) {
  std::ostringstream out;
  out << kTraceHeader << "\n";
  for (const TraceRow& row : trace.rows) {
    out << row.t << "," << row.phase << ",";
    if (row.bin < 0)
      out << "NA";
    else
      out << row.bin;
    out << "," << join_semicolon(row.action.assortment, false) << ","
        << join_semicolon(row.action.prices, true) << "," << row.chosen << ","
        << format_double(row.inst_regret) << "," << format_double(row.cum_regret) << ",";
    if (row.opt_in_candidates < 0)
      out << "NA";
    else
      out << row.opt_in_candidates;
    out << "\n";
  }
  write_text(path, out.str());
}

RegretTrace load_trace(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(ifs, line) || line != kTraceHeader)
    throw std::runtime_error(path + ": bad trace header");
  RegretTrace trace;
  long long lineno = 1;
  while (std::getline(ifs, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 9 fields");
    TraceRow row;
    row.t = std::stoll(f[0]);
    row.phase = f[1];
    row.bin = f[2] == "NA" ? -1 : std::stoi(f[2]);
    if (!f[3].empty())
      for (const std::string& s : split(f[3], ';'))
        row.action.assortment.push_back(std::stoi(s));
    if (!f[4].empty())
      for (const std::string& s : split(f[4], ';'))
        row.action.prices.push_back(std::strtod(s.c_str(), nullptr));
    row.chosen = std::stoi(f[5]);
    row.inst_regret = std::strtod(f[6].c_str(), nullptr);
    row.cum_regret = std::strtod(f[7].c_str(), nullptr);
    row.opt_in_candidates = f[8] == "NA" ? -1 : std::stoi(f[8]);
    trace.phase_counts[row.phase] += 1;
    trace.total_regret = row.cum_regret;
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

OfflineProblem load_offline_problem(const std::string& path) {
  const njson doc = parse_json_file(path);
  check_keys(doc, {"data", "catalog", "K", "price_grid", "delta", "lambda"}, path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  OfflineProblem problem;
  problem.dataset = load_dataset(resolve(need(doc, "data", path).get<std::string>()));
  problem.target_catalog =
      load_catalog(resolve(need(doc, "catalog", path).get<std::string>()));
  problem.K = need(doc, "K", path).get<int>();
  for (const njson& v : need(doc, "price_grid", path))
    problem.price_grid.push_back(v.get<double>());
  if (doc.contains("delta")) problem.delta = doc["delta"].get<double>();
  if (doc.contains("lambda")) problem.lambda = doc["lambda"].get<double>();
  problem.validate();
  return problem;
}

void save_offline_result(const OfflineResult& result, bool emit_widths,
                         const std::string& path) {
  njson doc;
  doc["assortment"] = result.action.assortment;
  njson prices = njson::array();
  for (double p : result.action.prices) prices.push_back(p);
  doc["prices"] = prices;
  doc["pessimistic_revenue"] = result.pessimistic_revenue;
  doc["theta_hat"] = vec_to(result.fit.theta_hat);
  doc["converged"] = result.fit.converged;
  doc["iterations"] = result.fit.iterations;
  njson burn;
  burn["satisfied"] = result.burn_in.satisfied;
  burn["worst_norm"] = result.burn_in.worst_norm;
  burn["threshold"] = result.burn_in.threshold;
  doc["burn_in"] = burn;
  if (emit_widths) {
    njson w;
    w["grid"] = result.widths.grid;
    njson values = njson::array();
    for (int i = 0; i < result.widths.items(); ++i) {
      njson row = njson::array();
      for (int g = 0; g < result.widths.points(); ++g)
        row.push_back(result.widths.values(i, g));
      values.push_back(row);
    }
    w["values"] = values;
    doc["widths"] = w;
  }
  write_text(path, doc.dump(2) + "\n");
}

std::string oracle_solution_json(const OracleSolution& solution) {
  njson doc;
  doc["assortment"] = solution.assortment;
  njson prices = njson::array();
  for (double p : solution.prices) prices.push_back(p);
  doc["prices"] = prices;
  doc["revenue"] = solution.revenue;
  doc["method"] = solution.method;
  return doc.dump(2) + "\n";
}

void save_oracle_solution(const OracleSolution& solution, const std::string& path) {
  write_text(path, oracle_solution_json(solution));
}

namespace {

struct ConfigValue {
  enum class Kind { integer, real, boolean, text, array } kind;
  long long i = 0;
  double r = 0.0;
  bool b = false;
  std::string s;
  std::vector<double> arr;
  bool arr_integral = true;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

ConfigValue parse_value(const std::string& raw, const std::string& where) {
  ConfigValue v{};
  const std::string s = trim(raw);
  if (s.empty()) throw std::runtime_error(where + ": empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw std::runtime_error(where + ": unterminated string");
    v.kind = ConfigValue::Kind::text;
    v.s = s.substr(1, s.size() - 2);
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw std::runtime_error(where + ": unterminated array");
    v.kind = ConfigValue::Kind::array;
    const std::string inner = trim(s.substr(1, s.size() - 2));
    if (!inner.empty())
      for (const std::string& part : split(inner, ',')) {
        double x;
        if (!parse_number(trim(part), x))
          throw std::runtime_error(where + ": array entries must be numbers");
        v.arr.push_back(x);
        if (x != static_cast<double>(static_cast<long long>(x))) v.arr_integral = false;
      }
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = ConfigValue::Kind::boolean;
    v.b = s == "true";
    return v;
  }
  double x;
  if (parse_number(s, x)) {
    if (s.find_first_of(".eE") == std::string::npos) {
      v.kind = ConfigValue::Kind::integer;
      v.i = std::strtoll(s.c_str(), nullptr, 10);
      v.r = x;
    } else {
      v.kind = ConfigValue::Kind::real;
      v.r = x;
    }
    return v;
  }
  v.kind = ConfigValue::Kind::text;  // bare word, e.g. supcb
  v.s = s;
  return v;
}

long long as_int(const ConfigValue& v, const std::string& where) {
  if (v.kind != ConfigValue::Kind::integer)
    throw std::runtime_error(where + ": expects an integer");
  return v.i;
}

double as_real(const ConfigValue& v, const std::string& where) {
  if (v.kind == ConfigValue::Kind::integer) return static_cast<double>(v.i);
  if (v.kind != ConfigValue::Kind::real)
    throw std::runtime_error(where + ": expects a number");
  return v.r;
}

bool as_bool(const ConfigValue& v, const std::string& where) {
  if (v.kind != ConfigValue::Kind::boolean)
    throw std::runtime_error(where + ": expects true or false");
  return v.b;
}

std::string as_text(const ConfigValue& v, const std::string& where) {
  if (v.kind != ConfigValue::Kind::text)
    throw std::runtime_error(where + ": expects a string");
  return v.s;
}

}  // namespace

OnlineConfig parse_online_config(const std::string& text, const std::string& origin) {
  OnlineConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // comments start at an unquoted '#'
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);

    if (line.front() == '[') {
      // the run config is flat; the only accepted table is a cosmetic [online]
      if (trim(line) != "[online]")
        throw std::runtime_error(where + ": unknown table " + line);
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const ConfigValue value = parse_value(line.substr(eq + 1), where);
    if (!seen.insert(key).second)
      throw std::runtime_error(where + ": duplicate key '" + key + "'");
    const std::string ctx = where + ": " + key;

    if (key == "T") {
      config.T = as_int(value, ctx);
    } else if (key == "algorithm") {
      config.algorithm = online_algo_from_string(as_text(value, ctx));
    } else if (key == "lambda") {
      config.lambda = as_real(value, ctx);
    } else if (key == "grid_points") {
      config.grid_points = static_cast<int>(as_int(value, ctx));
    } else if (key == "price_grid") {
      if (value.kind != ConfigValue::Kind::array)
        throw std::runtime_error(ctx + ": expects an array");
      config.price_grid = value.arr;
    } else if (key == "fixed_assortment_mode") {
      config.fixed_assortment_mode = as_bool(value, ctx);
    } else if (key == "fixed_assortment") {
      if (value.kind != ConfigValue::Kind::array || !value.arr_integral)
        throw std::runtime_error(ctx + ": expects an integer array");
      for (double x : value.arr) config.fixed_assortment.push_back(static_cast<int>(x));
    } else if (key == "mh_steps") {
      config.mh_steps = static_cast<int>(as_int(value, ctx));
    } else if (key == "mh_burn_in") {
      config.mh_burn_in = static_cast<int>(as_int(value, ctx));
    } else if (key == "mh_proposal_scale") {
      config.mh_proposal_scale = as_real(value, ctx);
    } else if (key == "c_seq") {
      config.c_seq = as_real(value, ctx);
    } else if (key == "width_scale") {
      config.width_scale = as_real(value, ctx);
    } else if (key == "explore_cap") {
      config.explore_cap = as_int(value, ctx);
    } else if (key == "tau_explore") {
      config.tau_explore = as_int(value, ctx);
    } else if (key == "action_cap") {
      config.action_cap = as_int(value, ctx);
    } else {
      throw std::runtime_error(
          ctx + ": unknown key (known: T, algorithm, lambda, grid_points, price_grid, "
                "fixed_assortment_mode, fixed_assortment, mh_steps, mh_burn_in, "
                "mh_proposal_scale, c_seq, width_scale, explore_cap, tau_explore, "
                "action_cap)");
    }
  }
  return config;
}

OnlineConfig load_online_config(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << ifs.rdbuf();
  return parse_online_config(buf.str(), path);
}

}  // namespace japs
