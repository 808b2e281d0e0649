#include "gmq/config.hpp"

#include <fstream>

#include "gmq/errors.hpp"
#include "json.hpp"

namespace gmq {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

double want_number(const json& j, const std::string& key) {
  if (!j.contains(key)) bad(key, "missing");
  if (!j[key].is_number()) bad(key, "expected a number");
  return j[key].get<double>();
}

int want_int(const json& j, const std::string& key) {
  if (!j.contains(key)) bad(key, "missing");
  if (!j[key].is_number_integer()) bad(key, "expected an integer");
  return j[key].get<int>();
}

MeasureModel parse_measure(const json& j, const std::string& prefix) {
  if (!j.is_object()) bad(prefix, "expected an object");
  if (!j.contains("type") || !j["type"].is_string()) bad(prefix + ".type", "missing or not a string");
  std::string type = j["type"].get<std::string>();

  if (type == "uniform") {
    double lo = want_number(j, "lo");
    double hi = want_number(j, "hi");
    if (!(lo < hi)) bad(prefix + ".lo", "requires lo < hi");
    return MeasureModel::uniform(lo, hi);
  }

  if (type == "ifs") {
    if (!j.contains("maps") || !j["maps"].is_array() || j["maps"].empty())
      bad(prefix + ".maps", "expected a non-empty array");
    std::vector<IfsMap> maps;
    for (size_t i = 0; i < j["maps"].size(); ++i) {
      const json& m = j["maps"][i];
      std::string mk = prefix + ".maps[" + std::to_string(i) + "]";
      if (!m.is_object()) bad(mk, "expected an object");
      IfsMap map;
      map.ratio = want_number(m, "ratio");
      map.offset = want_number(m, "offset");
      map.prob = m.contains("prob") ? want_number(m, "prob") : 1.0 / (double)j["maps"].size();
      maps.push_back(map);
    }
    return MeasureModel::ifs(std::move(maps));
  }

  if (type == "mixture") {
    if (!j.contains("components") || !j["components"].is_array() || j["components"].empty())
      bad(prefix + ".components", "expected a non-empty array");
    std::vector<MeasureModel> parts;
    for (size_t i = 0; i < j["components"].size(); ++i)
      parts.push_back(parse_measure(j["components"][i], prefix + ".components[" + std::to_string(i) + "]"));
    std::vector<double> weights;
    if (j.contains("weights")) {
      if (!j["weights"].is_array() || j["weights"].size() != parts.size())
        bad(prefix + ".weights", "must match components in length");
      for (const auto& w : j["weights"]) {
        if (!w.is_number()) bad(prefix + ".weights", "expected numbers");
        weights.push_back(w.get<double>());
      }
    } else {
      weights.assign(parts.size(), 1.0 / (double)parts.size());
    }
    return MeasureModel::mixture(std::move(weights), std::move(parts));
  }

  bad(prefix + ".type", "unknown type '" + type + "' (uniform | ifs | mixture)");
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  ExperimentConfig cfg;
  if (!j.contains("measure")) bad("measure", "missing");
  cfg.model = parse_measure(j["measure"], "measure");
  validate(cfg.model);

  if (j.contains("depth")) cfg.depth = want_int(j, "depth");
  if (cfg.depth < 0 || cfg.depth > 60) bad("depth", "must be in [0, 60]");
  if (j.contains("r")) cfg.r = want_number(j, "r");
  if (cfg.r < 0.0) bad("r", "must be >= 0");
  if (j.contains("n")) cfg.n = want_int(j, "n");
  if (cfg.n < 1) bad("n", "must be >= 1");
  if (j.contains("n_range")) {
    const json& nr = j["n_range"];
    if (!nr.is_object()) bad("n_range", "expected an object with lo/hi");
    cfg.n_lo = want_int(nr, "lo");
    cfg.n_hi = want_int(nr, "hi");
  }
  if (cfg.n_lo < 1 || cfg.n_hi < cfg.n_lo) bad("n_range", "requires 1 <= lo <= hi");

  if (j.contains("packing")) {
    const json& p = j["packing"];
    if (!p.is_object()) bad("packing", "expected an object");
    if (p.contains("m")) {
      cfg.m = want_int(p, "m");
      if (*cfg.m < 2) bad("packing.m", "must be >= 2");
    }
    if (p.contains("k")) cfg.k = want_int(p, "k");
    if (cfg.k < 1) bad("packing.k", "must be >= 1");
    if (p.contains("delta")) {
      cfg.delta = want_number(p, "delta");
      if (!(*cfg.delta > 0.0 && *cfg.delta <= 1.0 / 16.0))
        bad("packing.delta", "must lie in (0, 1/16]");
    }
  }

  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    if (!b.is_object()) bad("budgets", "expected an object");
    if (b.contains("max_cells")) {
      if (!b["max_cells"].is_number_integer()) bad("budgets.max_cells", "expected an integer");
      cfg.budget_cells = b["max_cells"].get<long long>();
      if (cfg.budget_cells < 1) bad("budgets.max_cells", "must be >= 1");
    }
    if (b.contains("aux_n_cap")) cfg.aux_n_cap = want_int(b, "aux_n_cap");
    if (cfg.aux_n_cap < 4) bad("budgets.aux_n_cap", "must be >= 4");
    if (b.contains("aux_cell_cap")) cfg.aux_cell_cap = want_int(b, "aux_cell_cap");
    if (cfg.aux_cell_cap < 8) bad("budgets.aux_cell_cap", "must be >= 8");
    if (b.contains("oracle_grid")) cfg.oracle_grid = want_int(b, "oracle_grid");
    if (cfg.oracle_grid < 8) bad("budgets.oracle_grid", "must be >= 8");
    if (b.contains("seed_grid")) cfg.seed_grid = want_int(b, "seed_grid");
    if (cfg.seed_grid < 2) bad("budgets.seed_grid", "must be >= 2");
  }

  if (j.contains("ad")) {
    const json& a = j["ad"];
    if (!a.is_object()) bad("ad", "expected an object");
    if (a.contains("s0")) {
      cfg.s0 = want_number(a, "s0");
      if (!(*cfg.s0 > 0.0)) bad("ad.s0", "must be > 0");
    }
    if (a.contains("samples")) cfg.ad_samples = want_int(a, "samples");
    if (cfg.ad_samples < 2) bad("ad.samples", "must be >= 2");
    if (a.contains("eps_grid")) {
      if (!a["eps_grid"].is_array()) bad("ad.eps_grid", "expected an array");
      for (const auto& e : a["eps_grid"]) {
        if (!e.is_number() || !(e.get<double>() > 0.0)) bad("ad.eps_grid", "entries must be positive numbers");
        cfg.eps_grid.push_back(e.get<double>());
      }
    }
  }

  if (j.contains("slack")) {
    const json& s = j["slack"];
    if (!s.is_object()) bad("slack", "expected an object");
    if (s.contains("theorem")) cfg.theorem_slack = want_number(s, "theorem");
    if (!(cfg.theorem_slack >= 1.0)) bad("slack.theorem", "must be >= 1");
  }

  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) bad("out_dir", "expected a string");
    cfg.out_dir = j["out_dir"].get<std::string>();
    if (cfg.out_dir.empty()) bad("out_dir", "must be non-empty");
  }

  return cfg;
}

}  // namespace gmq
