#include "gmq/cli.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmq/analysis.hpp"
#include "gmq/config.hpp"
#include "gmq/covering.hpp"
#include "gmq/errors.hpp"
#include "gmq/measure.hpp"
#include "gmq/quantizer.hpp"
#include "gmq/report_io.hpp"
#include "gmq/voronoi.hpp"

namespace gmq {

namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return cfg.out_dir + "/" + name;
}

DpOptions dp_options(const ExperimentConfig& cfg) {
  DpOptions opts;
  opts.seed_count = cfg.seed_grid;
  return opts;
}

DiscretizedMeasure make_measure(const ExperimentConfig& cfg) {
  DiscretizeOptions opts;
  opts.max_cells = (std::size_t)cfg.budget_cells;
  return discretize(cfg.model, cfg.depth, opts);
}

double resolve_s0(const ExperimentConfig& cfg) {
  if (cfg.s0) return *cfg.s0;
  if (cfg.model.kind == MeasureModel::Kind::Mixture)
    throw ConfigError("config key 'ad.s0': required for mixture measures");
  return similarity_dimension(cfg.model);
}

std::vector<double> resolve_eps_grid(const ExperimentConfig& cfg,
                                     const DiscretizedMeasure& dm) {
  if (!cfg.eps_grid.empty()) return cfg.eps_grid;
  double floor_eps = 4.0 * dm.max_cell_width();
  double top = dm.diameter() / 4.0;
  if (!(floor_eps < top))
    throw ConfigError(
        "config key 'depth': too shallow for an automatic scale grid "
        "(4x max cell width >= diameter/4); raise depth or give ad.eps_grid");
  double lo = std::max(floor_eps, top / 256.0);
  const int count = 8;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = lo * std::pow(top / lo, (double)i / (count - 1));
  return grid;
}

ADProfile make_profile(const ExperimentConfig& cfg, const DiscretizedMeasure& dm) {
  return ad_validate(dm, resolve_s0(cfg), resolve_eps_grid(cfg, dm), cfg.ad_samples);
}

ordered_json profile_json(const ADProfile& p) {
  ordered_json j;
  j["s0"] = p.s0;
  j["c1_hat"] = p.c1_hat;
  j["c2_hat"] = p.c2_hat;
  j["eps0_hat"] = p.eps0_hat;
  j["slope_min"] = p.slope_min;
  j["slope_max"] = p.slope_max;
  j["non_ad_flag"] = p.non_ad_flag;
  return j;
}

int cmd_ad_check(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ADProfile p = make_profile(cfg, dm);

  ordered_json j = profile_json(p);
  j["depth"] = cfg.depth;
  j["cells"] = (long long)dm.size();
  j["sample_count"] = cfg.ad_samples;
  write_json_atomic(out_path(cfg, "profile.json"), j);

  CsvTable csv({"eps", "min_ratio", "max_ratio"});
  for (const auto& s : p.scales) {
    csv.cell(s.eps).cell(s.min_ratio).cell(s.max_ratio);
    csv.end_row();
  }
  csv.write(out_path(cfg, "ad_scales.csv"));
  std::printf("ad-check: s0=%s band=[%s, %s]%s\n", format_sig(p.s0).c_str(),
              format_sig(p.c1_hat).c_str(), format_sig(p.c2_hat).c_str(),
              p.non_ad_flag ? " NON-AD" : "");
  return 0;
}

int cmd_quantize(const ExperimentConfig& cfg, bool check_oracle) {
  DiscretizedMeasure dm = make_measure(cfg);
  ErrorOrder r{cfg.r};
  QuantizerResult res = dp_optimal_1d(dm, cfg.n, r, dp_options(cfg));
  PartitionStats stats = cell_stats(build_partition(dm, res.codebook), dm, r);

  ordered_json j;
  j["n"] = cfg.n;
  j["r"] = cfg.r;
  j["codebook"] = res.codebook.points;
  j["objective"] = res.objective;
  j["error"] = res.error;
  j["method"] = res.method;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["n_min_mass"] = stats.n_min_mass;
  j["n_max_mass"] = stats.n_max_mass;
  j["min_inradius_ratio"] = stats.min_ratio;
  if (check_oracle) {
    OracleOptions oopts;
    oopts.grid_resolution = cfg.oracle_grid;
    QuantizerResult oracle = brute_force_oracle(dm, cfg.n, r, oopts);
    j["oracle_objective"] = oracle.objective;
    j["oracle_gap"] = res.objective - oracle.objective;
  }
  write_json_atomic(out_path(cfg, "quantize.json"), j);

  CsvTable csv({"index", "point", "mass", "support_diameter", "inradius", "ratio",
                "local_distortion"});
  for (size_t i = 0; i < stats.cells.size(); ++i) {
    const CellStats& c = stats.cells[i];
    csv.cell((int)i).cell(c.point).cell(c.mass).cell(c.support_diameter)
        .cell(c.inradius).cell(c.ratio).cell(c.local_distortion);
    csv.end_row();
  }
  csv.write(out_path(cfg, "cells.csv"));
  std::printf("quantize: n=%d objective=%s error=%s\n", cfg.n,
              format_sig(res.objective).c_str(), format_sig(res.error).c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ErrorOrder r{cfg.r};
  MassBand band = mass_band(dm, cfg.n_lo, cfg.n_hi, r, dp_options(cfg));

  CsvTable csv({"n", "error", "n_min_mass", "n_max_mass", "min_inradius_ratio"});
  std::vector<double> xs;
  PlotSeries lo{"n*min mass", {}}, hi{"n*max mass", {}}, ratio{"min inradius ratio", {}};
  for (const BandRow& row : band.rows) {
    csv.cell(row.n).cell(row.error).cell(row.n_min_mass).cell(row.n_max_mass)
        .cell(row.min_ratio);
    csv.end_row();
    xs.push_back(row.n);
    lo.y.push_back(row.n_min_mass);
    hi.y.push_back(row.n_max_mass);
    ratio.y.push_back(row.min_ratio);
  }
  csv.write(out_path(cfg, "sweep.csv"));

  ordered_json j;
  j["n_lo"] = cfg.n_lo;
  j["n_hi"] = cfg.n_hi;
  j["r"] = cfg.r;
  j["d1"] = band.d1;
  j["d2"] = band.d2;
  j["d3"] = band.d3;
  write_json_atomic(out_path(cfg, "sweep.json"), j);
  write_file_atomic(out_path(cfg, "sweep_band.svg"),
                    svg_plot("cell-mass band vs n", xs, {lo, hi, ratio}, true));
  std::printf("sweep: n=%d..%d d1=%s d2=%s d3=%s\n", cfg.n_lo, cfg.n_hi,
              format_sig(band.d1).c_str(), format_sig(band.d2).c_str(),
              format_sig(band.d3).c_str());
  return 0;
}

int cmd_packing(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ADProfile profile = make_profile(cfg, dm);
  AuxiliaryConstants consts = constants_from(profile.c1_hat, profile.c2_hat, profile.s0, 1,
                                             ConstantsOptions{cfg.delta, {}});
  std::vector<Packing> family = packing_family(dm, profile, 1, cfg.k, cfg.m);
  const Packing& pk = family.back();
  NeighborGraph graph = neighbor_graph(pk, consts.delta);
  PackingMassReport mass = verify_packing_mass(pk, dm, profile);

  ordered_json j;
  j["m"] = pk.m;
  j["k"] = pk.k;
  j["k0"] = pk.k0;
  j["radius"] = pk.radius;
  j["delta"] = consts.delta;
  j["phi_by_level"] = ordered_json::array();
  for (const Packing& p : family) j["phi_by_level"].push_back((long long)p.phi());
  j["eta1_hat"] = mass.eta1_hat;
  j["eta2_hat"] = mass.eta2_hat;
  j["mass_band_pass"] = mass.pass;
  j["M0"] = consts.M0;
  long long max_M = 0;
  for (std::size_t s = 0; s < graph.M.size(); ++s)
    max_M = std::max(max_M, (long long)graph.M[s]);
  j["max_M_sigma"] = max_M;
  write_json_atomic(out_path(cfg, "packing.json"), j);

  CsvTable csv({"sigma", "center", "E_lo", "E_hi", "A_lo", "A_hi", "M_sigma",
                "phi_mass"});
  for (std::size_t s = 0; s < pk.centers.size(); ++s) {
    csv.cell((int)s).cell(pk.centers[s]).cell(pk.E(s).lo).cell(pk.E(s).hi)
        .cell(pk.A(s).lo).cell(pk.A(s).hi).cell((long long)graph.M[s])
        .cell(mass.values[s]);
    csv.end_row();
  }
  csv.write(out_path(cfg, "packing.csv"));
  std::printf("packing: m=%d k=%d phi=%zu max M_sigma=%lld (M0=%lld)\n", pk.m, pk.k,
              pk.phi(), max_M, consts.M0);
  return 0;
}

ordered_json finding_json(const AuxFinding& f) {
  ordered_json j;
  j["name"] = f.name;
  j["found"] = f.found;
  if (f.found) j["value"] = f.value;
  j["best_margin"] = f.best_margin;
  j["best_n"] = f.best_n;
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

int cmd_aux_constants(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ADProfile profile = make_profile(cfg, dm);
  AuxiliaryConstants consts = constants_from(profile.c1_hat, profile.c2_hat, profile.s0, 1,
                                             ConstantsOptions{cfg.delta, {}});
  Packing pk = build_packing(dm, profile, cfg.k, cfg.m);
  NeighborGraph graph = neighbor_graph(pk, consts.delta);

  ordered_json cj;
  cj["c1"] = consts.c1;
  cj["c2"] = consts.c2;
  cj["s0"] = consts.s0;
  cj["q"] = consts.q;
  cj["delta"] = consts.delta;
  cj["L0"] = consts.L0;
  cj["L1"] = consts.L1;
  cj["L2"] = consts.L2;
  cj["n0"] = consts.n0;
  cj["M0"] = consts.M0;
  cj["eta1"] = consts.eta1;
  cj["eta2"] = consts.eta2;
  cj["eta3"] = consts.eta3;
  cj["eta4"] = consts.eta4;
  cj["xi"] = consts.xi;
  cj["zeta"] = consts.zeta;
  cj["m"] = consts.m;
  cj["N"] = consts.N;
  write_json_atomic(out_path(cfg, "constants.json"), cj);

  AuxBudget budget;
  budget.n_cap = cfg.aux_n_cap;
  budget.cell_cap = cfg.aux_cell_cap;
  AuxIntegerEstimate est = estimate_aux_integers(dm, pk, graph, consts, budget);

  ordered_json aj;
  aj["n_ref"] = est.n_ref;
  aj["probe_lo"] = est.probe_lo;
  aj["probe_hi"] = est.probe_hi;
  aj["n1"] = finding_json(est.n1);
  aj["n2"] = finding_json(est.n2);
  if (est.n3) aj["n3"] = *est.n3;
  aj["n4"] = finding_json(est.n4);
  if (est.n5) aj["n5"] = *est.n5;
  write_json_atomic(out_path(cfg, "aux.json"), aj);

  auto show = [](const AuxFinding& f) {
    return f.found ? std::to_string(f.value) : (f.note.empty() ? "not-found" : f.note);
  };
  std::printf("aux-constants: n1=%s n2=%s n4=%s (probed %d..%d)\n",
              show(est.n1).c_str(), show(est.n2).c_str(), show(est.n4).c_str(),
              est.probe_lo, est.probe_hi);
  return 0;
}

int cmd_verify_theorem(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ErrorOrder r{cfg.r};
  TheoremReport rep = theorem_report(dm, cfg.n_lo, cfg.n_hi, r, cfg.theorem_slack,
                                     dp_options(cfg));

  CsvTable csv({"n", "e_n", "n_min_mass", "n_max_mass", "min_inradius_ratio"});
  std::vector<double> xs;
  PlotSeries lo{"n*min mass", {}}, hi{"n*max mass", {}}, ratio{"min inradius ratio", {}};
  for (const BandRow& row : rep.band.rows) {
    csv.cell(row.n).cell(row.error).cell(row.n_min_mass).cell(row.n_max_mass)
        .cell(row.min_ratio);
    csv.end_row();
    xs.push_back(row.n);
    lo.y.push_back(row.n_min_mass);
    hi.y.push_back(row.n_max_mass);
    ratio.y.push_back(row.min_ratio);
  }
  csv.write(out_path(cfg, "theorem.csv"));

  ordered_json j;
  j["n_lo"] = cfg.n_lo;
  j["n_hi"] = cfg.n_hi;
  j["r"] = cfg.r;
  j["d1"] = rep.d1;
  j["d2"] = rep.d2;
  j["d3"] = rep.d3;
  j["slack"] = rep.slack;
  j["pass"] = rep.pass;
  write_json_atomic(out_path(cfg, "theorem.json"), j);
  write_file_atomic(out_path(cfg, "theorem_band.svg"),
                    svg_plot("theorem band vs n", xs, {lo, hi, ratio}, true));
  std::printf("verify-theorem: d1=%s d2=%s d3=%s pass=%s\n", format_sig(rep.d1).c_str(),
              format_sig(rep.d2).c_str(), format_sig(rep.d3).c_str(),
              rep.pass ? "yes" : "NO");
  return 0;
}

int cmd_gap_report(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ADProfile profile = make_profile(cfg, dm);
  GapReport rep = gap_report(dm, cfg.n_hi, profile, dp_options(cfg));

  CsvTable csv({"k", "ehat", "gap", "zeta", "chi", "dmin", "dmax", "lambda", "l_k",
                "N_k", "eta_k", "s_k", "g_k", "dlow_bound", "dbar_bound", "gap_pass",
                "pigeonhole_pass"});
  for (const GapRow& row : rep.rows) {
    csv.cell(row.k).cell(row.ehat).cell(row.gap).cell(row.zeta).cell(row.chi)
        .cell(row.dmin).cell(row.dmax).cell(row.lambda).cell(row.l_k).cell(row.N_k)
        .cell(row.eta_k).cell(row.s_k).cell(row.g_k).cell(row.dlow_bound)
        .cell(row.dbar_bound).cell(std::string(row.gap_pass ? "1" : "0"))
        .cell(std::string(row.pigeonhole_pass ? "1" : "0"));
    csv.end_row();
  }
  csv.write(out_path(cfg, "gaps.csv"));

  ordered_json j;
  j["k_max"] = cfg.n_hi;
  j["C"] = rep.C;
  j["t"] = rep.t;
  j["rescale_ratio"] = rep.rescale_ratio;
  j["pass"] = rep.pass;
  write_json_atomic(out_path(cfg, "gaps.json"), j);
  std::printf("gap-report: k=1..%d C=%s t=%s pass=%s\n", cfg.n_hi,
              format_sig(rep.C).c_str(), format_sig(rep.t).c_str(),
              rep.pass ? "yes" : "NO");
  return 0;
}

int cmd_local_counts(const ExperimentConfig& cfg) {
  DiscretizedMeasure dm = make_measure(cfg);
  ADProfile profile = make_profile(cfg, dm);
  AuxiliaryConstants consts = constants_from(profile.c1_hat, profile.c2_hat, profile.s0, 1,
                                             ConstantsOptions{cfg.delta, {}});
  Packing pk = build_packing(dm, profile, cfg.k, cfg.m);
  NeighborGraph graph = neighbor_graph(pk, consts.delta);
  std::optional<std::size_t> phi_next;
  try {
    phi_next = build_packing(dm, profile, cfg.k + 1, cfg.m).phi();
  } catch (const ConfigError&) {
    // next level below the discretization floor; regime check falls back
  }

  ErrorOrder r{cfg.r};
  LocalCountReport loc = local_count_report(dm, cfg.n, r, pk, graph, consts, phi_next,
                                            dp_options(cfg));
  NeighborhoodReport nb = neighborhood_report(dm, cfg.n, pk, graph, consts,
                                              dp_options(cfg));

  ordered_json j;
  j["n"] = loc.n;
  j["level_k"] = loc.level_k;
  j["regime_valid"] = loc.regime_valid;
  j["regime_rule_exact"] = loc.regime_rule_exact;
  j["level_flagged"] = loc.level_flagged;
  j["L_c"] = loc.L_c;
  j["all_within_delta"] = loc.all_within_delta;
  j["counts_consistent"] = loc.counts_consistent;
  write_json_atomic(out_path(cfg, "local_counts.json"), j);

  CsvTable csv({"sigma", "L_sigma", "sup_distance", "delta_A_sigma"});
  for (std::size_t s = 0; s < loc.L_sigma.size(); ++s) {
    csv.cell((int)s).cell(loc.L_sigma[s]).cell(loc.sup_distance[s])
        .cell(loc.delta_Asigma[s]);
    csv.end_row();
  }
  csv.write(out_path(cfg, "local_counts.csv"));

  ordered_json nj;
  nj["all_contained"] = nb.all_contained;
  nj["all_bands"] = nb.all_bands;
  nj["records"] = ordered_json::array();
  for (const NeighborhoodRecord& rec : nb.records) {
    ordered_json e;
    e["a"] = rec.a;
    e["sigma"] = (long long)rec.sigma;
    e["stray"] = rec.stray;
    e["mu_G"] = rec.mu_G;
    e["G_diameter"] = rec.G_diameter;
    e["T_a"] = rec.T_a;
    e["containment"] = rec.containment;
    e["chain_ok"] = rec.chain_ok;
    e["mass_band_ok"] = rec.mass_band_ok;
    e["T_in_range"] = rec.T_in_range;
    nj["records"].push_back(e);
  }
  write_json_atomic(out_path(cfg, "neighborhoods.json"), nj);
  std::printf("local-counts: n=%d L_c=%lld regime=%s containment=%s\n", loc.n, loc.L_c,
              loc.regime_valid ? "valid" : "out", nb.all_contained ? "yes" : "NO");
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"geometric-mean quantization workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int n = 0, n_max = 0, depth = 0, k = 0, m = 0;
  double r = 0.0, delta = 0.0;
  long long budget_cells = 0;
  int budget_aux = 0, seed_grid = 0;
  bool check_oracle = false;

  auto* opt_config = app.add_option("--config", config_path, "experiment config (JSON)");
  auto* opt_out = app.add_option("--out", out_override, "output directory override");
  auto* opt_n = app.add_option("--n", n, "codebook size");
  auto* opt_nmax = app.add_option("--n-max", n_max, "sweep / gap upper bound");
  auto* opt_depth = app.add_option("--depth", depth, "discretization depth");
  auto* opt_r = app.add_option("--r", r, "error order (0 = log objective)");
  auto* opt_m = app.add_option("--m", m, "packing subdivision base");
  auto* opt_k = app.add_option("--k", k, "packing level");
  auto* opt_delta = app.add_option("--delta", delta, "neighbor enlargement factor");
  auto* opt_bcells = app.add_option("--budget-cells", budget_cells, "discretization cell cap");
  auto* opt_baux = app.add_option("--budget-aux", budget_aux, "aux-integer probe cap");
  auto* opt_seed = app.add_option("--seed-grid", seed_grid, "1-point search seeding density");

  auto* sc_ad = app.add_subcommand("ad-check", "estimate the scaling band and exponent fit");
  auto* sc_quant = app.add_subcommand("quantize", "optimal codebook + partition stats at one n");
  sc_quant->add_flag("--check-oracle", check_oracle, "cross-check against the grid oracle");
  auto* sc_sweep = app.add_subcommand("sweep", "error curve and cell-mass band over an n range");
  auto* sc_pack = app.add_subcommand("packing", "maximal ball packing, neighbor graph, mass bands");
  auto* sc_aux = app.add_subcommand("aux-constants", "closed-form constants and integer thresholds");
  auto* sc_thm = app.add_subcommand("verify-theorem", "uniformity band over an n range with plot");
  auto* sc_gap = app.add_subcommand("gap-report", "error-gap sandwich and separation scales");
  auto* sc_local = app.add_subcommand("local-counts", "per-ball code counts and point neighborhoods");
  for (CLI::App* sc : {sc_ad, sc_quant, sc_sweep, sc_pack, sc_aux, sc_thm, sc_gap, sc_local})
    sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (opt_config->count() == 0)
      throw ConfigError("missing --config PATH (every subcommand needs one)");
    ExperimentConfig cfg = load_config(config_path);
    if (opt_out->count()) cfg.out_dir = out_override;
    if (opt_n->count()) cfg.n = n;
    if (opt_nmax->count()) cfg.n_hi = n_max;
    if (opt_depth->count()) cfg.depth = depth;
    if (opt_r->count()) cfg.r = r;
    if (opt_m->count()) cfg.m = m;
    if (opt_k->count()) cfg.k = k;
    if (opt_delta->count()) cfg.delta = delta;
    if (opt_bcells->count()) cfg.budget_cells = budget_cells;
    if (opt_baux->count()) cfg.aux_n_cap = budget_aux;
    if (opt_seed->count()) cfg.seed_grid = seed_grid;

    if (cfg.n < 1) throw ConfigError("flag --n: must be >= 1");
    if (cfg.n_hi < cfg.n_lo) throw ConfigError("flag --n-max: below the configured lower bound");
    if (cfg.depth < 0 || cfg.depth > 60) throw ConfigError("flag --depth: must be in [0, 60]");
    if (cfg.r < 0.0) throw ConfigError("flag --r: must be >= 0");
    if (cfg.m && *cfg.m < 2) throw ConfigError("flag --m: must be >= 2");
    if (cfg.k < 1) throw ConfigError("flag --k: must be >= 1");
    if (cfg.delta && !(*cfg.delta > 0.0 && *cfg.delta <= 1.0 / 16.0))
      throw ConfigError("flag --delta: must lie in (0, 1/16]");
    if (cfg.budget_cells < 1) throw ConfigError("flag --budget-cells: must be >= 1");
    if (cfg.aux_n_cap < 4) throw ConfigError("flag --budget-aux: must be >= 4");
    if (cfg.seed_grid < 2) throw ConfigError("flag --seed-grid: must be >= 2");

    ensure_dir(cfg.out_dir);

    if (app.got_subcommand(sc_ad)) return cmd_ad_check(cfg);
    if (app.got_subcommand(sc_quant)) return cmd_quantize(cfg, check_oracle);
    if (app.got_subcommand(sc_sweep)) return cmd_sweep(cfg);
    if (app.got_subcommand(sc_pack)) return cmd_packing(cfg);
    if (app.got_subcommand(sc_aux)) return cmd_aux_constants(cfg);
    if (app.got_subcommand(sc_thm)) return cmd_verify_theorem(cfg);
    if (app.got_subcommand(sc_gap)) return cmd_gap_report(cfg);
    if (app.got_subcommand(sc_local)) return cmd_local_counts(cfg);
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "budget: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return 1;
  }
}

}  // namespace gmq
