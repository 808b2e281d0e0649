#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmq/measure.hpp"

namespace gmq {

// Everything a run needs, read from one JSON file. Command-line flags may
// override individual fields after loading.
struct ExperimentConfig {
  MeasureModel model;

  int depth = 10;
  double r = 0.0;     // 0 selects the log objective
  int n = 4;          // single-n commands
  int n_lo = 1;       // sweeps / bands / gap depth
  int n_hi = 16;

  std::optional<int> m;        // packing subdivision base override
  int k = 1;                   // packing level
  std::optional<double> delta; // neighbor enlargement override

  long long budget_cells = 1ll << 24;
  int aux_n_cap = 128;    // probe ceiling for the integer-threshold search
  int aux_cell_cap = 320; // cell cap for conditional refinements
  int oracle_grid = 256;
  int seed_grid = 64;     // 1-point search seeding density

  std::optional<double> s0;  // scaling exponent; default: similarity dimension
  int ad_samples = 256;
  std::vector<double> eps_grid;  // empty: geometric auto grid

  double theorem_slack = 2.0;
  std::string out_dir = "out";
};

// Throws ConfigError naming the offending key on any malformed input.
ExperimentConfig load_config(const std::string& path);

}  // namespace gmq
