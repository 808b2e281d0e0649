#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmq/measure.hpp"

namespace gmq {

// r = 0 selects the geometric-mean (log-distance) error; r > 0 the L_r error.
struct ErrorOrder {
  double r = 0.0;
  ErrorOrder() = default;
  explicit ErrorOrder(double order);
  bool is_log() const { return r == 0.0; }
};

struct Codebook {
  std::vector<double> points;  // strictly increasing, n >= 1
  Codebook() = default;
  explicit Codebook(std::vector<double> pts);
  std::size_t n() const { return points.size(); }
};

struct PerCellRange {
  std::size_t first_cell = 0;  // original cell indices touched by the region;
  std::size_t last_cell = 0;   // split boundary cells appear in two ranges
  double point = 0.0;
  double contribution = 0.0;
};

struct QuantizerResult {
  Codebook codebook;
  double objective = 0.0;  // e-hat_n for r = 0, e_{n,r}^r otherwise
  double error = 0.0;      // exp(objective) or objective^(1/r)
  std::vector<PerCellRange> per_cell;
  std::string method;
  int iterations = 0;
  int reseeds = 0;
  bool converged = true;
};

// --- closed-form moments -------------------------------------------------

// integral over the cell of log|x - a| against the uniform cell density:
// mass/(hi-lo) * [(hi-a)ln|hi-a| - (lo-a)ln|lo-a| - (hi-lo)], 0*ln0 = 0.
double cell_log_moment(const MassCell& cell, double a);
// d/da of cell_log_moment (valid except exactly at the cell endpoints).
double cell_log_moment_derivative(const MassCell& cell, double a);
// integral of |x-a|^r against the cell density, exact for every r >= 0.
double cell_power_moment(const MassCell& cell, double a, double r);

double group_log_moment(std::span<const MassCell> cells, double a);
double group_log_moment_derivative(std::span<const MassCell> cells, double a);

// --- single-point optimum ------------------------------------------------

struct PointOptions {
  int seed_count = 64;
  int refine_brackets = 3;
  double golden_rel_tol = 1e-12;  // of the group hull width
};

struct PointResult {
  double point = 0.0;
  double objective = 0.0;
};

// r = 2: centroid; r = 1: weighted median; r = 0 (and other r): seed scan over
// the group hull followed by golden-section refinement.
PointResult optimal_point_1d(std::span<const MassCell> cells, ErrorOrder r,
                             const PointOptions& opts = {});

// --- distortion ----------------------------------------------------------

std::vector<double> voronoi_breakpoints(const Codebook& cb);

// Splits cells at the Voronoi breakpoints of cb; fragments[i] belongs to
// points[i]. Exact proportional masses; fragments of zero width are dropped.
std::vector<std::vector<MassCell>> assign_fragments(
    std::span<const MassCell> cells, const Codebook& cb);

// I_mu(region, alpha) -- not renormalized. Default region: everything.
double distortion(const DiscretizedMeasure& dm, const Codebook& cb,
                  ErrorOrder r);
double distortion(const DiscretizedMeasure& dm, const Codebook& cb,
                  ErrorOrder r, const IntervalSet& region);

// --- optimizers ----------------------------------------------------------

struct DpOptions {
  bool monotone_pruning = true;
  bool polish = true;        // Lloyd refinement of the cell-aligned DP optimum
  bool use_farfield = true;  // series evaluation of long-range log moments
  // Full-precision knobs (final group points, polish):
  int seed_count = 64;
  int refine_brackets = 3;
  double golden_rel_tol = 1e-12;
  // Cheaper knobs for the DP table phase; the table only has to rank
  // partitions, the winners are re-optimized at full precision.
  int table_seed_count = 32;
  int table_refine_brackets = 2;
  double table_golden_rel_tol = 1e-6;
  // Groups at most this many cells are always summed exactly.
  int exact_eval_threshold = 24;
  // Cap on the number of candidate partition boundaries: above this the DP
  // cuts on a stride of cell edges (costs still integrate every cell) and
  // the polish stage restores continuum precision. Small inputs keep every
  // edge, so grid-oracle comparisons stay cut-exact.
  int max_boundary_states = 1024;
  int polish_max_iter = 200;
  double polish_rel_tol = 1e-14;
  // Lloyd sweeps re-center points inside one Voronoi fragment, which is a
  // near-unimodal problem; it needs far fewer seeds than a cold group.
  int polish_seed_count = 64;
  int polish_refine_brackets = 3;
};

// Exact DP over contiguous cell-aligned partitions with memoized group costs
// and monotone-boundary pruning, optionally polished to a continuum Lloyd
// fixed point. Table state is shared across n, so an n-sweep costs one pass.
class DpQuantizer {
 public:
  DpQuantizer(const DiscretizedMeasure& dm, ErrorOrder r, DpOptions opts = {});
  ~DpQuantizer();
  DpQuantizer(const DpQuantizer&) = delete;
  DpQuantizer& operator=(const DpQuantizer&) = delete;

  QuantizerResult solve(int n);
  std::vector<QuantizerResult> solve_range(int n_lo, int n_hi);

 private:
  struct Impl;
  Impl* impl_;
};

QuantizerResult dp_optimal_1d(const DiscretizedMeasure& dm, int n, ErrorOrder r,
                              const DpOptions& opts = {});

struct LloydOptions {
  int max_iter = 500;
  double rel_tol = 1e-14;
  PointOptions point;
};

// init: explicit codebook, or (when absent) mass-quantile seeding at
// (2i-1)/(2n). Empty regions are re-seeded at the midpoint of the cell with
// the largest local distortion contribution.
QuantizerResult lloyd(const DiscretizedMeasure& dm, int n, ErrorOrder r,
                      std::optional<Codebook> init = {},
                      const LloydOptions& opts = {});

struct OracleOptions {
  int grid_resolution = 256;            // <= 512
  long long combo_budget = 200'000'000; // tuple count cap
};

// Exhaustive search over ordered n-tuples (n <= 3) of grid points spanning
// the support hull. Independent of the DP path.
QuantizerResult brute_force_oracle(const DiscretizedMeasure& dm, int n,
                                   ErrorOrder r, const OracleOptions& opts = {});

struct CurvePoint {
  int n = 0;
  double objective = 0.0;
  double error = 0.0;
};

std::vector<CurvePoint> error_curve(const DiscretizedMeasure& dm, int n_max,
                                    ErrorOrder r, const DpOptions& opts = {});

}  // namespace gmq
