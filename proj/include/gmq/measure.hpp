#pragma once

#include <cstdint>
#include <vector>

#include "gmq/interval_set.hpp"

namespace gmq {

// One discretization atom: uniform density mass/(hi-lo) on [lo, hi].
struct MassCell {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double density() const { return mass / (hi - lo); }
};

struct IfsMap {
  double ratio = 0.0;   // contraction ratio, in (0,1)
  double offset = 0.0;
  double prob = 0.0;    // branch probability, > 0
  double apply(double x) const { return ratio * x + offset; }
};

struct MeasureModel {
  enum class Kind { Uniform, Ifs, Mixture };
  Kind kind = Kind::Uniform;

  double lo = 0.0, hi = 1.0;            // Uniform
  std::vector<IfsMap> maps;             // Ifs
  std::vector<double> weights;          // Mixture
  std::vector<MeasureModel> components; // Mixture

  static MeasureModel uniform(double lo, double hi);
  static MeasureModel ifs(std::vector<IfsMap> maps);
  static MeasureModel mixture(std::vector<double> weights,
                              std::vector<MeasureModel> components);
};

// Throws ConfigError on invalid probabilities, ratios outside (0,1), or IFS
// images overlapping on the feasible interval (open set condition, checked at
// depth 1).
void validate(const MeasureModel& model);

// Convex hull [A, B] of the attractor / support. For an IFS this is
// [min_i fix_i, max_i fix_i] with fix_i the fixed point of map i.
Interval attractor_hull(const MeasureModel& model);

// Similarity dimension for a single-IFS model: the s solving sum c_i^s = 1.
double similarity_dimension(const MeasureModel& model);

class DiscretizedMeasure {
 public:
  DiscretizedMeasure() = default;
  // Validates ordering, positive masses, pairwise non-overlap, total mass 1.
  DiscretizedMeasure(std::vector<MassCell> cells, int depth);

  const std::vector<MassCell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  int depth() const { return depth_; }

  double support_lo() const { return cells_.front().lo; }
  double support_hi() const { return cells_.back().hi; }
  double diameter() const { return support_hi() - support_lo(); }
  double max_cell_width() const { return max_width_; }
  double total_mass() const { return prefix_mass_.back(); }

  // Mass of cells [0, i) -- exact prefix sums, used by the fast moment paths.
  double prefix_mass(std::size_t i) const { return prefix_mass_[i]; }
  double prefix_m1(std::size_t i) const { return prefix_m1_[i]; }
  double prefix_m2(std::size_t i) const { return prefix_m2_[i]; }

  // Exact mass of [lo, hi] with proportional partial cells. O(log cells).
  double mass_in(double lo, double hi) const;
  double mass_in(const IntervalSet& region) const;
  double ball_mass(double center, double radius) const;

  // Union of the cell intervals (touching cells merged).
  IntervalSet support_set() const;

 private:
  std::vector<MassCell> cells_;
  std::vector<double> prefix_mass_;  // size()+1
  std::vector<double> prefix_m1_;    // integral of x
  std::vector<double> prefix_m2_;    // integral of x^2
  double max_width_ = 0.0;
  int depth_ = 0;
};

struct DiscretizeOptions {
  std::size_t max_cells = std::size_t{1} << 24;
};

// Uniform: 2^depth equal cells. IFS: one cell per depth-level cylinder with
// mass = product of branch probabilities. Mixture: every component at the
// same depth, weighted; overlapping components are re-segmented so cells stay
// pairwise disjoint (densities add on the overlap).
DiscretizedMeasure discretize(const MeasureModel& model, int depth,
                              const DiscretizeOptions& opts = {});

DiscretizedMeasure scale_translate(const DiscretizedMeasure& dm, double ratio,
                                   double offset);

struct ScalePoint {
  double eps = 0.0;
  double min_ratio = 0.0;  // over sampled support centers
  double max_ratio = 0.0;  // over support centers + the all-centers maximizer
};

struct ADProfile {
  double s0 = 0.0;
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double eps0_hat = 0.0;  // largest grid scale that entered the estimate
  std::vector<ScalePoint> scales;
  // Least-squares slopes of ln(ratio extreme) against ln(1/eps). An AD
  // measure with the right exponent keeps both near 0; a wrong exponent makes
  // one drift linearly.
  double slope_min = 0.0;
  double slope_max = 0.0;
  bool non_ad_flag = false;
};

// Samples `sample_count` cell midpoints (mass-weighted, deterministic), adds
// the support endpoints, and for the upper extreme also the exact maximizer
// over all centers (ball mass is piecewise linear in the center; vertices sit
// at cell edges +- eps). Throws std::invalid_argument if any eps is below
// 4x the coarsest cell width.
ADProfile ad_validate(const DiscretizedMeasure& dm, double s0,
                      std::vector<double> eps_grid, int sample_count,
                      std::uint64_t seed = 0x5eed5eedULL);

struct ConditionalMeasure {
  DiscretizedMeasure base;     // clipped + renormalized, original coordinates
  double region_lo = 0.0;      // translation part of f_B
  double region_diameter = 0.0;  // |B| == similarity ratio of f_B
  double scale_ratio = 0.0;
  double mass_of_region = 0.0;

  // Image under f_B^{-1}: y = (x - region_lo) / |B|. Support diameter <= 1.
  DiscretizedMeasure rescaled() const;
};

// Throws std::invalid_argument when the region carries no mass.
ConditionalMeasure conditional(const DiscretizedMeasure& dm,
                               const IntervalSet& region);

}  // namespace gmq
