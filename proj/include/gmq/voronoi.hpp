#pragma once

#include <vector>

#include "gmq/measure.hpp"
#include "gmq/quantizer.hpp"

namespace gmq {

struct VoronoiPartition {
  Codebook codebook;
  std::vector<double> breakpoints;                // n-1 midpoints
  std::vector<std::vector<MassCell>> fragments;   // fragments[i] owned by points[i]
};

VoronoiPartition build_partition(const DiscretizedMeasure& dm,
                                 const Codebook& cb);

struct CellStats {
  double point = 0.0;
  double mass = 0.0;
  double support_diameter = 0.0;  // |P_a intersect support|, fragment hull width
  double inradius = 0.0;          // inradius of W(a) clipped to the support hull
  double ratio = 0.0;             // inradius / support_diameter
  double local_distortion = 0.0;
  bool point_outside_fragments = false;  // a outside its own fragment hull
};

struct PartitionStats {
  std::vector<CellStats> cells;
  double n_min_mass = 0.0;   // n * min cell mass
  double n_max_mass = 0.0;   // n * max cell mass
  double min_ratio = 0.0;    // min inradius / support_diameter
};

PartitionStats cell_stats(const VoronoiPartition& partition,
                          const DiscretizedMeasure& dm,
                          ErrorOrder r = ErrorOrder{});

struct BandRow {
  int n = 0;
  double error = 0.0;  // e_n at this n from the same DP run
  double n_min_mass = 0.0;
  double n_max_mass = 0.0;
  double min_ratio = 0.0;
};

struct MassBand {
  std::vector<BandRow> rows;
  double d1 = 0.0;  // inf over n of n * min mass
  double d2 = 0.0;  // sup over n of n * max mass
  double d3 = 0.0;  // inf over n of the inradius ratio
};

// Quantizes with dp_optimal_1d at every n in [n_lo, n_hi] and records the
// cell-mass band plus running extremes.
MassBand mass_band(const DiscretizedMeasure& dm, int n_lo, int n_hi,
                   ErrorOrder r, const DpOptions& opts = {});

}  // namespace gmq
