#include "gmq/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmq {

VoronoiPartition build_partition(const DiscretizedMeasure& dm,
                                 const Codebook& cb) {
  VoronoiPartition vp;
  vp.codebook = cb;
  vp.breakpoints = voronoi_breakpoints(cb);
  vp.fragments = assign_fragments(dm.cells(), cb);
  return vp;
}

PartitionStats cell_stats(const VoronoiPartition& partition,
                          const DiscretizedMeasure& dm, ErrorOrder r) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = partition.codebook.n();
  PartitionStats out;
  out.cells.reserve(n);
  double min_mass = inf, max_mass = 0.0, min_ratio = inf;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = partition.codebook.points[i];
    const auto& frags = partition.fragments[i];
    CellStats cs;
    cs.point = a;
    for (const auto& f : frags) {
      cs.mass += f.mass;
      cs.local_distortion +=
          r.is_log() ? cell_log_moment(f, a) : cell_power_moment(f, a, r.r);
    }
    if (frags.empty()) {
      cs.point_outside_fragments = true;
    } else {
      cs.support_diameter = frags.back().hi - frags.front().lo;
      cs.point_outside_fragments =
          a < frags.front().lo || a > frags.back().hi;
      if (!cs.point_outside_fragments) {
        // W(a) clipped to the support hull is the interval [wl, wr]; in 1-D
        // its inradius at a is the gap to the nearest wall
        double wl = (i > 0) ? partition.breakpoints[i - 1] : -inf;
        double wr = (i + 1 < n) ? partition.breakpoints[i] : inf;
        wl = std::max(wl, dm.support_lo());
        wr = std::min(wr, dm.support_hi());
        cs.inradius = std::max(0.0, std::min(a - wl, wr - a));
        if (cs.support_diameter > 0.0)
          cs.ratio = cs.inradius / cs.support_diameter;
      }
    }
    min_mass = std::min(min_mass, cs.mass);
    max_mass = std::max(max_mass, cs.mass);
    min_ratio = std::min(min_ratio, cs.ratio);
    out.cells.push_back(cs);
  }
  out.n_min_mass = n * min_mass;
  out.n_max_mass = n * max_mass;
  out.min_ratio = min_ratio;
  return out;
}

MassBand mass_band(const DiscretizedMeasure& dm, int n_lo, int n_hi,
                   ErrorOrder r, const DpOptions& opts) {
  if (n_lo < 1 || n_hi < n_lo) throw std::invalid_argument("bad n range");
  DpQuantizer q(dm, r, opts);
  auto results = q.solve_range(n_lo, n_hi);
  MassBand band;
  band.d1 = std::numeric_limits<double>::infinity();
  band.d3 = std::numeric_limits<double>::infinity();
  for (int n = n_lo; n <= n_hi; ++n) {
    const auto& res = results[n - n_lo];
    auto stats = cell_stats(build_partition(dm, res.codebook), dm, r);
    BandRow row{n, res.error, stats.n_min_mass, stats.n_max_mass, stats.min_ratio};
    band.rows.push_back(row);
    band.d1 = std::min(band.d1, row.n_min_mass);
    band.d2 = std::max(band.d2, row.n_max_mass);
    band.d3 = std::min(band.d3, row.min_ratio);
  }
  return band;
}

}  // namespace gmq
