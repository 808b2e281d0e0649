#include "gmq/measure.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gmq/errors.hpp"

namespace gmq {

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids distribution objects whose streams are
  // implementation-defined.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

MeasureModel MeasureModel::uniform(double lo, double hi) {
  MeasureModel m;
  m.kind = Kind::Uniform;
  m.lo = lo;
  m.hi = hi;
  return m;
}

MeasureModel MeasureModel::ifs(std::vector<IfsMap> maps) {
  MeasureModel m;
  m.kind = Kind::Ifs;
  m.maps = std::move(maps);
  return m;
}

MeasureModel MeasureModel::mixture(std::vector<double> weights,
                                   std::vector<MeasureModel> components) {
  MeasureModel m;
  m.kind = Kind::Mixture;
  m.weights = std::move(weights);
  m.components = std::move(components);
  return m;
}

Interval attractor_hull(const MeasureModel& model) {
  switch (model.kind) {
    case MeasureModel::Kind::Uniform:
      return {model.lo, model.hi};
    case MeasureModel::Kind::Ifs: {
      // Hull endpoints are the extreme fixed points t_i / (1 - c_i): the
      // extreme fixed point is mapped to itself and every other map pulls
      // points toward its own fixed point, which lies inside.
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const IfsMap& f : model.maps) {
        double fix = f.offset / (1.0 - f.ratio);
        lo = std::min(lo, fix);
        hi = std::max(hi, fix);
      }
      return {lo, hi};
    }
    case MeasureModel::Kind::Mixture: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const MeasureModel& c : model.components) {
        Interval h = attractor_hull(c);
        lo = std::min(lo, h.lo);
        hi = std::max(hi, h.hi);
      }
      return {lo, hi};
    }
  }
  throw std::logic_error("attractor_hull: bad kind");
}

void validate(const MeasureModel& model) {
  switch (model.kind) {
    case MeasureModel::Kind::Uniform:
      if (!(model.hi > model.lo))
        throw ConfigError("uniform measure: hi must exceed lo");
      return;
    case MeasureModel::Kind::Ifs: {
      if (model.maps.size() < 2)
        throw ConfigError("ifs measure: need at least 2 maps");
      double psum = 0.0;
      for (const IfsMap& f : model.maps) {
        if (!(f.ratio > 0.0 && f.ratio < 1.0))
          throw ConfigError("ifs measure: contraction ratio must be in (0,1)");
        if (!(f.prob > 0.0))
          throw ConfigError("ifs measure: probabilities must be positive");
        psum += f.prob;
      }
      if (std::abs(psum - 1.0) > 1e-12)
        throw ConfigError("ifs measure: probabilities must sum to 1");
      Interval hull = attractor_hull(model);
      if (!(hull.hi > hull.lo))
        throw ConfigError("ifs measure: degenerate attractor");
      std::vector<Interval> images;
      for (const IfsMap& f : model.maps)
        images.push_back({f.apply(hull.lo), f.apply(hull.hi)});
      std::sort(images.begin(), images.end(),
                [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
      double tol = 1e-12 * hull.width();
      for (std::size_t i = 1; i < images.size(); ++i) {
        if (images[i].lo < images[i - 1].hi - tol)
          throw ConfigError(
              "ifs measure: map images overlap on the feasible interval");
      }
      return;
    }
    case MeasureModel::Kind::Mixture: {
      if (model.components.empty() ||
          model.components.size() != model.weights.size())
        throw ConfigError("mixture measure: weights/components mismatch");
      double wsum = 0.0;
      for (double w : model.weights) {
        if (!(w > 0.0)) throw ConfigError("mixture measure: weights must be positive");
        wsum += w;
      }
      if (std::abs(wsum - 1.0) > 1e-12)
        throw ConfigError("mixture measure: weights must sum to 1");
      for (const MeasureModel& c : model.components) {
        if (c.kind == MeasureModel::Kind::Mixture)
          throw ConfigError("mixture measure: nested mixtures not supported");
        validate(c);
      }
      return;
    }
  }
  throw std::logic_error("validate: bad kind");
}

double similarity_dimension(const MeasureModel& model) {
  if (model.kind == MeasureModel::Kind::Uniform) return 1.0;
  if (model.kind != MeasureModel::Kind::Ifs)
    throw std::invalid_argument("similarity_dimension: needs uniform or ifs");
  // sum c_i^s = 1 is strictly decreasing in s; bisect.
  auto g = [&](double s) {
    double v = 0.0;
    for (const IfsMap& f : model.maps) v += std::pow(f.ratio, s);
    return v - 1.0;
  };
  double lo = 1e-9, hi = 64.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DiscretizedMeasure::DiscretizedMeasure(std::vector<MassCell> cells, int depth)
    : cells_(std::move(cells)), depth_(depth) {
  if (cells_.empty())
    throw std::invalid_argument("DiscretizedMeasure: no cells");
  double scale = std::abs(cells_.back().hi) + std::abs(cells_.front().lo) + 1.0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const MassCell& c = cells_[i];
    if (!(c.hi > c.lo))
      throw std::invalid_argument("DiscretizedMeasure: empty cell");
    if (!(c.mass > 0.0))
      throw std::invalid_argument("DiscretizedMeasure: non-positive cell mass");
    if (i > 0 && c.lo < cells_[i - 1].hi - 1e-12 * scale)
      throw std::invalid_argument("DiscretizedMeasure: overlapping cells");
  }
  prefix_mass_.resize(cells_.size() + 1, 0.0);
  prefix_m1_.resize(cells_.size() + 1, 0.0);
  prefix_m2_.resize(cells_.size() + 1, 0.0);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const MassCell& c = cells_[i];
    double w = c.width();
    prefix_mass_[i + 1] = prefix_mass_[i] + c.mass;
    prefix_m1_[i + 1] = prefix_m1_[i] + c.mass * c.mid();
    prefix_m2_[i + 1] =
        prefix_m2_[i] + c.mass * (c.mid() * c.mid() + w * w / 12.0);
    max_width_ = std::max(max_width_, w);
  }
  if (std::abs(prefix_mass_.back() - 1.0) > 1e-12)
    throw std::invalid_argument("DiscretizedMeasure: total mass must be 1");
}

double DiscretizedMeasure::mass_in(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  // First cell whose hi end exceeds lo, last cell whose lo end is below hi.
  auto first = std::upper_bound(
      cells_.begin(), cells_.end(), lo,
      [](double v, const MassCell& c) { return v < c.hi; });
  auto last = std::lower_bound(
      cells_.begin(), cells_.end(), hi,
      [](const MassCell& c, double v) { return c.lo < v; });
  if (first >= last) return 0.0;
  std::size_t i0 = static_cast<std::size_t>(first - cells_.begin());
  std::size_t i1 = static_cast<std::size_t>(last - cells_.begin());  // one past
  double mass = prefix_mass_[i1] - prefix_mass_[i0];
  const MassCell& cf = cells_[i0];
  if (lo > cf.lo) mass -= cf.density() * (std::min(lo, cf.hi) - cf.lo);
  const MassCell& cl = cells_[i1 - 1];
  if (hi < cl.hi) mass -= cl.density() * (cl.hi - std::max(hi, cl.lo));
  return std::max(mass, 0.0);
}

double DiscretizedMeasure::mass_in(const IntervalSet& region) const {
  double m = 0.0;
  for (const Interval& iv : region.pieces()) m += mass_in(iv.lo, iv.hi);
  return m;
}

double DiscretizedMeasure::ball_mass(double center, double radius) const {
  if (!(radius > 0.0)) throw std::invalid_argument("ball_mass: radius <= 0");
  return mass_in(center - radius, center + radius);
}

IntervalSet DiscretizedMeasure::support_set() const {
  double tol = 1e-12 * (std::abs(diameter()) + 1.0);
  std::vector<Interval> raw;
  for (const MassCell& c : cells_) {
    if (!raw.empty() && c.lo <= raw.back().hi + tol) {
      raw.back().hi = std::max(raw.back().hi, c.hi);
    } else {
      raw.push_back({c.lo, c.hi});
    }
  }
  return IntervalSet::from_pieces(std::move(raw));
}

namespace {

void append_ifs_cells(const MeasureModel& model, const Interval& hull,
                      const std::vector<int>& order, int depth, double lo,
                      double width, double mass, std::vector<MassCell>* out) {
  if (depth == 0) {
    out->push_back({lo, lo + width, mass});
    return;
  }
  for (int idx : order) {
    const IfsMap& f = model.maps[idx];
    // Image of [lo, lo+width] under the map rooted at this cylinder: the
    // cylinder of word w followed by idx spans f_w(f_idx(hull)).
    double sub_lo = lo + (f.apply(hull.lo) - hull.lo) * (width / hull.width());
    double sub_w = f.ratio * width;
    append_ifs_cells(model, hull, order, depth - 1, sub_lo, sub_w,
                     mass * f.prob, out);
  }
}

// Re-segment possibly-overlapping cells into disjoint ones (densities add).
std::vector<MassCell> resegment(std::vector<MassCell> cells) {
  std::vector<double> edges;
  edges.reserve(cells.size() * 2);
  for (const MassCell& c : cells) {
    edges.push_back(c.lo);
    edges.push_back(c.hi);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::sort(cells.begin(), cells.end(),
            [](const MassCell& a, const MassCell& b) { return a.lo < b.lo; });
  std::vector<MassCell> out;
  std::size_t start = 0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    double lo = edges[e], hi = edges[e + 1];
    double density = 0.0;
    while (start < cells.size() && cells[start].hi <= lo) ++start;
    for (std::size_t i = start; i < cells.size() && cells[i].lo < hi; ++i)
      if (cells[i].hi > lo) density += cells[i].density();
    if (density > 0.0) out.push_back({lo, hi, density * (hi - lo)});
  }
  return out;
}

}  // namespace

DiscretizedMeasure discretize(const MeasureModel& model, int depth,
                              const DiscretizeOptions& opts) {
  validate(model);
  if (depth < 0) throw ConfigError("discretize: negative depth");
  std::vector<MassCell> cells;
  switch (model.kind) {
    case MeasureModel::Kind::Uniform: {
      double count = std::ldexp(1.0, depth);
      if (count > static_cast<double>(opts.max_cells))
        throw BudgetError("discretize: cell budget exceeded");
      std::size_t n = static_cast<std::size_t>(count);
      cells.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        double a = model.lo + (model.hi - model.lo) * (static_cast<double>(i) / n);
        double b = model.lo +
                   (model.hi - model.lo) * (static_cast<double>(i + 1) / n);
        cells.push_back({a, b, 1.0 / static_cast<double>(n)});
      }
      break;
    }
    case MeasureModel::Kind::Ifs: {
      double count = std::pow(static_cast<double>(model.maps.size()),
                              static_cast<double>(depth));
      if (count > static_cast<double>(opts.max_cells))
        throw BudgetError("discretize: cell budget exceeded");
      Interval hull = attractor_hull(model);
      std::vector<int> order(model.maps.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return model.maps[a].apply(hull.lo) < model.maps[b].apply(hull.lo);
      });
      cells.reserve(static_cast<std::size_t>(count));
      append_ifs_cells(model, hull, order, depth, hull.lo, hull.width(), 1.0,
                       &cells);
      break;
    }
    case MeasureModel::Kind::Mixture: {
      for (std::size_t i = 0; i < model.components.size(); ++i) {
        DiscretizedMeasure part = discretize(model.components[i], depth, opts);
        for (MassCell c : part.cells()) {
          c.mass *= model.weights[i];
          cells.push_back(c);
        }
      }
      if (cells.size() > opts.max_cells)
        throw BudgetError("discretize: cell budget exceeded");
      std::sort(cells.begin(), cells.end(),
                [](const MassCell& a, const MassCell& b) { return a.lo < b.lo; });
      double scale = cells.back().hi - cells.front().lo;
      bool overlap = false;
      for (std::size_t i = 1; i < cells.size(); ++i)
        if (cells[i].lo < cells[i - 1].hi - 1e-12 * scale) overlap = true;
      if (overlap) cells = resegment(std::move(cells));
      break;
    }
  }
  double total = 0.0;
  for (const MassCell& c : cells) total += c.mass;
  for (MassCell& c : cells) c.mass /= total;
  return DiscretizedMeasure(std::move(cells), depth);
}

DiscretizedMeasure scale_translate(const DiscretizedMeasure& dm, double ratio,
                                   double offset) {
  if (ratio == 0.0)
    throw std::invalid_argument("scale_translate: zero ratio");
  std::vector<MassCell> cells;
  cells.reserve(dm.size());
  for (const MassCell& c : dm.cells()) {
    double a = ratio * c.lo + offset;
    double b = ratio * c.hi + offset;
    if (ratio < 0.0) std::swap(a, b);
    cells.push_back({a, b, c.mass});
  }
  if (ratio < 0.0) std::reverse(cells.begin(), cells.end());
  return DiscretizedMeasure(std::move(cells), dm.depth());
}

ADProfile ad_validate(const DiscretizedMeasure& dm, double s0,
                      std::vector<double> eps_grid, int sample_count,
                      std::uint64_t seed) {
  if (!(s0 > 0.0)) throw std::invalid_argument("ad_validate: s0 <= 0");
  if (eps_grid.empty()) throw std::invalid_argument("ad_validate: empty grid");
  std::sort(eps_grid.begin(), eps_grid.end());
  double floor = 4.0 * dm.max_cell_width();
  if (eps_grid.front() < floor)
    throw std::invalid_argument(
        "ad_validate: eps below 4x the coarsest cell width");

  // Mass-weighted midpoint sample (deterministic) plus support endpoints.
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(sample_count) + 2);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < sample_count; ++i) {
    double u = uniform01(rng) * dm.total_mass();
    std::size_t lo = 0, hi = dm.size();  // first cell with prefix[j+1] > u
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      (dm.prefix_mass(mid) <= u ? lo : hi) = mid;
    }
    centers.push_back(dm.cells()[lo].mid());
  }
  centers.push_back(dm.support_lo());
  centers.push_back(dm.support_hi());
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

  // Candidate maximizers over arbitrary centers: ball mass is piecewise
  // linear in the center with vertices where a ball edge crosses a cell edge.
  std::vector<double> edges;
  edges.reserve(dm.size() * 2);
  for (const MassCell& c : dm.cells()) {
    edges.push_back(c.lo);
    edges.push_back(c.hi);
  }

  ADProfile profile;
  profile.s0 = s0;
  profile.c1_hat = std::numeric_limits<double>::infinity();
  profile.c2_hat = 0.0;
  for (double eps : eps_grid) {
    double scale_pow = std::pow(eps, s0);
    double lo_ratio = std::numeric_limits<double>::infinity();
    double hi_ratio = 0.0;
    for (double x : centers) {
      double ratio = dm.ball_mass(x, eps) / scale_pow;
      lo_ratio = std::min(lo_ratio, ratio);
      hi_ratio = std::max(hi_ratio, ratio);
    }
    for (double e : edges) {
      hi_ratio = std::max(hi_ratio, dm.ball_mass(e - eps, eps) / scale_pow);
      hi_ratio = std::max(hi_ratio, dm.ball_mass(e + eps, eps) / scale_pow);
    }
    profile.scales.push_back({eps, lo_ratio, hi_ratio});
    profile.c1_hat = std::min(profile.c1_hat, lo_ratio);
    profile.c2_hat = std::max(profile.c2_hat, hi_ratio);
  }
  profile.eps0_hat = eps_grid.back();

  auto slope = [&](bool use_max) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(profile.scales.size());
    for (const ScalePoint& p : profile.scales) {
      double x = std::log(1.0 / p.eps);
      double y = std::log(use_max ? p.max_ratio : p.min_ratio);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  };
  if (profile.scales.size() >= 3) {
    profile.slope_min = slope(false);
    profile.slope_max = slope(true);
  }
  profile.non_ad_flag =
      std::max(std::abs(profile.slope_min), std::abs(profile.slope_max)) > 0.05;
  return profile;
}

ConditionalMeasure conditional(const DiscretizedMeasure& dm,
                               const IntervalSet& region) {
  if (region.empty())
    throw std::invalid_argument("conditional: empty region");
  double mass = dm.mass_in(region);
  if (!(mass > 0.0))
    throw std::invalid_argument("conditional: region carries no mass");
  std::vector<MassCell> cells;
  for (const MassCell& c : dm.cells()) {
    for (const Interval& iv : region.pieces()) {
      double lo = std::max(c.lo, iv.lo);
      double hi = std::min(c.hi, iv.hi);
      if (hi > lo) cells.push_back({lo, hi, c.density() * (hi - lo) / mass});
    }
  }
  double total = 0.0;
  for (const MassCell& c : cells) total += c.mass;
  for (MassCell& c : cells) c.mass /= total;
  ConditionalMeasure cm;
  cm.base = DiscretizedMeasure(std::move(cells), dm.depth());
  cm.region_lo = region.hull().lo;
  cm.region_diameter = region.diameter();
  cm.scale_ratio = cm.region_diameter;
  cm.mass_of_region = mass;
  return cm;
}

DiscretizedMeasure ConditionalMeasure::rescaled() const {
  return scale_translate(base, 1.0 / region_diameter,
                         -region_lo / region_diameter);
}

}  // namespace gmq
