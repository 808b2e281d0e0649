#include "gmq/quantizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "gmq/errors.hpp"

namespace gmq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// antiderivative of ln|u|, continuous through 0
double log_anti(double u) {
  if (u == 0.0) return 0.0;
  return u * std::log(std::abs(u)) - u;
}

// antiderivative of |u|^r (odd extension), continuous through 0
double pow_anti(double u, double r) {
  if (u == 0.0) return 0.0;
  double m = std::pow(std::abs(u), r + 1.0) / (r + 1.0);
  return u < 0.0 ? -m : m;
}

double piece_log_moment(double lo, double hi, double density, double a) {
  return density * (log_anti(hi - a) - log_anti(lo - a));
}

struct ScanResult {
  double x = 0.0;
  double value = 0.0;
};

// Seed scan over [lo, hi] followed by golden-section refinement of the best
// few local brackets. Deterministic; ties keep the earlier (left) candidate.
template <class F>
ScanResult scan_minimize(F&& f, double lo, double hi, int seeds, int brackets,
                         double rel_tol) {
  if (!(hi > lo)) return {lo, f(lo)};
  seeds = std::max(seeds, 3);
  std::vector<double> xs(seeds), vs(seeds);
  for (int j = 0; j < seeds; ++j) {
    xs[j] = lo + (hi - lo) * ((j + 0.5) / seeds);
    vs[j] = f(xs[j]);
  }
  double best_x = xs[0], best_v = vs[0];
  for (int j = 1; j < seeds; ++j)
    if (vs[j] < best_v) {
      best_v = vs[j];
      best_x = xs[j];
    }
  std::vector<int> cand;
  for (int j = 0; j < seeds; ++j) {
    double vl = (j == 0) ? kInf : vs[j - 1];
    double vr = (j == seeds - 1) ? kInf : vs[j + 1];
    if (vs[j] <= vl && vs[j] <= vr) cand.push_back(j);
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [&](int a, int b) { return vs[a] < vs[b]; });
  int keep = std::max(brackets, 1);
  if ((int)cand.size() > keep) cand.resize(keep);
  std::sort(cand.begin(), cand.end());

  const double tol = rel_tol * (hi - lo);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int j : cand) {
    double a = (j == 0) ? lo : xs[j - 1];
    double b = (j == seeds - 1) ? hi : xs[j + 1];
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 500 && b - a > tol; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = f(x2);
      }
    }
    double xm = 0.5 * (a + b), fm = f(xm);
    if (fm < best_v) {
      best_v = fm;
      best_x = xm;
    }
    if (f1 < best_v) {
      best_v = f1;
      best_x = x1;
    }
    if (f2 < best_v) {
      best_v = f2;
      best_x = x2;
    }
  }
  return {best_x, best_v};
}

std::size_t cell_index_at(std::span<const MassCell> cells, double x) {
  std::size_t lo = 0, hi = cells.size();
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cells[mid].lo <= x)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

ErrorOrder::ErrorOrder(double order) : r(order) {
  if (!(order >= 0.0) || !std::isfinite(order))
    throw std::invalid_argument("error order must be finite and >= 0");
}

Codebook::Codebook(std::vector<double> pts) : points(std::move(pts)) {
  if (points.empty()) throw std::invalid_argument("codebook must be non-empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i]))
      throw std::invalid_argument("codebook point not finite");
    if (i > 0 && !(points[i] > points[i - 1]))
      throw std::invalid_argument("codebook points must be strictly increasing");
  }
}

double cell_log_moment(const MassCell& cell, double a) {
  return piece_log_moment(cell.lo, cell.hi, cell.density(), a);
}

double cell_log_moment_derivative(const MassCell& cell, double a) {
  return cell.density() *
         (std::log(std::abs(cell.lo - a)) - std::log(std::abs(cell.hi - a)));
}

double cell_power_moment(const MassCell& cell, double a, double r) {
  return cell.density() * (pow_anti(cell.hi - a, r) - pow_anti(cell.lo - a, r));
}

double group_log_moment(std::span<const MassCell> cells, double a) {
  double s = 0.0;
  for (const auto& c : cells) s += cell_log_moment(c, a);
  return s;
}

double group_log_moment_derivative(std::span<const MassCell> cells, double a) {
  double s = 0.0;
  for (const auto& c : cells) s += cell_log_moment_derivative(c, a);
  return s;
}

PointResult optimal_point_1d(std::span<const MassCell> cells, ErrorOrder r,
                             const PointOptions& opts) {
  if (cells.empty()) throw std::invalid_argument("optimal_point_1d: no cells");
  const double lo = cells.front().lo, hi = cells.back().hi;
  if (r.is_log()) {
    auto s = scan_minimize([&](double a) { return group_log_moment(cells, a); },
                           lo, hi, opts.seed_count, opts.refine_brackets,
                           opts.golden_rel_tol);
    return {s.x, s.value};
  }
  if (r.r == 2.0) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (const auto& c : cells) {
      double w = c.width(), mid = c.mid();
      m0 += c.mass;
      m1 += c.mass * mid;
      m2 += c.mass * (mid * mid + w * w / 12.0);
    }
    double a = m1 / m0;
    double obj = std::max(0.0, m2 - m1 * m1 / m0);
    return {a, obj};
  }
  if (r.r == 1.0) {
    double total = 0.0;
    for (const auto& c : cells) total += c.mass;
    double half = 0.5 * total, cum = 0.0, a = hi;
    for (const auto& c : cells) {
      if (cum + c.mass >= half) {
        a = std::clamp(c.lo + (half - cum) / c.density(), c.lo, c.hi);
        break;
      }
      cum += c.mass;
    }
    double obj = 0.0;
    for (const auto& c : cells) obj += cell_power_moment(c, a, 1.0);
    return {a, obj};
  }
  auto s = scan_minimize(
      [&](double a) {
        double v = 0.0;
        for (const auto& c : cells) v += cell_power_moment(c, a, r.r);
        return v;
      },
      lo, hi, opts.seed_count, opts.refine_brackets, opts.golden_rel_tol);
  return {s.x, s.value};
}

std::vector<double> voronoi_breakpoints(const Codebook& cb) {
  std::vector<double> bps;
  bps.reserve(cb.n() > 0 ? cb.n() - 1 : 0);
  for (std::size_t i = 0; i + 1 < cb.n(); ++i)
    bps.push_back(0.5 * (cb.points[i] + cb.points[i + 1]));
  return bps;
}

std::vector<std::vector<MassCell>> assign_fragments(
    std::span<const MassCell> cells, const Codebook& cb) {
  const auto bps = voronoi_breakpoints(cb);
  std::vector<std::vector<MassCell>> frags(cb.n());
  auto region_of = [&](double x) {
    // breakpoint ties go to the left code point
    return (std::size_t)(std::lower_bound(bps.begin(), bps.end(), x) -
                         bps.begin());
  };
  for (const auto& c : cells) {
    std::vector<double> cuts{c.lo};
    for (double b : bps)
      if (b > c.lo && b < c.hi) cuts.push_back(b);
    cuts.push_back(c.hi);
    const double w = c.width();
    for (std::size_t t = 0; t + 1 < cuts.size(); ++t) {
      double a = cuts[t], b = cuts[t + 1];
      if (!(b > a)) continue;
      std::size_t k = region_of(0.5 * (a + b));
      frags[k].push_back({a, b, c.mass * (b - a) / w});
    }
  }
  return frags;
}

namespace {

std::vector<MassCell> clip_cells(std::span<const MassCell> cells,
                                 const IntervalSet& region) {
  std::vector<MassCell> out;
  for (const auto& c : cells) {
    for (const auto& p : region.pieces()) {
      double a = std::max(c.lo, p.lo), b = std::min(c.hi, p.hi);
      if (b > a) out.push_back({a, b, c.mass * (b - a) / c.width()});
    }
  }
  return out;
}

double fragments_cost(const std::vector<std::vector<MassCell>>& frags,
                      const Codebook& cb, ErrorOrder r) {
  double total = 0.0;
  for (std::size_t i = 0; i < frags.size(); ++i) {
    for (const auto& c : frags[i])
      total += r.is_log() ? cell_log_moment(c, cb.points[i])
                          : cell_power_moment(c, cb.points[i], r.r);
  }
  return total;
}

double cells_distortion(std::span<const MassCell> cells, const Codebook& cb,
                        ErrorOrder r) {
  return fragments_cost(assign_fragments(cells, cb), cb, r);
}

double objective_to_error(double obj, ErrorOrder r) {
  return r.is_log() ? std::exp(obj)
                    : std::pow(std::max(obj, 0.0), 1.0 / r.r);
}

// Recomputes the exact objective and per-cell breakdown for a codebook.
void fill_result(const DiscretizedMeasure& dm, ErrorOrder r,
                 QuantizerResult& res) {
  const auto& cells = dm.cells();
  auto frags = assign_fragments(cells, res.codebook);
  res.per_cell.clear();
  double total = 0.0;
  for (std::size_t i = 0; i < frags.size(); ++i) {
    PerCellRange pc;
    pc.point = res.codebook.points[i];
    if (frags[i].empty()) {
      pc.first_cell = pc.last_cell =
          cell_index_at(cells, res.codebook.points[i]);
      pc.contribution = 0.0;
    } else {
      pc.first_cell = cell_index_at(cells, frags[i].front().mid());
      pc.last_cell = cell_index_at(cells, frags[i].back().mid());
      double s = 0.0;
      for (const auto& c : frags[i])
        s += r.is_log() ? cell_log_moment(c, pc.point)
                        : cell_power_moment(c, pc.point, r.r);
      pc.contribution = s;
    }
    total += pc.contribution;
    res.per_cell.push_back(pc);
  }
  res.objective = total;
  res.error = objective_to_error(total, r);
}

}  // namespace

double distortion(const DiscretizedMeasure& dm, const Codebook& cb,
                  ErrorOrder r) {
  return cells_distortion(dm.cells(), cb, r);
}

double distortion(const DiscretizedMeasure& dm, const Codebook& cb,
                  ErrorOrder r, const IntervalSet& region) {
  auto clipped = clip_cells(dm.cells(), region);
  if (clipped.empty()) return 0.0;
  return cells_distortion(clipped, cb, r);
}

// --- equal-density run compression and far-field evaluation ---------------

namespace {

struct RunArray {
  struct Run {
    double lo, hi, density;
    std::size_t first_cell, last_cell;
  };
  std::vector<Run> runs;
  std::vector<std::size_t> run_of_cell;
};

RunArray build_runs(std::span<const MassCell> cells) {
  RunArray ra;
  ra.run_of_cell.resize(cells.size());
  const double span = cells.empty() ? 1.0
                                    : cells.back().hi - cells.front().lo + 1.0;
  const double gap_tol = 1e-12 * span;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    double d = c.density();
    if (!ra.runs.empty()) {
      auto& r = ra.runs.back();
      if (c.lo <= r.hi + gap_tol &&
          std::abs(d - r.density) <= 1e-12 * std::max(d, r.density)) {
        r.hi = c.hi;
        r.last_cell = i;
        ra.run_of_cell[i] = ra.runs.size() - 1;
        continue;
      }
    }
    ra.runs.push_back({c.lo, c.hi, d, i, i});
    ra.run_of_cell[i] = ra.runs.size() - 1;
  }
  return ra;
}

// Segment tree over runs; each node caches mass, centroid and central moments
// 2..20 so distant groups can be integrated against log|x-a| by series:
//   int log|x-a| dmu = m ln|u| - sum_p cm_p / (p u^p),  u = a - centroid.
// The series is used only beyond kFarRatio node half-widths, bounding the
// truncated tail by (1/kFarRatio)^21 of the node mass (~6e-8; the table only
// ranks partitions, and chosen groups are re-integrated exactly). Near nodes
// recurse down to exact leaf integrals, so there is no distance where the
// evaluator is invalid.
class FarField {
 public:
  static constexpr int kMax = 20;
  static constexpr double kFarRatio = 2.2;  // tail <= (1/2.2)^21 of node mass
  static constexpr std::size_t kLeafRuns = 4;
  static constexpr std::size_t kNone = (std::size_t)-1;

  FarField() = default;
  explicit FarField(const RunArray& ra) : ra_(&ra) {
    if (!ra.runs.empty()) root_ = build(0, ra.runs.size());
  }

  bool ready() const { return root_ != kNone; }

  // sum over runs [lo, hi)
  double eval_runs(std::size_t lo, std::size_t hi, double a) const {
    if (lo >= hi) return 0.0;
    return eval_clip(root_, lo, hi, a);
  }

  // canonical cover of [lo, hi): whole nodes where possible, loose run
  // indices where the range cuts through a leaf. For repeated evaluation of
  // the same range at many points.
  void canonical(std::size_t lo, std::size_t hi, std::vector<std::size_t>& ids,
                 std::vector<std::size_t>& edge_runs) const {
    ids.clear();
    edge_runs.clear();
    if (lo < hi && root_ != kNone) collect(root_, lo, hi, ids, edge_runs);
  }

  double eval_parts(const std::vector<std::size_t>& ids,
                    const std::vector<std::size_t>& edge_runs, double a) const {
    double s = 0.0;
    for (std::size_t id : ids) s += eval_node(id, a);
    for (std::size_t t : edge_runs) {
      const auto& r = ra_->runs[t];
      s += piece_log_moment(r.lo, r.hi, r.density, a);
    }
    return s;
  }

 private:
  struct Node {
    std::size_t lo, hi, left = kNone, right = kNone;
    double mass, centroid, hull_lo, hull_hi;
    std::array<double, kMax + 1> cm;
  };

  const RunArray* ra_ = nullptr;
  std::vector<Node> nodes_;
  std::size_t root_ = kNone;

  static const std::array<std::array<double, kMax + 1>, kMax + 1>& binom() {
    static const auto table = [] {
      std::array<std::array<double, kMax + 1>, kMax + 1> t{};
      for (int n = 0; n <= kMax; ++n) {
        t[n][0] = 1.0;
        for (int k = 1; k <= n; ++k)
          t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0.0);
      }
      return t;
    }();
    return table;
  }

  // fold one part (mass, centroid, central moments) into nd, which must
  // already hold the combined mass and centroid
  void fold_part(Node& nd, double mass, double centroid,
                 const std::array<double, kMax + 1>& cm) const {
    const auto& C = binom();
    double d = centroid - nd.centroid;
    std::array<double, kMax + 1> dpow{};
    dpow[0] = 1.0;
    for (int p = 1; p <= kMax; ++p) dpow[p] = dpow[p - 1] * d;
    for (int p = 2; p <= kMax; ++p) {
      double s = mass * dpow[p];  // j = 0 term (cm_0 = mass, cm_1 = 0)
      for (int j = 2; j <= p; ++j) s += C[p][j] * cm[j] * dpow[p - j];
      nd.cm[p] += s;
    }
  }

  std::size_t build(std::size_t lo, std::size_t hi) {
    std::size_t id = nodes_.size();
    nodes_.push_back({});
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (hi - lo <= kLeafRuns) {
      Node& nd = nodes_[id];
      nd.hull_lo = ra_->runs[lo].lo;
      nd.hull_hi = ra_->runs[hi - 1].hi;
      nd.mass = 0.0;
      double first = 0.0;
      for (std::size_t t = lo; t < hi; ++t) {
        const auto& r = ra_->runs[t];
        double m = r.density * (r.hi - r.lo);
        nd.mass += m;
        first += m * 0.5 * (r.lo + r.hi);
      }
      nd.centroid = first / nd.mass;
      nd.cm.fill(0.0);
      for (std::size_t t = lo; t < hi; ++t) {
        const auto& r = ra_->runs[t];
        double m = r.density * (r.hi - r.lo);
        double h = 0.5 * (r.hi - r.lo);
        std::array<double, kMax + 1> cm{};
        double hp = h * h;
        for (int p = 2; p <= kMax; p += 2) {
          cm[p] = m * hp / (p + 1.0);
          hp *= h * h;
        }
        fold_part(nd, m, 0.5 * (r.lo + r.hi), cm);
      }
      return id;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    std::size_t l = build(lo, mid);
    std::size_t rgt = build(mid, hi);
    Node& nd = nodes_[id];
    nd.left = l;
    nd.right = rgt;
    const Node& A = nodes_[l];
    const Node& B = nodes_[rgt];
    nd.hull_lo = std::min(A.hull_lo, B.hull_lo);
    nd.hull_hi = std::max(A.hull_hi, B.hull_hi);
    nd.mass = A.mass + B.mass;
    nd.centroid = (A.mass * A.centroid + B.mass * B.centroid) / nd.mass;
    nd.cm.fill(0.0);
    fold_part(nd, A.mass, A.centroid, A.cm);
    fold_part(nd, B.mass, B.centroid, B.cm);
    return id;
  }

  double eval_node(std::size_t id, double a) const {
    const Node& nd = nodes_[id];
    double u = a - nd.centroid;
    double rho = std::max(nd.centroid - nd.hull_lo, nd.hull_hi - nd.centroid);
    if (std::abs(u) >= kFarRatio * rho && rho >= 0.0 && u != 0.0) {
      double inv = 1.0 / u;
      double up = inv * inv;
      double s = nd.mass * std::log(std::abs(u));
      // |cm_p / u^p| <= mass * (rho/|u|)^p decays geometrically; stop once
      // that bound (which also caps the remaining tail) is negligible
      double ratio = rho * std::abs(inv);
      double bound = nd.mass * ratio * ratio;
      double floor_term = 1e-17 * (std::abs(s) + nd.mass);
      for (int p = 2; p <= kMax; ++p) {
        s -= nd.cm[p] * up / p;
        bound *= ratio;
        if (bound < floor_term) break;
        up *= inv;
      }
      return s;
    }
    if (nd.left == kNone) {
      double s = 0.0;
      for (std::size_t t = nd.lo; t < nd.hi; ++t) {
        const auto& r = ra_->runs[t];
        s += piece_log_moment(r.lo, r.hi, r.density, a);
      }
      return s;
    }
    return eval_node(nd.left, a) + eval_node(nd.right, a);
  }

  double eval_clip(std::size_t id, std::size_t lo, std::size_t hi,
                   double a) const {
    const Node& nd = nodes_[id];
    if (nd.lo >= hi || nd.hi <= lo) return 0.0;
    if (lo <= nd.lo && nd.hi <= hi) return eval_node(id, a);
    if (nd.left == kNone) {
      double s = 0.0;
      for (std::size_t t = std::max(lo, nd.lo); t < std::min(hi, nd.hi); ++t) {
        const auto& r = ra_->runs[t];
        s += piece_log_moment(r.lo, r.hi, r.density, a);
      }
      return s;
    }
    return eval_clip(nd.left, lo, hi, a) + eval_clip(nd.right, lo, hi, a);
  }

  void collect(std::size_t id, std::size_t lo, std::size_t hi,
               std::vector<std::size_t>& ids,
               std::vector<std::size_t>& edge_runs) const {
    const Node& nd = nodes_[id];
    if (nd.lo >= hi || nd.hi <= lo) return;
    if (lo <= nd.lo && nd.hi <= hi) {
      ids.push_back(id);
      return;
    }
    if (nd.left == kNone) {
      for (std::size_t t = std::max(lo, nd.lo); t < std::min(hi, nd.hi); ++t)
        edge_runs.push_back(t);
      return;
    }
    collect(nd.left, lo, hi, ids, edge_runs);
    collect(nd.right, lo, hi, ids, edge_runs);
  }
};

}  // namespace

// --- DP over contiguous cell partitions -----------------------------------

struct DpQuantizer::Impl {
  const DiscretizedMeasure& dm;
  ErrorOrder r;
  DpOptions opts;
  std::size_t N;
  RunArray runs;
  FarField tree;
  bool tree_ready = false;
  std::unordered_map<std::uint64_t, double> memo;
  std::vector<std::vector<std::int32_t>> opt;  // opt[k][j], filled k = 1..built
  std::vector<double> prevE, curE;
  int built = 0;
  // Partition boundaries live on a stride of cell edges; B is the block
  // count. Fixed on the first build (when the largest requested n is known)
  // so every table row shares one grid.
  std::size_t stride = 1, B = 0;

  Impl(const DiscretizedMeasure& dmeasure, ErrorOrder order, DpOptions options)
      : dm(dmeasure), r(order), opts(options), N(dmeasure.size()) {
    if (r.is_log() && opts.use_farfield &&
        (int)N > opts.exact_eval_threshold) {
      runs = build_runs(dm.cells());
      tree = FarField(runs);
      tree_ready = tree.ready();
    }
    memo.reserve(1024);
  }

  // log-moment evaluator for cells [i..j], prepared once so a scan can probe
  // many points: partial runs at the ends become closed-form pieces, the
  // run-aligned middle becomes a cached canonical node cover of the tree
  struct LogQuery {
    struct Piece {
      double lo, hi, density;
    };
    const Impl* impl = nullptr;
    std::size_t i = 0, j = 0;
    bool exact = true;
    std::vector<Piece> pieces;
    std::vector<std::size_t> ids, edge_runs;

    double operator()(double a) const {
      if (exact) {
        const auto& cells = impl->dm.cells();
        double s = 0.0;
        for (std::size_t t = i; t <= j; ++t) s += cell_log_moment(cells[t], a);
        return s;
      }
      double s = 0.0;
      for (const Piece& p : pieces) s += piece_log_moment(p.lo, p.hi, p.density, a);
      return s + impl->tree.eval_parts(ids, edge_runs, a);
    }
  };

  LogQuery make_log_query(std::size_t i, std::size_t j) const {
    LogQuery q;
    q.impl = this;
    q.i = i;
    q.j = j;
    if (!tree_ready || j - i + 1 <= (std::size_t)opts.exact_eval_threshold)
      return q;
    const auto& cells = dm.cells();
    q.exact = false;
    std::size_t r1 = runs.run_of_cell[i], r2 = runs.run_of_cell[j];
    if (r1 == r2) {
      q.pieces.push_back({cells[i].lo, cells[j].hi, runs.runs[r1].density});
      return q;
    }
    std::size_t ra = r1, rb = r2 + 1;
    if (runs.runs[r1].first_cell < i) {
      q.pieces.push_back({cells[i].lo, runs.runs[r1].hi, runs.runs[r1].density});
      ra = r1 + 1;
    }
    if (runs.runs[r2].last_cell > j) {
      q.pieces.push_back({runs.runs[r2].lo, cells[j].hi, runs.runs[r2].density});
      rb = r2;
    }
    tree.canonical(ra, rb, q.ids, q.edge_runs);
    return q;
  }

  double log_cost_at(std::size_t i, std::size_t j, double a) const {
    return make_log_query(i, j)(a);
  }

  PointResult best_point(std::size_t i, std::size_t j, int seeds, int brackets,
                         double tol) const {
    const auto& cells = dm.cells();
    if (i == j) {
      // single uniform cell: the optimum is the midpoint for every r
      const MassCell& c = cells[i];
      double mid = c.mid();
      double v = r.is_log() ? cell_log_moment(c, mid)
                            : cell_power_moment(c, mid, r.r);
      return {mid, v};
    }
    if (r.is_log()) {
      LogQuery q = make_log_query(i, j);
      if (!q.exact && q.pieces.size() == 1 && q.ids.empty() &&
          q.edge_runs.empty()) {
        // one uniform piece: symmetric objective, midpoint is exact
        const auto& p = q.pieces.front();
        double mid = 0.5 * (p.lo + p.hi);
        return {mid, piece_log_moment(p.lo, p.hi, p.density, mid)};
      }
      auto s = scan_minimize([&](double a) { return q(a); }, cells[i].lo,
                             cells[j].hi, seeds, brackets, tol);
      return {s.x, s.value};
    }
    if (r.r == 2.0) {
      double m0 = dm.prefix_mass(j + 1) - dm.prefix_mass(i);
      double m1 = dm.prefix_m1(j + 1) - dm.prefix_m1(i);
      double m2 = dm.prefix_m2(j + 1) - dm.prefix_m2(i);
      return {m1 / m0, std::max(0.0, m2 - m1 * m1 / m0)};
    }
    if (r.r == 1.0) {
      double m0 = dm.prefix_mass(j + 1) - dm.prefix_mass(i);
      double half = 0.5 * m0;
      std::size_t lo = i, hi = j;
      while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (dm.prefix_mass(mid + 1) - dm.prefix_mass(i) >= half)
          hi = mid;
        else
          lo = mid + 1;
      }
      const auto& c = cells[lo];
      double below = dm.prefix_mass(lo) - dm.prefix_mass(i);
      double a = std::clamp(c.lo + (half - below) / c.density(), c.lo, c.hi);
      double sb = dm.prefix_m1(lo) - dm.prefix_m1(i) +
                  c.density() * 0.5 * (a * a - c.lo * c.lo);
      double sa = dm.prefix_m1(j + 1) - dm.prefix_m1(i) - sb;
      return {a, std::max(0.0, sa - sb)};
    }
    auto s = scan_minimize(
        [&](double a) {
          double v = 0.0;
          for (std::size_t t = i; t <= j; ++t)
            v += cell_power_moment(cells[t], a, r.r);
          return v;
        },
        cells[i].lo, cells[j].hi, seeds, brackets, tol);
    return {s.x, s.value};
  }

  double table_cost(std::size_t i, std::size_t j) {
    std::uint64_t key = ((std::uint64_t)i << 32) | (std::uint64_t)j;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double v = best_point(i, j, opts.table_seed_count,
                          opts.table_refine_brackets,
                          opts.table_golden_rel_tol)
                   .objective;
    memo.emplace(key, v);
    return v;
  }

  // block b spans cells [b*stride, (b+1)*stride - 1] clipped to N
  std::size_t cell_lo(std::size_t block) const { return block * stride; }
  std::size_t cell_hi(std::size_t block_end) const {
    return std::min(block_end * stride, N) - 1;
  }
  // cost of blocks [mb, jb) — always integrates the underlying cells
  double block_cost(std::size_t mb, std::size_t jb) {
    return table_cost(cell_lo(mb), cell_hi(jb));
  }

  void finalize_grid(int n) {
    std::size_t target = std::max<std::size_t>(
        (std::size_t)std::max(opts.max_boundary_states, 1),
        4 * (std::size_t)n);
    stride = std::max<std::size_t>(1, N / target);
    B = (N + stride - 1) / stride;
  }

  void build_to(int n) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if ((std::size_t)n > N)
      throw std::invalid_argument("n exceeds cell count");
    if (built == 0) finalize_grid(n);
    if ((std::size_t)n > B)
      throw std::invalid_argument("n exceeds the boundary grid of the table");
    if (opt.empty()) opt.resize(1);  // index 0 unused
    if (built == 0) {
      prevE.assign(B + 1, kInf);
      curE.assign(B + 1, kInf);
      opt.push_back(std::vector<std::int32_t>(B + 1, 0));
      for (std::size_t j = 1; j <= B; ++j) prevE[j] = block_cost(0, j);
      built = 1;
    }
    for (int k = built + 1; k <= n; ++k) {
      opt.push_back(std::vector<std::int32_t>(B + 1, 0));
      auto& row = opt[k];
      const auto& prow = opt[k - 1];
      std::fill(curE.begin(), curE.end(), kInf);
      for (std::size_t j = B; j >= (std::size_t)k; --j) {
        std::size_t lb = (std::size_t)(k - 1), ub = j - 1;
        if (opts.monotone_pruning) {
          lb = std::max<std::size_t>(lb, (std::size_t)prow[j]);
          if (j < B) ub = std::min<std::size_t>(ub, (std::size_t)row[j + 1]);
          if (ub < lb) {  // defensive: fall back to the full window
            lb = (std::size_t)(k - 1);
            ub = j - 1;
          }
        }
        double best = kInf;
        std::size_t bm = lb;
        for (std::size_t m = lb; m <= ub; ++m) {
          if (prevE[m] == kInf) continue;
          double v = prevE[m] + block_cost(m, j);
          if (v < best) {
            best = v;
            bm = m;
          }
        }
        curE[j] = best;
        row[j] = (std::int32_t)bm;
      }
      prevE.swap(curE);
      built = k;
    }
  }

  // One Voronoi region between walls (wl, wr): up to two partial cells in
  // closed form plus a whole-cell middle that reuses the far-field cover.
  struct RegionEval {
    const Impl* impl = nullptr;
    bool empty = true;
    double lo = 0.0, hi = 0.0;  // support hull inside the walls
    std::vector<LogQuery::Piece> pieces;
    bool has_mid = false;
    LogQuery mid;

    double operator()(double a) const {
      double s = 0.0;
      for (const auto& p : pieces) s += piece_log_moment(p.lo, p.hi, p.density, a);
      if (has_mid) s += mid(a);
      return s;
    }
  };

  RegionEval make_region(double wl, double wr) const {
    RegionEval re;
    re.impl = this;
    const auto& cells = dm.cells();
    // first cell with hi > wl, last cell with lo < wr
    std::size_t first = 0;
    {
      std::size_t lo = 0, hi = N;
      while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (cells[mid].hi > wl)
          hi = mid;
        else
          lo = mid + 1;
      }
      first = lo;
    }
    std::size_t last = N;
    {
      std::size_t lo = 0, hi = N;
      while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (cells[mid].lo < wr)
          lo = mid + 1;
        else
          hi = mid;
      }
      last = lo;  // one past
    }
    if (first >= last) return re;
    re.empty = false;
    re.lo = std::max(cells[first].lo, wl);
    re.hi = std::min(cells[last - 1].hi, wr);
    std::size_t i = first, j = last - 1;
    if (cells[i].lo < wl) {
      re.pieces.push_back({wl, std::min(cells[i].hi, wr), cells[i].density()});
      ++i;
    }
    if (i <= j && j < N && cells[j].hi > wr) {
      re.pieces.push_back({std::max(cells[j].lo, wl), wr, cells[j].density()});
      if (j == 0) return re;  // piece only
      --j;
    }
    if (i <= j && !(i == 0 && j == (std::size_t)-1)) {
      re.has_mid = true;
      re.mid = make_log_query(i, j);
    }
    return re;
  }

  // Lloyd sweeps with the far-field evaluator instead of exact span sums;
  // the final objective is still recomputed exactly from the codebook.
  QuantizerResult polish_log(std::vector<double> pts) {
    double prev_obj = kInf;
    std::vector<double> best_pts = pts;
    double best_obj = kInf;
    int sweeps = 0;
    bool fell_back = false;
    for (; sweeps < opts.polish_max_iter; ++sweeps) {
      double obj = 0.0;
      std::vector<double> np(pts.size());
      bool degenerate = false;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        double wl = (k == 0) ? -kInf : 0.5 * (pts[k - 1] + pts[k]);
        double wr = (k + 1 == pts.size()) ? kInf : 0.5 * (pts[k] + pts[k + 1]);
        RegionEval re = make_region(wl, wr);
        if (re.empty) {
          degenerate = true;
          break;
        }
        if (!re.has_mid && re.pieces.size() == 1) {
          const auto& p = re.pieces.front();
          np[k] = 0.5 * (p.lo + p.hi);
          obj += piece_log_moment(p.lo, p.hi, p.density, np[k]);
          continue;
        }
        auto s = scan_minimize([&](double a) { return re(a); }, re.lo, re.hi,
                               opts.polish_seed_count,
                               opts.polish_refine_brackets,
                               opts.golden_rel_tol);
        np[k] = s.x;
        obj += s.value;
      }
      if (degenerate) {
        fell_back = true;
        break;
      }
      for (std::size_t k = 1; k < np.size(); ++k)
        if (!(np[k] > np[k - 1])) np[k] = std::nextafter(np[k - 1], kInf);
      pts.swap(np);
      if (obj < best_obj) {
        best_obj = obj;
        best_pts = pts;
      }
      if (obj >= prev_obj - 1e-14 * std::max(1.0, std::abs(obj))) {
        ++sweeps;
        break;
      }
      prev_obj = obj;
    }
    if (fell_back) {
      LloydOptions lo;
      lo.max_iter = opts.polish_max_iter;
      lo.rel_tol = opts.polish_rel_tol;
      lo.point.seed_count = opts.polish_seed_count;
      lo.point.refine_brackets = opts.polish_refine_brackets;
      lo.point.golden_rel_tol = opts.golden_rel_tol;
      return lloyd(dm, (int)pts.size(), r, Codebook(best_pts), lo);
    }
    QuantizerResult res;
    res.codebook = Codebook(best_pts);
    res.iterations = sweeps;
    res.converged = sweeps < opts.polish_max_iter;
    fill_result(dm, r, res);
    return res;
  }

  QuantizerResult extract(int n) {
    // backtrack block-aligned boundaries, then re-optimize each group's point
    // at full precision over its cells
    std::vector<std::pair<std::size_t, std::size_t>> groups(n);
    std::size_t j = B;
    for (int k = n; k >= 1; --k) {
      std::size_t m = (std::size_t)opt[k][j];
      groups[k - 1] = {cell_lo(m), cell_hi(j)};
      j = m;
    }
    std::vector<double> pts(n);
    for (int k = 0; k < n; ++k)
      pts[k] = best_point(groups[k].first, groups[k].second, opts.seed_count,
                          opts.refine_brackets, opts.golden_rel_tol)
                   .point;
    for (int k = 1; k < n; ++k)
      if (!(pts[k] > pts[k - 1]))
        pts[k] = std::nextafter(pts[k - 1], kInf);

    QuantizerResult res;
    if (opts.polish) {
      if (r.is_log() && tree_ready) {
        res = polish_log(std::move(pts));
      } else {
        LloydOptions lo;
        lo.max_iter = opts.polish_max_iter;
        lo.rel_tol = opts.polish_rel_tol;
        lo.point.seed_count = opts.polish_seed_count;
        lo.point.refine_brackets = opts.polish_refine_brackets;
        lo.point.golden_rel_tol = opts.golden_rel_tol;
        res = lloyd(dm, n, r, Codebook(pts), lo);
      }
      res.method = "dp+polish";
    } else {
      res.codebook = Codebook(pts);
      res.method = "dp";
      res.iterations = 0;
      fill_result(dm, r, res);
    }
    return res;
  }
};

DpQuantizer::DpQuantizer(const DiscretizedMeasure& dm, ErrorOrder r,
                         DpOptions opts)
    : impl_(new Impl(dm, r, opts)) {}

DpQuantizer::~DpQuantizer() { delete impl_; }

QuantizerResult DpQuantizer::solve(int n) {
  impl_->build_to(n);
  return impl_->extract(n);
}

std::vector<QuantizerResult> DpQuantizer::solve_range(int n_lo, int n_hi) {
  if (n_lo < 1 || n_hi < n_lo)
    throw std::invalid_argument("bad n range");
  impl_->build_to(n_hi);
  std::vector<QuantizerResult> out;
  out.reserve(n_hi - n_lo + 1);
  for (int n = n_lo; n <= n_hi; ++n) out.push_back(impl_->extract(n));
  return out;
}

QuantizerResult dp_optimal_1d(const DiscretizedMeasure& dm, int n, ErrorOrder r,
                              const DpOptions& opts) {
  DpQuantizer q(dm, r, opts);
  return q.solve(n);
}

// --- Lloyd iteration -------------------------------------------------------

namespace {

Codebook quantile_seed(const DiscretizedMeasure& dm, int n) {
  std::vector<double> pts(n);
  const auto& cells = dm.cells();
  for (int i = 0; i < n; ++i) {
    double q = (2.0 * i + 1.0) / (2.0 * n);  // mass quantile (2i-1)/(2n), 1-based
    double target = q * dm.total_mass();
    std::size_t lo = 0, hi = dm.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (dm.prefix_mass(mid + 1) >= target)
        hi = mid;
      else
        lo = mid + 1;
    }
    const auto& c = cells[lo];
    double inside = target - dm.prefix_mass(lo);
    pts[i] = std::clamp(c.lo + inside / c.density(), c.lo, c.hi);
  }
  for (int i = 1; i < n; ++i)
    if (!(pts[i] > pts[i - 1])) pts[i] = std::nextafter(pts[i - 1], kInf);
  return Codebook(pts);
}

}  // namespace

QuantizerResult lloyd(const DiscretizedMeasure& dm, int n, ErrorOrder r,
                      std::optional<Codebook> init, const LloydOptions& opts) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (init && (int)init->n() != n)
    throw std::invalid_argument("init codebook size differs from n");
  Codebook cb = init ? *init : quantile_seed(dm, n);
  const auto& cells = dm.cells();
  double obj = cells_distortion(cells, cb, r);
  int iterations = 0, reseeds = 0;
  bool converged = false;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    auto frags = assign_fragments(cells, cb);
    std::vector<double> pts(n);
    std::vector<std::size_t> empty_regions;
    for (int i = 0; i < n; ++i) {
      if (frags[i].empty()) {
        empty_regions.push_back(i);
        pts[i] = cb.points[i];
      } else {
        pts[i] = optimal_point_1d(frags[i], r, opts.point).point;
      }
    }
    if (!empty_regions.empty()) {
      // re-seed dead points at midpoints of the worst-served cells
      std::vector<std::pair<double, std::size_t>> load;  // contribution, cell
      const auto bps = voronoi_breakpoints(cb);
      for (std::size_t t = 0; t < cells.size(); ++t) {
        double mid = cells[t].mid();
        std::size_t k = (std::size_t)(std::lower_bound(bps.begin(), bps.end(),
                                                       mid) -
                                      bps.begin());
        double contrib = r.is_log()
                             ? cell_log_moment(cells[t], cb.points[k])
                             : cell_power_moment(cells[t], cb.points[k], r.r);
        load.push_back({contrib, t});
      }
      std::stable_sort(load.begin(), load.end(),
                       [](const auto& a, const auto& b) {
                         return a.first > b.first;
                       });
      const double sep = 1e-12 * (dm.diameter() + 1.0);
      std::size_t next = 0;
      for (std::size_t dead : empty_regions) {
        while (next < load.size()) {
          double candidate = cells[load[next].second].mid();
          ++next;
          bool clash = false;
          for (int i = 0; i < n; ++i)
            if (std::abs(pts[i] - candidate) <= sep &&
                (std::size_t)i != dead) {
              clash = true;
              break;
            }
          if (!clash) {
            pts[dead] = candidate;
            ++reseeds;
            break;
          }
        }
      }
    }
    std::sort(pts.begin(), pts.end());
    for (int i = 1; i < n; ++i)
      if (!(pts[i] > pts[i - 1])) pts[i] = std::nextafter(pts[i - 1], kInf);
    Codebook cb2(pts);
    double obj2 = cells_distortion(cells, cb2, r);
    iterations = iter;
    if (obj2 > obj && empty_regions.empty()) {
      converged = true;  // fp-level stall; keep the better codebook
      break;
    }
    double improvement = obj - obj2;
    cb = cb2;
    obj = obj2;
    if (empty_regions.empty() &&
        improvement <= opts.rel_tol * (1.0 + std::abs(obj))) {
      converged = true;
      break;
    }
  }

  QuantizerResult res;
  res.codebook = cb;
  res.method = "lloyd";
  res.iterations = iterations;
  res.reseeds = reseeds;
  res.converged = converged;
  fill_result(dm, r, res);
  return res;
}

// --- brute-force oracle ----------------------------------------------------

QuantizerResult brute_force_oracle(const DiscretizedMeasure& dm, int n,
                                   ErrorOrder r, const OracleOptions& opts) {
  if (n < 1 || n > 3)
    throw std::invalid_argument("oracle supports n in {1, 2, 3}");
  int g = opts.grid_resolution;
  if (g < 2 || g > 512)
    throw std::invalid_argument("oracle grid resolution must be in [2, 512]");
  const std::size_t N = dm.size();
  if ((std::uint64_t)g * (N + 1) > (1ull << 26))
    throw BudgetError("oracle grid x cell table exceeds budget");
  double combos = 1.0;
  for (int i = 0; i < n; ++i) combos = combos * (g - i) / (i + 1);
  if (combos > (double)opts.combo_budget)
    throw BudgetError("oracle tuple count exceeds budget");

  const auto& cells = dm.cells();
  const double lo = dm.support_lo(), hi = dm.support_hi();
  std::vector<double> xs(g);
  for (int t = 0; t < g; ++t) xs[t] = lo + (hi - lo) * t / (g - 1);

  // pref[t * (N+1) + j] = moment of cells [0, j) toward grid point t
  std::vector<double> pref((std::size_t)g * (N + 1));
  std::vector<double> his(N);
  for (std::size_t j = 0; j < N; ++j) his[j] = cells[j].hi;
  for (int t = 0; t < g; ++t) {
    double* row = &pref[(std::size_t)t * (N + 1)];
    row[0] = 0.0;
    for (std::size_t j = 0; j < N; ++j)
      row[j + 1] = row[j] + (r.is_log()
                                 ? cell_log_moment(cells[j], xs[t])
                                 : cell_power_moment(cells[j], xs[t], r.r));
  }
  // moment of everything left of coordinate x toward grid point t
  auto P = [&](int t, double x) {
    const double* row = &pref[(std::size_t)t * (N + 1)];
    std::size_t c = (std::size_t)(std::lower_bound(his.begin(), his.end(), x) -
                                  his.begin());
    double v = row[c];
    if (c < N && cells[c].lo < x) {
      double b = std::min(x, cells[c].hi);
      double piece_mass = cells[c].mass * (b - cells[c].lo) / cells[c].width();
      MassCell piece{cells[c].lo, b, piece_mass};
      v += r.is_log() ? cell_log_moment(piece, xs[t])
                      : cell_power_moment(piece, xs[t], r.r);
    }
    return v;
  };
  auto Pfull = [&](int t) { return pref[(std::size_t)t * (N + 1) + N]; };

  double best = kInf;
  std::array<int, 3> best_t{0, 0, 0};
  if (n == 1) {
    for (int t = 0; t < g; ++t) {
      double v = Pfull(t);
      if (v < best) {
        best = v;
        best_t = {t, 0, 0};
      }
    }
  } else if (n == 2) {
    for (int t0 = 0; t0 < g; ++t0)
      for (int t1 = t0 + 1; t1 < g; ++t1) {
        double b = 0.5 * (xs[t0] + xs[t1]);
        double v = P(t0, b) + (Pfull(t1) - P(t1, b));
        if (v < best) {
          best = v;
          best_t = {t0, t1, 0};
        }
      }
  } else {
    for (int t0 = 0; t0 < g; ++t0)
      for (int t1 = t0 + 1; t1 < g; ++t1) {
        double b0 = 0.5 * (xs[t0] + xs[t1]);
        double left = P(t0, b0);
        for (int t2 = t1 + 1; t2 < g; ++t2) {
          double b1 = 0.5 * (xs[t1] + xs[t2]);
          double v = left + (P(t1, b1) - P(t1, b0)) +
                     (Pfull(t2) - P(t2, b1));
          if (v < best) {
            best = v;
            best_t = {t0, t1, t2};
          }
        }
      }
  }

  std::vector<double> pts;
  for (int i = 0; i < n; ++i) pts.push_back(xs[best_t[i]]);
  QuantizerResult res;
  res.codebook = Codebook(pts);
  res.method = "oracle";
  fill_result(dm, r, res);
  return res;
}

std::vector<CurvePoint> error_curve(const DiscretizedMeasure& dm, int n_max,
                                    ErrorOrder r, const DpOptions& opts) {
  DpQuantizer q(dm, r, opts);
  auto results = q.solve_range(1, n_max);
  std::vector<CurvePoint> out;
  out.reserve(results.size());
  for (int n = 1; n <= n_max; ++n) {
    const auto& res = results[n - 1];
    out.push_back({n, res.objective, res.error});
  }
  return out;
}

}  // namespace gmq
