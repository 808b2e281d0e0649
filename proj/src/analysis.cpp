#include "gmq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gmq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval enlarged_A(const Packing& p, std::size_t s, double delta) {
  const double c = p.centers.at(s);
  const double half = 2.0 * p.radius * (1.0 + 2.0 * delta);
  return {c - half, c + half};
}

bool in_interval(double x, const Interval& iv) {
  return x >= iv.lo && x <= iv.hi;
}

double dist_to_codebook(const Codebook& cb, double x) {
  auto it = std::lower_bound(cb.points.begin(), cb.points.end(), x);
  double d = kInf;
  if (it != cb.points.end()) d = std::min(d, *it - x);
  if (it != cb.points.begin()) d = std::min(d, x - *(it - 1));
  return d;
}

// E_omega together with every near code point's Voronoi slice of A_omega*:
//   E_w u ( union over a in alpha cap (A_w)_{delta|A_w|} of W(a|alpha) cap A_w* )
IntervalSet base_region(const Packing& p, const NeighborGraph& g,
                        const Codebook& cb, std::size_t omega) {
  const double delta = g.delta;
  IntervalSet base(p.E(omega));
  const Interval enl = enlarged_A(p, omega, delta);
  const auto bps = voronoi_breakpoints(cb);
  const IntervalSet& star = g.a_star.at(omega);
  // finite stand-in for +-infinity, wide enough to swallow A_omega*
  const double big = std::abs(star.hull().lo) + std::abs(star.hull().hi) +
                     4.0 * p.radius + 1.0;
  for (std::size_t i = 0; i < cb.n(); ++i) {
    if (!in_interval(cb.points[i], enl)) continue;
    double wlo = (i == 0) ? -big : bps[i - 1];
    double whi = (i + 1 == cb.n()) ? big : bps[i];
    base = base.unite(IntervalSet(wlo, whi).intersect(star));
  }
  return base;
}

std::size_t leftmost_owner(const Packing& p, double a, double delta) {
  for (std::size_t s = 0; s < p.phi(); ++s)
    if (in_interval(a, enlarged_A(p, s, delta))) return s;
  return (std::size_t)-1;
}

std::vector<std::size_t> gamma_tau(const Packing& p, const Codebook& cb,
                                   std::size_t tau, double delta) {
  std::vector<std::size_t> out;
  const Interval enl = enlarged_A(p, tau, delta);
  for (std::size_t i = 0; i < cb.n(); ++i)
    if (in_interval(cb.points[i], enl)) out.push_back(i);
  return out;
}

IntervalSet fragments_set(const std::vector<MassCell>& frags) {
  std::vector<Interval> pieces;
  pieces.reserve(frags.size());
  for (const auto& f : frags) pieces.push_back({f.lo, f.hi});
  return IntervalSet::from_pieces(pieces);
}

}  // namespace

double farthest_support_point(const DiscretizedMeasure& dm,
                              const Interval& window, const Codebook& cb) {
  double best_x = 0.0, best_d = -1.0;
  const auto bps = voronoi_breakpoints(cb);
  for (const auto& c : dm.cells()) {
    double lo = std::max(c.lo, window.lo), hi = std::min(c.hi, window.hi);
    if (!(hi >= lo)) continue;
    std::vector<double> cand{lo, hi};
    for (double b : bps)
      if (b > lo && b < hi) cand.push_back(b);
    for (double x : cand) {
      double d = dist_to_codebook(cb, x);
      if (d > best_d) {
        best_d = d;
        best_x = x;
      }
    }
  }
  if (best_d < 0.0)
    throw std::runtime_error("window contains no support");
  return best_x;
}

RegionSpec build_region(RegionKind kind, const Packing& packing,
                        const NeighborGraph& graph, const Codebook& cb,
                        const DiscretizedMeasure& dm,
                        const RegionParams& params) {
  const double delta = graph.delta;
  const std::size_t omega = params.omega;
  if (kind != RegionKind::G && kind != RegionKind::Ha &&
      omega >= packing.phi())
    throw std::invalid_argument("omega out of range");

  RegionSpec spec;
  spec.kind = kind;
  std::ostringstream label;

  auto ball = [](double c, double r) { return IntervalSet(c - r, c + r); };
  const double ball_r = delta * packing.A_diameter() / 2.0;  // delta|A_w|/2

  switch (kind) {
    case RegionKind::D1:
    case RegionKind::F1: {
      double x0 = params.x0 ? *params.x0
                            : farthest_support_point(dm, packing.A(omega), cb);
      if (!in_interval(x0, packing.A(omega)))
        throw std::invalid_argument("x0 outside A_omega");
      IntervalSet base = base_region(packing, graph, cb, omega);
      spec.set = (kind == RegionKind::D1) ? base.subtract(ball(x0, ball_r))
                                          : base.unite(ball(x0, ball_r));
      label << (kind == RegionKind::D1 ? "D1" : "F1") << "(omega=" << omega
            << ", x0=" << x0 << ")";
      break;
    }
    case RegionKind::D2:
    case RegionKind::F2: {
      if (!params.sigma) throw std::invalid_argument("D2/F2 need sigma");
      std::size_t sigma = *params.sigma;
      if (sigma >= packing.phi() || sigma == omega)
        throw std::invalid_argument("sigma must differ from omega");
      IntervalSet base = base_region(packing, graph, cb, omega);
      IntervalSet e_sigma(packing.E(sigma));
      spec.set = (kind == RegionKind::D2) ? base.subtract(e_sigma)
                                          : base.unite(e_sigma);
      label << (kind == RegionKind::D2 ? "D2" : "F2") << "(omega=" << omega
            << ", sigma=" << sigma << ")";
      break;
    }
    case RegionKind::D3: {
      spec.set = base_region(packing, graph, cb, omega);
      label << "D3(omega=" << omega << ")";
      break;
    }
    case RegionKind::D4: {
      const double r4 = (0.5 - delta) * packing.E_diameter();
      spec.set = ball(packing.centers.at(omega), r4);
      label << "D4(omega=" << omega << ")";
      break;
    }
    case RegionKind::F3: {
      std::size_t tau = (std::size_t)-1;
      if (params.tau) {
        tau = *params.tau;
      } else {
        const auto& nb = graph.neighbors.at(omega);
        for (std::size_t t = 0; t < packing.phi(); ++t)
          if (!std::binary_search(nb.begin(), nb.end(), t)) {
            tau = t;
            break;
          }
      }
      if (tau >= packing.phi())
        throw std::invalid_argument("F3: no ball outside the neighbor set");
      const double r4 = (0.5 - delta) * packing.E_diameter();
      spec.set = base_region(packing, graph, cb, omega)
                     .unite(ball(packing.centers.at(tau), r4));
      label << "F3(omega=" << omega << ", tau=" << tau << ")";
      break;
    }
    case RegionKind::G:
    case RegionKind::Ha: {
      if (!params.a) throw std::invalid_argument("G/Ha need a code point a");
      const double a = *params.a;
      std::size_t sigma = leftmost_owner(packing, a, delta);
      if (sigma == (std::size_t)-1)
        throw std::runtime_error("code point lies outside every enlarged ball");
      if (kind == RegionKind::Ha) {
        std::vector<std::size_t> idx;
        for (std::size_t tau : graph.neighbors.at(sigma))
          for (std::size_t b : gamma_tau(packing, cb, tau, delta))
            idx.push_back(b);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        for (std::size_t b : idx) spec.points.push_back(cb.points[b]);
        if (spec.points.empty())
          throw std::runtime_error("empty H(a)");
        label << "Ha(a=" << a << ", sigma=" << sigma << ")";
        spec.label = label.str();
        spec.mass = 0.0;
        spec.diameter = spec.points.back() - spec.points.front();
        return spec;
      }
      std::size_t tau0 = params.tau ? *params.tau : sigma;
      const auto& nb = graph.neighbors.at(sigma);
      if (!std::binary_search(nb.begin(), nb.end(), tau0))
        throw std::invalid_argument("tau0 must be a neighbor of sigma");
      auto frags = assign_fragments(dm.cells(), cb);
      IntervalSet g(packing.A(tau0));
      for (std::size_t tau : nb)
        for (std::size_t b : gamma_tau(packing, cb, tau, delta))
          g = g.unite(fragments_set(frags[b]));
      spec.set = g;
      label << "G(a=" << a << ", sigma=" << sigma << ", tau0=" << tau0 << ")";
      break;
    }
  }

  spec.label = label.str();
  spec.mass = dm.mass_in(spec.set);
  spec.diameter = spec.set.diameter();
  if (!(spec.mass > 0.0))
    throw std::runtime_error("empty region (mass 0): " + spec.label);
  return spec;
}

double rescaling_identity_check(const DiscretizedMeasure& dm,
                                const RegionSpec& region, const Codebook& cb) {
  const ErrorOrder r0;
  double lhs = distortion(dm, cb, r0, region.set);
  ConditionalMeasure cond = conditional(dm, region.set);
  DiscretizedMeasure nu = cond.rescaled();
  std::vector<double> mapped;
  mapped.reserve(cb.n());
  for (double p : cb.points)
    mapped.push_back((p - cond.region_lo) / cond.region_diameter);
  double inner = distortion(nu, Codebook(mapped), r0);
  double rhs = cond.mass_of_region * std::log(cond.region_diameter) +
               cond.mass_of_region * inner;
  return std::abs(lhs - rhs);
}

// --- gap report --------------------------------------------------------------

namespace {

// largest eta in (0, 1] with -x log x < th on (0, eta)
double eta_threshold(double th) {
  const double e_inv = std::exp(-1.0);
  if (th >= e_inv) return 1.0;
  double lo = 1e-300, hi = e_inv;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (-mid * std::log(mid) < th)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

GapReport gap_report(const DiscretizedMeasure& dm, int k_max,
                     const ADProfile& profile, const DpOptions& opts) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  GapReport rep;
  rep.t = profile.s0;
  DiscretizedMeasure scaled = dm;
  double diam = dm.diameter();
  if (diam > 1.0) {
    rep.rescale_ratio = 1.0 / diam;
    scaled = scale_translate(dm, rep.rescale_ratio,
                             -dm.support_lo() / diam);
  }
  // Hoelder constant for the rescaled measure; mass of an eps-ball grows by
  // diam^s0 when coordinates shrink by diam
  rep.C = std::max(1.0, profile.c2_hat *
                            std::pow(std::max(diam, 1.0), profile.s0));
  const double C = rep.C, t = rep.t;
  const double ln2 = std::log(2.0), ln3 = std::log(3.0);

  DpQuantizer q(scaled, ErrorOrder{}, opts);
  auto results = q.solve_range(1, k_max);

  double prev_ehat = 0.0;
  bool pass = true;
  for (int k = 1; k <= k_max; ++k) {
    const auto& res = results[k - 1];
    GapRow row;
    row.k = k;
    row.ehat = res.objective;
    auto frags = assign_fragments(scaled.cells(), res.codebook);
    double dmin = kInf, dmax = 0.0;
    for (const auto& f : frags) {
      double mass = 0.0;
      for (const auto& c : f) mass += c.mass;
      dmin = std::min(dmin, mass);
      dmax = std::max(dmax, mass);
    }
    row.dmin = dmin;
    row.dmax = dmax;
    if (k >= 2) {
      row.lambda = kInf;
      for (std::size_t i = 1; i < res.codebook.n(); ++i)
        row.lambda = std::min(row.lambda, res.codebook.points[i] -
                                              res.codebook.points[i - 1]);
      row.gap = prev_ehat - row.ehat;
      row.delta_k1 = std::pow(4.0 * C * (k - 1), -1.0 / t);
      row.delta_k2 = std::pow(2.0 * C * (k - 1), -1.0 / t);
      row.delta_k = 0.5 * std::min(row.delta_k1, row.delta_k2 - row.delta_k1);
      row.l_k = (long long)std::floor(2.0 / row.delta_k + 2.0) + 1;
      row.zeta = ln2 / (2.0 * (double)row.l_k);
      row.chi = ln3 / k + std::sqrt(C) * (2.0 / t) * std::sqrt(1.0 / k);
      row.eta_k = eta_threshold(t * row.zeta / 2.0);
      row.dlow_bound =
          std::min(row.eta_k, row.zeta / (2.0 * (ln3 + C / t)));
      row.delta_k3 = std::pow(2.0 * C, -1.0 / t) * std::pow(dmin, 1.0 / t);
      row.N_k = (long long)std::floor(8.0 / row.delta_k3) + 3;
      const double D1 = (1.0 / 32.0) * std::pow(2.0 * C, -1.0 / t);
      row.dbar_bound = std::pow(row.chi / (D1 * ln2), t / (t + 1.0));
      const double Bk = std::min(t * row.zeta / (4.0 * C), row.eta_k);
      const double eps_k =
          std::min(std::pow(Bk / (2.0 * C), 1.0 / t), 0.5);
      row.s_k = 0.5 * (std::exp(row.zeta / 4.0) - 1.0) * eps_k;
      row.g_k = row.s_k / 3.0;
      row.gap_pass =
          row.gap >= row.zeta - 1e-12 && row.gap <= row.chi + 1e-12;
    }
    row.pigeonhole_pass =
        row.dmin <= 1.0 / k + 1e-12 && 1.0 / k <= row.dmax + 1e-12;
    pass = pass && row.gap_pass && row.pigeonhole_pass;
    rep.rows.push_back(row);
    prev_ehat = row.ehat;
  }
  rep.pass = pass;
  return rep;
}

// --- auxiliary integers --------------------------------------------------------

namespace {

// re-aggregate to at most `cap` cells by equal-width bins over the hull;
// gap fill inside a bin is bounded by the bin width (estimator resolution)
DiscretizedMeasure coarsen_cells(const DiscretizedMeasure& dm,
                                 std::size_t cap) {
  if (dm.size() <= cap) return dm;
  const double lo = dm.support_lo(), w = dm.diameter();
  std::vector<MassCell> out;
  long long bin = -1;
  for (const auto& c : dm.cells()) {
    long long b = (long long)std::min<double>(
        (double)cap - 1.0, std::floor((c.mid() - lo) / w * (double)cap));
    if (b == bin && !out.empty()) {
      out.back().hi = c.hi;
      out.back().mass += c.mass;
    } else {
      out.push_back(c);
      bin = b;
    }
  }
  return DiscretizedMeasure(out, dm.depth());
}

struct AuxCurve {
  std::vector<double> ehat;  // ehat[n], 1-based; flat beyond the cell count
  double at(long long n) const {
    if (n < 1) n = 1;
    if (n >= (long long)ehat.size()) n = (long long)ehat.size() - 1;
    return ehat[n];
  }
};

AuxCurve aux_curve(const DiscretizedMeasure& dm, const IntervalSet& region,
                   int n_max, std::size_t cell_cap) {
  DiscretizedMeasure nu = coarsen_cells(conditional(dm, region).rescaled(),
                                        cell_cap);
  DpOptions frugal;
  frugal.polish = false;
  frugal.table_seed_count = 16;
  frugal.table_refine_brackets = 1;
  frugal.table_golden_rel_tol = 1e-8;
  frugal.seed_count = 24;
  frugal.refine_brackets = 1;
  frugal.golden_rel_tol = 1e-10;
  frugal.exact_eval_threshold = 64;
  int reach = std::min<int>(n_max, (int)nu.size());
  auto curve = error_curve(nu, reach, ErrorOrder{}, frugal);
  AuxCurve out;
  out.ehat.assign((std::size_t)n_max + 1, 0.0);
  for (int n = 1; n <= n_max; ++n)
    out.ehat[n] = curve[std::min(n, reach) - 1].objective;
  return out;
}

struct ScanResult {
  bool found = false;
  long long value = 0;
  double best_margin = kInf;
  long long best_n = 0;
};

// smallest n with lhs(n') < rhs(n') for ALL probed n' in [n, hi]
template <class L, class R>
ScanResult suffix_scan(long long lo, long long hi, L&& lhs, R&& rhs) {
  ScanResult sr;
  if (lo > hi) return sr;
  long long first_ok_suffix = hi + 1;
  for (long long n = hi; n >= lo; --n) {
    double margin = lhs(n) - rhs(n);
    if (margin < sr.best_margin) {
      sr.best_margin = margin;
      sr.best_n = n;
    }
    if (margin < 0.0)
      first_ok_suffix = n;
    else
      break;  // a violation at n blocks every smaller candidate
  }
  // margins below the break point still inform the report
  for (long long n = std::min(first_ok_suffix, hi) - 1; n >= lo; --n) {
    double margin = lhs(n) - rhs(n);
    if (margin < sr.best_margin) {
      sr.best_margin = margin;
      sr.best_n = n;
    }
  }
  if (first_ok_suffix <= hi) {
    sr.found = true;
    sr.value = first_ok_suffix;
  }
  return sr;
}

}  // namespace

AuxIntegerEstimate estimate_aux_integers(const DiscretizedMeasure& dm,
                                         const Packing& packing,
                                         const NeighborGraph& graph,
                                         const AuxiliaryConstants& constants,
                                         const AuxBudget& budget) {
  const long long L0 = constants.L0, L1 = constants.L1, L2 = constants.L2;
  const long long n0 = constants.n0, M0 = constants.M0, N = constants.N;
  const double zeta = constants.zeta, d = constants.delta, s0 = constants.s0;
  const std::size_t phi = packing.phi();
  const int n_cap = budget.n_cap;
  const int n_max = n_cap + (int)L1;

  AuxIntegerEstimate est;
  est.n1.name = "n1";
  est.n2.name = "n2";
  est.n4.name = "n4";
  est.probe_lo = (int)(L0 + L2 + 1);
  est.probe_hi = n_cap;

  int n_ref = budget.n_ref ? *budget.n_ref
                           : std::min<int>(3 * (int)phi, n_cap);
  n_ref = std::max(1, std::min<int>(n_ref, (int)dm.size()));
  est.n_ref = n_ref;
  Codebook alpha = dp_optimal_1d(dm, n_ref, ErrorOrder{}).codebook;

  std::vector<AuxCurve> d2_curves, e_curves, d3_curves, d4_curves;
  for (std::size_t w = 0; w < phi; ++w) {
    for (std::size_t s = 0; s < phi; ++s) {
      if (s == w) continue;
      RegionParams rp;
      rp.omega = w;
      rp.sigma = s;
      auto reg = build_region(RegionKind::D2, packing, graph, alpha, dm, rp);
      d2_curves.push_back(aux_curve(dm, reg.set, n_max, budget.cell_cap));
    }
    RegionParams rp;
    rp.omega = w;
    auto reg3 = build_region(RegionKind::D3, packing, graph, alpha, dm, rp);
    d3_curves.push_back(aux_curve(dm, reg3.set, n_max, budget.cell_cap));
    auto reg4 = build_region(RegionKind::D4, packing, graph, alpha, dm, rp);
    d4_curves.push_back(aux_curve(dm, reg4.set, n_max, budget.cell_cap));
    Interval e = packing.E(w);
    e_curves.push_back(
        aux_curve(dm, IntervalSet(e.lo, e.hi), n_max, budget.cell_cap));
  }
  // degenerate single-ball packings have no (omega, sigma) pairs; the D3
  // window then plays the worst-case role so the scans stay well-defined
  const auto& lhs_curves = d2_curves.empty() ? d3_curves : d2_curves;

  auto worst_gap = [&](const std::vector<AuxCurve>& curves, long long a,
                       long long b) {
    double worst = -kInf;
    for (const auto& c : curves) worst = std::max(worst, c.at(a) - c.at(b));
    return worst;
  };

  // n1: worst-case gap over a fixed window falls under the closed-form value
  const double rhs1 =
      (1.0 / zeta) * (constants.c1 / constants.c2) * std::pow(d, s0) *
      std::log(2.0);
  {
    auto sr = suffix_scan(
        L0 + L2 + 1, n_cap,
        [&](long long n) { return worst_gap(lhs_curves, n - L0 - L2, n + L1); },
        [&](long long) { return rhs1; });
    est.n1.found = sr.found;
    est.n1.value = sr.value;
    est.n1.best_margin = sr.best_margin;
    est.n1.best_n = sr.best_n;
    if (!sr.found) est.n1.note = "budget-exceeded";
  }

  // n2: same window widened by n1, against the E_sigma gap at n1 + L1
  if (!est.n1.found) {
    est.n2.note = "blocked: n1 not found within budget";
  } else {
    const long long n1v = est.n1.value;
    double rhs2 = kInf;
    for (const auto& c : e_curves)
      rhs2 = std::min(rhs2, (c.at(n1v + L1 - 1) - c.at(n1v + L1)) / zeta);
    long long lo2 = n1v + L0 + L1 + 1;
    if (lo2 > n_cap) {
      est.n2.note = "budget-exceeded: scan start beyond probe cap";
      est.n2.best_n = lo2;
    } else {
      auto sr = suffix_scan(
          lo2, n_cap,
          [&](long long n) {
            return worst_gap(lhs_curves, n - L0 - n1v - L1, n + L1);
          },
          [&](long long) { return rhs2; });
      est.n2.found = sr.found;
      est.n2.value = sr.value;
      est.n2.best_margin = sr.best_margin;
      est.n2.best_n = sr.best_n;
      if (!sr.found) est.n2.note = "budget-exceeded";
    }
  }

  if (est.n2.found) est.n3 = (est.n2.value + n0) * N;

  // n4: D3 gap window offset by n3, against the D4 gap at n3 + L1
  if (!est.n3) {
    est.n4.note = "blocked: n3 not derivable within budget";
  } else {
    const long long n3v = *est.n3;
    if (n3v + L1 > n_max) {
      est.n4.note = "budget-exceeded: n3 beyond probe cap";
    } else {
      double rhs4 = kInf;
      for (const auto& c : d4_curves)
        rhs4 = std::min(rhs4, (c.at(n3v + L1 - 1) - c.at(n3v + L1)) / zeta);
      long long lo4 = M0 * n3v + L0 + L1 + 1;
      if (lo4 > n_cap) {
        est.n4.note = "budget-exceeded: scan start beyond probe cap";
        est.n4.best_n = lo4;
      } else {
        auto sr = suffix_scan(
            lo4, n_cap,
            [&](long long n) {
              return worst_gap(d3_curves, n - L0 - n3v - L1, n + L1);
            },
            [&](long long) { return rhs4; });
        est.n4.found = sr.found;
        est.n4.value = sr.value;
        est.n4.best_margin = sr.best_margin;
        est.n4.best_n = sr.best_n;
        if (!sr.found) est.n4.note = "budget-exceeded";
      }
    }
  }

  if (est.n4.found) est.n5 = M0 * est.n4.value;
  return est;
}

// --- local counts ----------------------------------------------------------

LocalCountReport local_count_report(const DiscretizedMeasure& dm, int n,
                                    ErrorOrder r, const Packing& packing,
                                    const NeighborGraph& graph,
                                    const AuxiliaryConstants& constants,
                                    std::optional<std::size_t> phi_next,
                                    const DpOptions& opts) {
  LocalCountReport rep;
  rep.n = n;
  rep.level_k = packing.k;

  Codebook alpha = dp_optimal_1d(dm, n, r, opts).codebook;
  const double delta = graph.delta;
  const std::size_t phi = packing.phi();
  const auto bps = voronoi_breakpoints(alpha);

  std::vector<bool> claimed(alpha.n(), false);
  long long total = 0;
  for (std::size_t s = 0; s < phi; ++s) {
    Interval enl = enlarged_A(packing, s, delta);
    long long count = 0;
    for (std::size_t i = 0; i < alpha.n(); ++i)
      if (in_interval(alpha.points[i], enl)) {
        ++count;
        claimed[i] = true;
      }
    rep.L_sigma.push_back(count);
    total += count;

    // sup of d(x, alpha) over the support inside A_sigma: the distance is
    // piecewise linear, so fragment endpoints and interior breakpoints are
    // the only candidates
    Interval A = packing.A(s);
    double sup = 0.0;
    for (const auto& c : dm.cells()) {
      double lo = std::max(c.lo, A.lo), hi = std::min(c.hi, A.hi);
      if (!(hi >= lo)) continue;
      sup = std::max(sup, dist_to_codebook(alpha, lo));
      sup = std::max(sup, dist_to_codebook(alpha, hi));
      for (double b : bps)
        if (b > lo && b < hi)
          sup = std::max(sup, dist_to_codebook(alpha, b));
    }
    rep.sup_distance.push_back(sup);
    rep.delta_Asigma.push_back(delta * packing.A_diameter());
  }
  for (std::size_t i = 0; i < alpha.n(); ++i)
    if (!claimed[i]) ++rep.L_c;

  rep.counts_consistent = rep.L_c + total >= n;
  rep.all_within_delta = true;
  for (std::size_t s = 0; s < phi; ++s)
    if (rep.sup_distance[s] > rep.delta_Asigma[s] + 1e-12)
      rep.all_within_delta = false;

  rep.regime_rule_exact = constants.n2.has_value() && phi_next.has_value();
  long long n2v = constants.n2.value_or(0);
  long long lower = (constants.n0 + n2v) * (long long)phi;
  bool upper_ok = true;
  if (phi_next) upper_ok = n < (constants.n0 + n2v) * (long long)*phi_next;
  rep.regime_valid = (n >= lower) && upper_ok;
  rep.level_flagged = !rep.regime_valid;
  return rep;
}

NeighborhoodReport neighborhood_report(const DiscretizedMeasure& dm, int n,
                                       const Packing& packing,
                                       const NeighborGraph& graph,
                                       const AuxiliaryConstants& constants,
                                       const DpOptions& opts) {
  NeighborhoodReport rep;
  Codebook alpha = dp_optimal_1d(dm, n, ErrorOrder{}, opts).codebook;
  auto frags = assign_fragments(dm.cells(), alpha);
  const double delta = graph.delta;
  const double s0 = constants.s0;
  const double spread = 5.0 + 16.0 * delta;

  rep.all_contained = true;
  rep.all_bands = true;
  for (std::size_t i = 0; i < alpha.n(); ++i) {
    NeighborhoodRecord rec;
    rec.a = alpha.points[i];
    rec.sigma = leftmost_owner(packing, rec.a, delta);
    if (rec.sigma == (std::size_t)-1) {
      rec.stray = true;
      rep.all_contained = false;
      rep.all_bands = false;
      rep.records.push_back(rec);
      continue;
    }
    RegionParams rp;
    rp.a = rec.a;
    auto g = build_region(RegionKind::G, packing, graph, alpha, dm, rp);
    auto h = build_region(RegionKind::Ha, packing, graph, alpha, dm, rp);
    rec.G = g.set;
    rec.mu_G = g.mass;
    rec.G_diameter = g.diameter;
    rec.H = h.points;
    rec.T_a = (long long)h.points.size();

    rec.containment = g.set.contains(fragments_set(frags[i]), 0.0);
    const double A_diam = packing.A_diameter();
    rec.chain_ok = g.diameter >= A_diam - 1e-12 * (1.0 + A_diam) &&
                   g.diameter <= spread * A_diam + 1e-12 * (1.0 + A_diam);
    double lo_band = constants.eta4 * std::pow(spread, -s0) *
                     std::pow(g.diameter, s0);
    double hi_band = constants.eta3 * std::pow(g.diameter, s0);
    rec.mass_band_ok =
        g.mass >= lo_band * (1.0 - 1e-9) && g.mass <= hi_band * (1.0 + 1e-9);
    rec.T_in_range = rec.T_a >= 1 &&
                     (!constants.n5 || rec.T_a <= *constants.n5);
    rep.all_contained = rep.all_contained && rec.containment;
    rep.all_bands = rep.all_bands && rec.mass_band_ok;
    rep.records.push_back(rec);
  }
  return rep;
}

// --- theorem band ------------------------------------------------------------

TheoremReport theorem_report(const DiscretizedMeasure& dm, int n_lo, int n_hi,
                             ErrorOrder r, double slack,
                             const DpOptions& opts) {
  if (!(slack >= 1.0)) throw std::invalid_argument("slack must be >= 1");
  TheoremReport rep;
  rep.slack = slack;
  rep.band = mass_band(dm, n_lo, n_hi, r, opts);
  rep.d1 = rep.band.d1;
  rep.d2 = rep.band.d2;
  rep.d3 = rep.band.d3;
  // the largest quartile of n must attain the extremes within the slack
  const std::size_t count = rep.band.rows.size();
  const std::size_t qstart = count - (count + 3) / 4;
  bool trend_ok = true;
  for (std::size_t i = qstart; i < count; ++i) {
    const auto& row = rep.band.rows[i];
    if (row.n_min_mass > slack * rep.d1 + 1e-12) trend_ok = false;
    if (row.n_max_mass < rep.d2 / slack - 1e-12) trend_ok = false;
  }
  rep.pass = rep.d1 > 0.0 && rep.d3 > 0.0 && trend_ok;
  return rep;
}

// --- inheritance ---------------------------------------------------------------

namespace {

double fragment_value(const std::vector<MassCell>& cells, ErrorOrder r,
                      double x) {
  double v = 0.0;
  for (const auto& c : cells)
    v += r.is_log() ? cell_log_moment(c, x) : cell_power_moment(c, x, r.r);
  return v;
}

// Local descent from x0: slides a bracket downhill into the containing basin
// and golden-sections it. Used to find the minimizer nearest to a code point
// when the global argmin is a mirror pair.
double refine_near(const std::vector<MassCell>& cells, ErrorOrder r,
                   double x0) {
  const double lo = cells.front().lo, hi = cells.back().hi;
  double h = std::max((hi - lo) * 1e-3, 1e-12);
  double xm = std::min(hi, std::max(lo, x0)), fm = fragment_value(cells, r, xm);
  double xl = std::max(lo, xm - h), xr = std::min(hi, xm + h);
  double fl = fragment_value(cells, r, xl), fr = fragment_value(cells, r, xr);
  for (int guard = 0; guard < 200 && (fl < fm || fr < fm); ++guard) {
    if (fl < fm) {
      xr = xm;
      fr = fm;
      xm = xl;
      fm = fl;
      xl = std::max(lo, xm - h);
      if (xl == xm) break;
      fl = fragment_value(cells, r, xl);
    } else {
      xl = xm;
      fl = fm;
      xm = xr;
      fm = fr;
      xr = std::min(hi, xm + h);
      if (xr == xm) break;
      fr = fragment_value(cells, r, xr);
    }
    h *= 2.0;
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = xl, b = xr;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = fragment_value(cells, r, x1), f2 = fragment_value(cells, r, x2);
  for (int it = 0; it < 120 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = fragment_value(cells, r, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = fragment_value(cells, r, x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

}  // namespace

InheritanceReport optimality_inheritance_check(const DiscretizedMeasure& dm,
                                               int n, ErrorOrder r,
                                               const DpOptions& opts) {
  InheritanceReport rep;
  auto res = dp_optimal_1d(dm, n, r, opts);
  auto frags = assign_fragments(dm.cells(), res.codebook);
  PointOptions po;
  po.seed_count = opts.seed_count;
  po.refine_brackets = opts.refine_brackets;
  po.golden_rel_tol = opts.golden_rel_tol;
  for (std::size_t i = 0; i < res.codebook.n(); ++i) {
    if (frags[i].empty()) continue;
    double a = res.codebook.points[i];
    auto best = optimal_point_1d(frags[i], r, po);
    double here = fragment_value(frags[i], r, a);
    InheritanceRecord rec;
    rec.a = a;
    rec.optimal = best.point;
    // symmetric conditionals carry mirror-twin minimizers of equal value;
    // displacement is to the achiever nearest a, while the residual stays
    // pinned against the global optimum
    double local = refine_near(frags[i], r, a);
    double vloc = fragment_value(frags[i], r, local);
    if (vloc <= best.objective + 1e-9 * (1.0 + std::abs(best.objective)) &&
        std::abs(local - a) < std::abs(best.point - a))
      rec.optimal = local;
    rec.displacement = std::abs(rec.optimal - a);
    rec.objective_residual = std::max(0.0, here - best.objective);
    rep.max_displacement = std::max(rep.max_displacement, rec.displacement);
    rep.max_residual = std::max(rep.max_residual, rec.objective_residual);
    rep.records.push_back(rec);
  }
  return rep;
}

}  // namespace gmq
