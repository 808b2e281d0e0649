#include "gmq/covering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gmq/errors.hpp"

namespace gmq {

std::vector<double> max_packing_1d(const DiscretizedMeasure& dm,
                                   double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  std::vector<double> centers;
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& c : dm.cells()) {
    double x = c.mid();
    if (x - last > 2.0 * radius) {
      centers.push_back(x);
      last = x;
    }
  }
  return centers;
}

Packing build_packing(const DiscretizedMeasure& dm, const ADProfile& profile,
                      int k, std::optional<int> m_override) {
  if (k < 1) throw std::invalid_argument("packing level k must be >= 1");
  int m = m_override ? *m_override
                     : packing_base_m(profile.c1_hat, profile.c2_hat,
                                      profile.s0);
  if (m < 2) throw std::invalid_argument("packing base m must be >= 2");
  double radius = 1.0;
  for (int i = 0; i < k; ++i) radius /= m;
  if (radius < dm.max_cell_width()) {
    std::ostringstream msg;
    msg << "m^-k below discretization floor: " << m << "^-" << k << " = "
        << radius << " < max cell width " << dm.max_cell_width();
    throw ConfigError(msg.str());
  }
  Packing p;
  p.m = m;
  p.k = k;
  p.radius = radius;
  // smallest k0 with 2 m^-k0 < eps0
  double rr = 1.0;
  int k0 = 0;
  while (k0 < 64 && !(2.0 * rr < profile.eps0_hat)) {
    rr /= m;
    ++k0;
  }
  p.k0 = k0;
  p.centers = max_packing_1d(dm, radius);
  return p;
}

std::vector<Packing> packing_family(const DiscretizedMeasure& dm,
                                    const ADProfile& profile, int k_lo,
                                    int k_hi, std::optional<int> m_override) {
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("bad k range");
  std::vector<Packing> out;
  out.reserve(k_hi - k_lo + 1);
  for (int k = k_lo; k <= k_hi; ++k)
    out.push_back(build_packing(dm, profile, k, m_override));
  return out;
}

NeighborGraph neighbor_graph(const Packing& packing, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  NeighborGraph g;
  g.delta = delta;
  const std::size_t n = packing.phi();
  g.neighbors.resize(n);
  g.M.resize(n);
  g.a_star.resize(n);
  // (A_tau)_{2 delta |A_tau|} intersects (A_sigma)_{2 delta |A_sigma|} iff
  // center distance <= sum of enlarged half-widths; all balls share one scale
  const double half = 2.0 * packing.radius * (1.0 + 4.0 * delta);
  for (std::size_t s = 0; s < n; ++s) {
    IntervalSet star;
    for (std::size_t t = 0; t < n; ++t) {
      if (std::abs(packing.centers[s] - packing.centers[t]) <= 2.0 * half) {
        g.neighbors[s].push_back(t);
        star = star.unite(IntervalSet(packing.A(t)));
      }
    }
    g.M[s] = g.neighbors[s].size();
    g.a_star[s] = star;
  }
  return g;
}

std::vector<double> grid_candidates(const IntervalSet& target, double pitch) {
  if (!(pitch > 0.0)) throw std::invalid_argument("pitch must be positive");
  std::vector<double> out;
  for (const auto& p : target.pieces()) {
    long long steps = (long long)std::floor(p.width() / pitch);
    for (long long i = 0; i <= steps; ++i) out.push_back(p.lo + i * pitch);
    if (out.empty() || out.back() < p.hi) out.push_back(p.hi);
  }
  return out;
}

CoverSet greedy_cover(const IntervalSet& target, double radius,
                      const std::vector<double>& candidates,
                      const std::string& kind) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  CoverSet cs;
  cs.kind = kind;
  cs.radius = radius;
  // pack balls of radius/2 (disjoint <=> center distance > radius), double
  double last = -std::numeric_limits<double>::infinity();
  for (double x : candidates) {
    if (!target.contains(x)) continue;
    if (x - last > radius) {
      cs.centers.push_back(x);
      last = x;
    }
  }
  const double pitch = radius / 16.0;
  for (const auto& p : target.pieces()) {
    long long steps = (long long)std::floor(p.width() / pitch);
    for (long long i = 0; i <= steps + 1; ++i) {
      double x = std::min(p.lo + i * pitch, p.hi);
      bool covered = false;
      for (double c : cs.centers)
        if (std::abs(x - c) <= radius) {
          covered = true;
          break;
        }
      if (!covered) {
        std::ostringstream msg;
        msg << kind << ": probe " << x << " uncovered at radius " << radius;
        throw std::runtime_error(msg.str());
      }
      if (x >= p.hi) break;
    }
  }
  return cs;
}

namespace {

CoverSet cover_interval(double lo, double hi, double radius,
                        const std::string& kind) {
  IntervalSet target(lo, hi);
  // candidate lattice fine enough that greedy packing stays near-maximal
  return greedy_cover(target, radius, grid_candidates(target, radius / 16.0),
                      kind);
}

}  // namespace

CoverSet cover_B_sigma(const Packing& p, std::size_t sigma, double delta) {
  const double c = p.centers.at(sigma);
  const double half = 2.0 * p.radius * (1.0 + 4.0 * delta);
  return cover_interval(c - half, c + half, delta * p.A_diameter() / 2.0,
                        "B_sigma");
}

CoverSet cover_gamma_E(const Packing& p, std::size_t sigma, double delta) {
  const double c = p.centers.at(sigma);
  return cover_interval(c - p.radius, c + p.radius,
                        delta * p.E_diameter() / 2.0, "gamma_E");
}

CoverSet cover_G_x(const Packing& p, double x, double delta) {
  const double r = delta * p.A_diameter() / 2.0;
  return cover_interval(x - r, x + r, delta * p.A_diameter() / 4.0, "G_x");
}

CoverSet cover_H_sigma(const Packing& p, std::size_t sigma, double delta) {
  const double c = p.centers.at(sigma);
  return cover_interval(c - 2.0 * p.radius, c + 2.0 * p.radius,
                        delta * p.A_diameter() / 4.0, "H_sigma");
}

int packing_base_m(double C1, double C2, double s0) {
  if (!(C1 > 0.0) || !(C2 >= C1) || !(s0 > 0.0))
    throw std::invalid_argument("need 0 < C1 <= C2 and s0 > 0");
  double bound = 2.0 * std::pow(C2 / C1, 1.0 / s0);
  int m = (int)std::floor(bound) + 1;  // smallest integer strictly above
  if ((double)m <= bound) ++m;
  return m;
}

AuxiliaryConstants constants_from(double C1, double C2, double s0, int q,
                                  const ConstantsOptions& opts) {
  if (!(C1 > 0.0) || !(C2 >= C1))
    throw std::invalid_argument("need 0 < C1 <= C2");
  if (!(s0 > 0.0)) throw std::invalid_argument("need s0 > 0");
  if (q != 1 && q != 2) throw std::invalid_argument("q must be 1 or 2");

  AuxiliaryConstants a;
  a.c1 = C1;
  a.c2 = C2;
  a.s0 = s0;
  a.q = q;
  a.delta = opts.delta_override
                ? *opts.delta_override
                : (1.0 / 16.0) * std::pow(C1 / C2, 1.0 / s0);
  if (!(a.delta > 0.0) || a.delta > 1.0 / 16.0 + 1e-15)
    throw std::invalid_argument("delta must lie in (0, 1/16]");
  const double d = a.delta;
  a.L0 = (long long)std::floor(2.0 / d + 10.0);
  a.L1 = (long long)std::floor(std::pow(2.0 / d + 1.0, q)) + 1;
  a.L2 = (long long)std::llround(std::pow(6.0, q));
  a.n0 = (long long)std::floor(std::pow(4.0 / d + 1.0, q)) + 1;
  a.M0 = (long long)std::floor(std::pow(8.0 * (1.0 + 2.0 * d), q)) + 1;
  a.eta1 = C1 / C2;
  a.eta2 = std::pow(C2 / C1, 2.0) * std::pow(2.0, s0);
  const double xi1 = C1 * (std::pow(2.0, -s0) - std::pow(16.0, -s0)) *
                     std::pow(8.0 * (1.0 + 2.0 * d), -s0);
  const double xi2 = C2 * std::pow(4.0 * (1.0 + 2.0 * d), s0) *
                     std::pow(1.0 - 2.0 * d, -s0);
  const double xi3 = C2 * std::pow(4.0, s0) * std::pow(1.0 + 2.0 * d, s0);
  const double xi4 = C1 * std::pow(4.0, -s0) *
                     std::pow(4.0 * (1.0 + 2.0 * d), -s0);
  a.xi = std::max(std::max(1.0 / xi1, 1.0 / xi4), std::max(xi2, xi3));
  a.zeta = a.xi * std::pow(8.0 * (1.0 + 2.0 * d), s0) / C1 *
           std::pow(0.5 - d, -s0);
  a.eta3 = C2 * std::pow(3.0 + 8.0 * d, s0);
  a.eta4 = C1 * std::pow(2.0, -s0);
  a.m = packing_base_m(C1, C2, s0);
  // every next-level center sits within 2 m^-k of a current A_sigma, so a
  // volume count of disjoint m^-(k+1) balls inside a ball of radius
  // (2 + 1/m + 2/m) m^-k gives phi_{k+1} <= (2m+1)^q phi_k
  a.N = opts.N_override
            ? *opts.N_override
            : (long long)std::llround(std::pow(2.0 * a.m + 1.0, q));
  return a;
}

PackingMassReport verify_packing_mass(const Packing& packing,
                                      const DiscretizedMeasure& dm,
                                      const ADProfile& profile) {
  PackingMassReport rep;
  rep.eta1_hat = profile.c1_hat / profile.c2_hat;
  rep.eta2_hat = std::pow(profile.c2_hat / profile.c1_hat, 2.0) *
                 std::pow(2.0, profile.s0);
  const double phi = (double)packing.phi();
  rep.pass = true;
  for (std::size_t s = 0; s < packing.phi(); ++s) {
    Interval A = packing.A(s);
    double v = phi * dm.mass_in(A.lo, A.hi);
    rep.values.push_back(v);
    if (!(v >= rep.eta1_hat - 1e-12 && v <= rep.eta2_hat + 1e-12))
      rep.pass = false;
  }
  return rep;
}

}  // namespace gmq
