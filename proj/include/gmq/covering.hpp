#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmq/interval_set.hpp"
#include "gmq/measure.hpp"

namespace gmq {

// Maximum packing at one scale: E_sigma = B(c, m^-k) pairwise disjoint with
// centers in the discretized support, A_sigma = B(c, 2 m^-k).
struct Packing {
  int m = 0;
  int k = 0;
  int k0 = 0;          // smallest level with 2 m^-k below the profile's eps0
  double radius = 0.0; // m^-k
  std::vector<double> centers;

  std::size_t phi() const { return centers.size(); }
  Interval E(std::size_t s) const {
    return {centers[s] - radius, centers[s] + radius};
  }
  Interval A(std::size_t s) const {
    return {centers[s] - 2.0 * radius, centers[s] + 2.0 * radius};
  }
  double E_diameter() const { return 2.0 * radius; }
  double A_diameter() const { return 4.0 * radius; }
};

// Greedy leftmost sweep over support cell midpoints; pairwise center
// distance strictly greater than 2*radius. Exact maximum in 1-D.
std::vector<double> max_packing_1d(const DiscretizedMeasure& dm, double radius);

Packing build_packing(const DiscretizedMeasure& dm, const ADProfile& profile,
                      int k, std::optional<int> m_override = {});

std::vector<Packing> packing_family(const DiscretizedMeasure& dm,
                                    const ADProfile& profile, int k_lo,
                                    int k_hi,
                                    std::optional<int> m_override = {});

struct NeighborGraph {
  double delta = 0.0;
  std::vector<std::vector<std::size_t>> neighbors;  // sorted tau lists
  std::vector<std::size_t> M;                       // M_sigma = card
  std::vector<IntervalSet> a_star;                  // union of A_tau
};

NeighborGraph neighbor_graph(const Packing& packing, double delta);

struct CoverSet {
  std::string kind;
  double radius = 0.0;
  std::vector<double> centers;
  std::size_t count() const { return centers.size(); }
};

// Packs half-radius balls greedily over the candidate centers inside the
// target, doubles the radii, then verifies coverage on a probe grid of pitch
// radius/16. Throws std::runtime_error naming the uncovered probe on failure.
CoverSet greedy_cover(const IntervalSet& target, double radius,
                      const std::vector<double>& candidates,
                      const std::string& kind = "cover");

// Candidate lattice of the given pitch over each piece of the target,
// endpoints included.
std::vector<double> grid_candidates(const IntervalSet& target, double pitch);

CoverSet cover_B_sigma(const Packing& p, std::size_t sigma, double delta);
CoverSet cover_gamma_E(const Packing& p, std::size_t sigma, double delta);
CoverSet cover_G_x(const Packing& p, double x, double delta);
CoverSet cover_H_sigma(const Packing& p, std::size_t sigma, double delta);

struct AuxiliaryConstants {
  double c1 = 1.0, c2 = 1.0, s0 = 1.0;
  int q = 1;
  double delta = 0.0;
  long long L0 = 0, L1 = 0, L2 = 0, n0 = 0, M0 = 0;
  double eta1 = 0.0, eta2 = 0.0;
  double xi = 0.0, zeta = 0.0;
  double eta3 = 0.0, eta4 = 0.0;
  int m = 0;          // packing base
  long long N = 0;    // phi_{k+1} <= N phi_k
  // filled by analysis::estimate_aux_integers
  std::optional<long long> n1, n2, n3, n4, n5;
};

struct ConstantsOptions {
  std::optional<double> delta_override;
  std::optional<long long> N_override;
};

AuxiliaryConstants constants_from(double C1, double C2, double s0, int q,
                                  const ConstantsOptions& opts = {});

int packing_base_m(double C1, double C2, double s0);

struct PackingMassReport {
  std::vector<double> values;  // phi_k * mu(A_sigma)
  double eta1_hat = 0.0;
  double eta2_hat = 0.0;
  bool pass = false;
};

// Lemma-style band check with the empirical profile constants, not the
// idealized ones.
PackingMassReport verify_packing_mass(const Packing& packing,
                                      const DiscretizedMeasure& dm,
                                      const ADProfile& profile);

}  // namespace gmq
