#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmq/covering.hpp"
#include "gmq/interval_set.hpp"
#include "gmq/measure.hpp"
#include "gmq/quantizer.hpp"
#include "gmq/voronoi.hpp"

namespace gmq {

// --- regions ---------------------------------------------------------------

enum class RegionKind { D1, D2, D3, D4, F1, F2, F3, G, Ha };

struct RegionParams {
  std::size_t omega = 0;
  std::optional<std::size_t> sigma;  // subtracted ball for D2 / added for F2
  std::optional<std::size_t> tau;    // far ball for F3; tau_0 override for G
  std::optional<double> x0;          // removed-ball center for D1/F1
  std::optional<double> a;           // code point for G / Ha
};

struct RegionSpec {
  RegionKind kind = RegionKind::D3;
  std::string label;
  IntervalSet set;
  std::vector<double> points;  // only for Ha: the code points of H(a)
  double mass = 0.0;
  double diameter = 0.0;
};

// Resolves the set algebra for the requested kind into a canonical disjoint
// interval list. delta is taken from the graph. Throws std::runtime_error on
// an empty (zero-mass) region.
RegionSpec build_region(RegionKind kind, const Packing& packing,
                        const NeighborGraph& graph, const Codebook& cb,
                        const DiscretizedMeasure& dm,
                        const RegionParams& params = {});

// The support point of A_omega farthest from the codebook (the adversarial
// x0 choice for D1).
double farthest_support_point(const DiscretizedMeasure& dm,
                              const Interval& window, const Codebook& cb);

// |I(B, alpha) - (mu(B) log|B| + mu(B) I_{nu_B}(f_B(alpha)))|; an exact
// change-of-variables identity, so the residual is numerical noise only.
double rescaling_identity_check(const DiscretizedMeasure& dm,
                                const RegionSpec& region, const Codebook& cb);

// --- gap report ------------------------------------------------------------

struct GapRow {
  int k = 0;
  double ehat = 0.0;    // e-hat_k
  double gap = 0.0;     // e-hat_{k-1} - e-hat_k, defined for k >= 2
  double zeta = 0.0;    // closed-form lower bound
  double chi = 0.0;     // closed-form upper bound
  double dmin = 0.0;    // min cell mass of the computed k-optimal codebook
  double dmax = 0.0;    // max cell mass
  double lambda = 0.0;  // min pairwise code distance, k >= 2
  // diagnostics from the same chain of definitions
  double delta_k1 = 0.0, delta_k2 = 0.0, delta_k = 0.0, delta_k3 = 0.0;
  long long l_k = 0, N_k = 0;
  double eta_k = 0.0;
  double s_k = 0.0, g_k = 0.0;  // separation scale and its third
  double dlow_bound = 0.0;      // closed-form floor under dmin
  double dbar_bound = 0.0;      // closed-form cap on dmax
  bool gap_pass = true;         // zeta <= gap <= chi (k >= 2)
  bool pigeonhole_pass = true;  // dmin <= 1/k <= dmax
};

struct GapReport {
  double C = 1.0;  // Hoelder constant used for the closed forms
  double t = 1.0;  // Hoelder exponent (the profile s0)
  double rescale_ratio = 1.0;
  std::vector<GapRow> rows;  // k = 1..k_max
  bool pass = false;
};

// Rescales so the support diameter is <= 1, computes the DP error curve and
// the per-k bound chain with (C, t) taken from the profile.
GapReport gap_report(const DiscretizedMeasure& dm, int k_max,
                     const ADProfile& profile, const DpOptions& opts = {});

// --- auxiliary integers ------------------------------------------------------

struct AuxBudget {
  int n_cap = 128;      // largest n probed by any scan
  int cell_cap = 320;   // conditional measures re-aggregated to <= this many cells
  std::optional<int> n_ref;  // reference codebook size (default 3 * phi, capped)
};

struct AuxFinding {
  std::string name;
  bool found = false;
  long long value = 0;
  // worst (largest) lhs - rhs over regions, minimized over probed n
  double best_margin = 0.0;
  long long best_n = 0;
  std::string note;  // "", "budget-exceeded", "blocked by ...", ...
};

struct AuxIntegerEstimate {
  AuxFinding n1, n2, n4;
  std::optional<long long> n3, n5;  // n3 = (n2+n0)N, n5 = M0*n4 when derivable
  int n_ref = 0;
  int probe_lo = 0, probe_hi = 0;
};

AuxIntegerEstimate estimate_aux_integers(const DiscretizedMeasure& dm,
                                         const Packing& packing,
                                         const NeighborGraph& graph,
                                         const AuxiliaryConstants& constants,
                                         const AuxBudget& budget = {});

// --- local counts and neighborhoods ----------------------------------------

struct LocalCountReport {
  int n = 0;
  int level_k = 0;
  bool regime_valid = false;      // (n0+n2) phi_k <= n < (n0+n2) phi_{k+1}
  bool regime_rule_exact = false; // n2 estimate was available for the rule
  bool level_flagged = false;     // level picked as closest feasible only
  long long L_c = 0;
  std::vector<long long> L_sigma;
  std::vector<double> sup_distance;   // per sigma, over support in A_sigma
  std::vector<double> delta_Asigma;   // thresholds delta |A_sigma|
  bool all_within_delta = false;
  bool counts_consistent = false;     // L_c + sum L_sigma >= n
};

LocalCountReport local_count_report(const DiscretizedMeasure& dm, int n,
                                    ErrorOrder r, const Packing& packing,
                                    const NeighborGraph& graph,
                                    const AuxiliaryConstants& constants,
                                    std::optional<std::size_t> phi_next = {},
                                    const DpOptions& opts = {});

struct NeighborhoodRecord {
  double a = 0.0;
  std::size_t sigma = (std::size_t)-1;  // leftmost owner; stray if none
  bool stray = false;
  IntervalSet G;
  double mu_G = 0.0;
  double G_diameter = 0.0;
  std::vector<double> H;  // code points of H(a)
  long long T_a = 0;
  bool containment = false;      // P_a intersect support subset of G(a), exact
  bool chain_ok = false;         // |A_tau0| <= |G| <= (5+16 delta)|A_tau0|
  bool mass_band_ok = false;     // eta4 (5+16d)^-s0 |G|^s0 <= mu(G) <= eta3 |G|^s0
  bool T_in_range = false;       // against [n1, n5] when available, else T >= 1
};

struct NeighborhoodReport {
  std::vector<NeighborhoodRecord> records;
  bool all_contained = false;
  bool all_bands = false;
};

NeighborhoodReport neighborhood_report(const DiscretizedMeasure& dm, int n,
                                       const Packing& packing,
                                       const NeighborGraph& graph,
                                       const AuxiliaryConstants& constants,
                                       const DpOptions& opts = {});

// --- theorem band ------------------------------------------------------------

struct TheoremReport {
  MassBand band;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double slack = 2.0;
  bool pass = false;
};

// pass iff d1 > 0, d3 > 0 and the top quartile of n attains the band extremes
// within the slack factor (no drift).
TheoremReport theorem_report(const DiscretizedMeasure& dm, int n_lo, int n_hi,
                             ErrorOrder r, double slack = 2.0,
                             const DpOptions& opts = {});

// --- inheritance -------------------------------------------------------------

struct InheritanceRecord {
  double a = 0.0;
  double optimal = 0.0;       // minimizer nearest a among the global argmin
  double displacement = 0.0;  // |optimal - a|
  double objective_residual = 0.0;  // value gap against the global optimum
};

struct InheritanceReport {
  std::vector<InheritanceRecord> records;
  double max_displacement = 0.0;
  double max_residual = 0.0;
};

// Every point of an n-optimal set must be the 1-optimal point of its own
// Voronoi cell's conditional measure.
InheritanceReport optimality_inheritance_check(const DiscretizedMeasure& dm,
                                               int n, ErrorOrder r,
                                               const DpOptions& opts = {});

}  // namespace gmq
