#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gmq/measure.hpp"
#include "gmq/quantizer.hpp"
#include "gmq/voronoi.hpp"

using namespace gmq;

namespace {

MeasureModel cantor_model() {
  return MeasureModel::ifs({{1.0 / 3.0, 0.0, 0.5}, {1.0 / 3.0, 2.0 / 3.0, 0.5}});
}

double fragment_mass(const std::vector<MassCell>& frags) {
  double m = 0.0;
  for (const auto& f : frags) m += f.mass;
  return m;
}

}  // namespace

TEST_CASE("two-point uniform partition splits at the midpoint") {
  auto u = discretize(MeasureModel::uniform(0, 1), 8);
  auto p = build_partition(u, Codebook({0.25, 0.75}));
  REQUIRE(p.breakpoints.size() == 1);
  CHECK(p.breakpoints[0] == doctest::Approx(0.5));
  REQUIRE(p.fragments.size() == 2);
  CHECK(fragment_mass(p.fragments[0]) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fragment_mass(p.fragments[1]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("single point owns everything") {
  auto u = discretize(MeasureModel::uniform(0, 1), 6);
  auto p = build_partition(u, Codebook({0.5}));
  CHECK(p.breakpoints.empty());
  REQUIRE(p.fragments.size() == 1);
  CHECK(fragment_mass(p.fragments[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a straddling cell is split proportionally") {
  DiscretizedMeasure dm({{0.0, 0.45, 0.3}, {0.45, 0.55, 0.4}, {0.55, 1.0, 0.3}},
                        0);
  auto p = build_partition(dm, Codebook({0.3, 0.7}));
  // breakpoint 0.5 cuts the middle cell into two mass-0.2 fragments
  double left = fragment_mass(p.fragments[0]);
  CHECK(left == doctest::Approx(0.3 + 0.2).epsilon(1e-12));
  CHECK(fragment_mass(p.fragments[1]) == doctest::Approx(0.5).epsilon(1e-12));
  bool found = false;
  for (const auto& f : p.fragments[0])
    if (std::abs(f.lo - 0.45) < 1e-12 && std::abs(f.hi - 0.5) < 1e-12) {
      found = true;
      CHECK(f.mass == doctest::Approx(0.2).epsilon(1e-12));
    }
  CHECK(found);
}

TEST_CASE("partition completeness over random codebooks") {
  auto c = discretize(cantor_model(), 8);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + (int)(u(rng) * 5.8);
    std::vector<double> pts;
    while ((int)pts.size() < n) {
      double x = u(rng);
      bool dup = false;
      for (double q : pts) dup = dup || std::abs(q - x) < 1e-9;
      if (!dup) pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    auto p = build_partition(c, Codebook(pts));
    double total = 0.0;
    for (const auto& frags : p.fragments) total += fragment_mass(frags);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("assignment is exact nearest-point with leftmost ties") {
  auto c = discretize(cantor_model(), 8);
  std::vector<double> pts{0.11, 0.4, 0.62, 0.9};
  auto p = build_partition(c, Codebook(pts));
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
  int checked = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const auto& cell = c.cells()[pick(rng)];  // draw from the support
    double x = cell.lo + u(rng) * cell.width();
    // locate x's owner in the fragment lists
    int owner = -1;
    for (std::size_t i = 0; i < p.fragments.size() && owner < 0; ++i)
      for (const auto& f : p.fragments[i])
        if (x >= f.lo && x < f.hi) {
          owner = (int)i;
          break;
        }
    if (owner < 0) continue;  // exactly on a seam
    ++checked;
    double dbest = 1e300;
    int best = -1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = std::abs(x - pts[i]);
      if (d < dbest - 1e-15) {
        dbest = d;
        best = (int)i;
      }
    }
    CHECK(owner == best);
  }
  CHECK(checked > 9900);
  // exact tie at a breakpoint goes to the left index
  double tie = 0.5 * (0.11 + 0.4);
  auto dists = voronoi_breakpoints(Codebook(pts));
  CHECK(dists[0] == doctest::Approx(tie));
}

TEST_CASE("cell stats on the closed uniform cases") {
  auto u = discretize(MeasureModel::uniform(0, 1), 8);
  auto p = build_partition(u, Codebook({0.25, 0.75}));
  auto st = cell_stats(p, u);
  REQUIRE(st.cells.size() == 2);
  CHECK(st.cells[0].mass == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st.n_min_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.n_max_mass == doctest::Approx(1.0).epsilon(1e-12));
  // inradius: half-gap 0.25, support diameter of each half 0.5, ratio 0.5
  CHECK(st.cells[0].inradius == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(st.cells[0].support_diameter == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(st.min_ratio == doctest::Approx(0.5).epsilon(1e-6));

  auto single = build_partition(u, Codebook({0.5}));
  auto sst = cell_stats(single, u);
  CHECK(sst.cells[0].inradius == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sst.cells[0].support_diameter == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sst.cells[0].ratio == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("inradius ball never touches another owner's fragment") {
  auto c = discretize(cantor_model(), 8);
  auto dp = dp_optimal_1d(c, 5, ErrorOrder{});
  auto p = build_partition(c, dp.codebook);
  auto st = cell_stats(p, c);
  for (std::size_t i = 0; i < st.cells.size(); ++i) {
    double a = st.cells[i].point, r = st.cells[i].inradius;
    for (std::size_t j = 0; j < p.fragments.size(); ++j) {
      if (j == i) continue;
      for (const auto& f : p.fragments[j]) {
        // closed ball B(a, r) must miss the open interior of foreign cells
        CHECK((f.hi <= a - r + 1e-12 || f.lo >= a + r - 1e-12));
      }
    }
  }
}

TEST_CASE("point outside its own fragments is flagged, not crashed") {
  // a deliberately bad codebook: the second point sits in a support gap of
  // the Cantor measure and owns nothing nearby on one side
  auto c = discretize(cantor_model(), 6);
  auto p = build_partition(c, Codebook({0.16, 0.45, 0.5}));
  auto st = cell_stats(p, c);
  bool any_flag = false;
  for (const auto& cs : st.cells) any_flag = any_flag || cs.point_outside_fragments;
  // the middle point owns [0.305, 0.475]-ish fragments; 0.45 is inside, but
  // 0.5's region is [0.475, ...] intersect support which starts at 2/3 --> the
  // owner 0.5 lies outside its fragment hull
  CHECK(any_flag);
  double total = 0.0;
  for (const auto& frags : p.fragments) total += fragment_mass(frags);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetric optimal codebooks give palindromic masses") {
  // odd n on the Cantor measure has asymmetric mirror-twin optima (n = 3
  // splits masses 1/4, 1/4, 1/2), so the palindrome claim is conditional on
  // the returned codebook being symmetric; the unconditional symmetric-measure
  // invariant is that the mirrored codebook achieves the same objective
  auto c = discretize(cantor_model(), 8);
  for (int n : {2, 3, 4}) {
    auto dp = dp_optimal_1d(c, n, ErrorOrder{});
    const auto& pts = dp.codebook.points;
    bool symmetric = true;
    for (int i = 0; i < n; ++i)
      symmetric = symmetric && std::abs(pts[i] + pts[n - 1 - i] - 1.0) < 1e-6;
    auto st = cell_stats(build_partition(c, dp.codebook), c);
    if (symmetric) {
      for (int i = 0; i < n; ++i)
        CHECK(st.cells[i].mass ==
              doctest::Approx(st.cells[n - 1 - i].mass).epsilon(1e-6));
    }
    std::vector<double> mirror(n);
    for (int i = 0; i < n; ++i) mirror[i] = 1.0 - pts[n - 1 - i];
    CHECK(distortion(c, Codebook(mirror), ErrorOrder{}) ==
          doctest::Approx(dp.objective).epsilon(1e-10));
  }
  auto u = discretize(MeasureModel::uniform(0, 1), 10);
  auto dp4 = dp_optimal_1d(u, 4, ErrorOrder{});
  auto st4 = cell_stats(build_partition(u, dp4.codebook), u);
  for (int i = 0; i < 4; ++i)
    CHECK(st4.cells[i].mass ==
          doctest::Approx(st4.cells[3 - i].mass).epsilon(1e-6));
}

TEST_CASE("Cantor two-point masses split evenly") {
  auto c = discretize(cantor_model(), 8);
  auto dp = dp_optimal_1d(c, 2, ErrorOrder{});
  auto st = cell_stats(build_partition(c, dp.codebook), c);
  CHECK(st.cells[0].mass == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(st.cells[1].mass == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(st.n_min_mass == doctest::Approx(st.n_max_mass).epsilon(1e-6));
}

TEST_CASE("mass band: uniform stays pinned at 1") {
  auto u = discretize(MeasureModel::uniform(0, 1), 10);
  auto band = mass_band(u, 1, 8, ErrorOrder{});
  REQUIRE(band.rows.size() == 8);
  for (const auto& row : band.rows) {
    CHECK(row.n_min_mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(row.n_max_mass == doctest::Approx(1.0).epsilon(1e-3));
  }
  CHECK(band.d1 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(band.d2 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(band.d3 > 0.4);
}

TEST_CASE("mass band rows carry the matching error curve") {
  auto c = discretize(cantor_model(), 7);
  auto band = mass_band(c, 1, 5, ErrorOrder{});
  auto curve = error_curve(c, 5, ErrorOrder{});
  REQUIRE(band.rows.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(band.rows[i].n == i + 1);
    CHECK(band.rows[i].error ==
          doctest::Approx(curve[i].error).epsilon(1e-10));
  }
  // n = 1 carries all mass exactly
  CHECK(band.rows[0].n_min_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(band.rows[0].n_max_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duplicate code points are rejected") {
  auto u = discretize(MeasureModel::uniform(0, 1), 4);
  CHECK_THROWS(build_partition(u, Codebook({0.25, 0.25 + 1e-18, 0.75})));
}
