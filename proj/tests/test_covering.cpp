#include <cmath>
#include <vector>

#include "doctest.h"
#include "gmq/covering.hpp"
#include "gmq/errors.hpp"
#include "gmq/measure.hpp"

using namespace gmq;

namespace {

MeasureModel cantor_model() {
  return MeasureModel::ifs({{1.0 / 3.0, 0.0, 0.5}, {1.0 / 3.0, 2.0 / 3.0, 0.5}});
}

ADProfile cantor_profile(const DiscretizedMeasure& dm) {
  double s0 = std::log(2.0) / std::log(3.0);
  std::vector<double> grid;
  for (double e = 0.25; e > 4 * dm.max_cell_width() * 4; e /= 2)
    grid.push_back(e);
  return ad_validate(dm, s0, grid, 256);
}

ADProfile ideal_profile(double s0) {
  ADProfile p;
  p.s0 = s0;
  p.c1_hat = 1.0;
  p.c2_hat = 1.0;
  p.eps0_hat = 0.5;
  return p;
}

}  // namespace

TEST_CASE("max packing closed counts") {
  auto u = discretize(MeasureModel::uniform(0, 1), 10);
  CHECK(max_packing_1d(u, 0.5).size() == 1);
  CHECK(max_packing_1d(u, 0.125).size() == 4);
  auto c = discretize(cantor_model(), 6);
  auto two = max_packing_1d(c, 1.0 / 3.0);
  REQUIRE(two.size() == 2);
  // one center per branch; the greedy sweep picks the leftmost admissible
  // point of the right branch, just past 2/3
  CHECK(two[0] < 0.05);
  CHECK(two[1] > 2.0 / 3.0 - 1e-9);
  CHECK(two[1] - two[0] > 2.0 / 3.0);
  CHECK_THROWS_AS(max_packing_1d(u, 0.0), std::invalid_argument);
}

TEST_CASE("packing centers are pairwise separated and in the support") {
  auto c = discretize(cantor_model(), 8);
  for (double r : {1.0 / 9.0, 1.0 / 27.0, 1.0 / 81.0}) {
    auto centers = max_packing_1d(c, r);
    CHECK(centers.size() >= 2);
    for (std::size_t i = 1; i < centers.size(); ++i)
      CHECK(centers[i] - centers[i - 1] > 2.0 * r);
    auto support = c.support_set();
    for (double x : centers) CHECK(support.contains(x));
  }
}

TEST_CASE("packing base from the profile constants") {
  CHECK(packing_base_m(1.0, 1.0, 0.7) == 3);  // smallest integer > 2
  CHECK(packing_base_m(1.0, 1.0, 1.0) == 3);
  // C2/C1 = 4, s0 = 1 -> smallest integer > 8 is 9
  CHECK(packing_base_m(0.5, 2.0, 1.0) == 9);
  // Cantor-like: ratio 2.24, s0 = ln2/ln3 -> 2 * 2.24^1.585 ~ 7.2 -> 8
  CHECK(packing_base_m(1.0, 2.24, std::log(2.0) / std::log(3.0)) == 8);
}

TEST_CASE("build_packing respects the discretization floor") {
  auto c = discretize(cantor_model(), 4);  // cell width 1/81
  auto prof = ideal_profile(std::log(2.0) / std::log(3.0));
  CHECK_NOTHROW(build_packing(c, prof, 4, 3));   // 3^-4 = 1/81, at the floor
  CHECK_THROWS_AS(build_packing(c, prof, 5, 3), ConfigError);
}

TEST_CASE("packing invariants on the Cantor family") {
  auto c = discretize(cantor_model(), 9);
  auto prof = cantor_profile(c);
  auto family = packing_family(c, prof, 1, 5, 3);
  REQUIRE(family.size() == 5);
  std::size_t prev_phi = 0;
  for (const auto& p : family) {
    CHECK(p.m == 3);
    // E_sigma pairwise disjoint
    for (std::size_t i = 1; i < p.centers.size(); ++i)
      CHECK(p.centers[i] - p.centers[i - 1] > 2.0 * p.radius);
    // support covered by the A_sigma
    IntervalSet cover;
    for (std::size_t s = 0; s < p.phi(); ++s)
      cover = cover.unite(IntervalSet(p.A(s).lo, p.A(s).hi));
    for (const auto& cell : c.cells()) CHECK(cover.contains(cell.mid()));
    // phi strictly increases with the level
    CHECK(p.phi() > prev_phi);
    prev_phi = p.phi();
  }
  // level-1 balls of radius 1/3 on the Cantor set: exactly the two branches
  CHECK(family[0].phi() == 2);
  // growth bound phi_{k+1} <= N phi_k with N = (2m+1)^q = 7
  for (std::size_t i = 1; i < family.size(); ++i)
    CHECK(family[i].phi() <= 7 * family[i - 1].phi());
}

TEST_CASE("degenerate single-ball packing") {
  auto u = discretize(MeasureModel::uniform(0, 1), 8);
  auto prof = ideal_profile(1.0);
  // 2 m^-k = 1 >= diameter, so a second disjoint ball cannot fit
  auto p = build_packing(u, prof, 1, 2);
  CHECK(p.phi() == 1);
  auto g = neighbor_graph(p, 1.0 / 16.0);
  REQUIRE(g.M.size() == 1);
  CHECK(g.M[0] == 1);
  CHECK(g.neighbors[0] == std::vector<std::size_t>{0});
}

TEST_CASE("far-separated balls are not neighbors") {
  Packing p;
  p.m = 3;
  p.k = 2;
  p.radius = 1.0 / 9.0;
  p.centers = {0.1, 5.0};
  auto g = neighbor_graph(p, 1.0 / 16.0);
  CHECK(g.M[0] == 1);
  CHECK(g.M[1] == 1);
  // touching enlargements: sigma in A_sigma always
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(g.a_star[s].contains(p.centers[s]));
    CHECK(std::count(g.neighbors[s].begin(), g.neighbors[s].end(), s) == 1);
  }
}

TEST_CASE("neighbor counts against the closed-form cap") {
  auto c = discretize(cantor_model(), 9);
  auto prof = ideal_profile(std::log(2.0) / std::log(3.0));
  for (int k : {2, 3, 4}) {
    auto p = build_packing(c, prof, k, 3);
    auto g = neighbor_graph(p, 1.0 / 16.0);
    // M0 at delta = 1/16, q = 1: [8 * (1 + 1/8)] + 1 = 10
    for (auto M : g.M) CHECK(M <= 10);
    // the neighborhood union contains the ball's own A_sigma
    for (std::size_t s = 0; s < p.phi(); ++s) {
      CHECK(g.a_star[s].contains(
          IntervalSet(p.A(s).lo, p.A(s).hi), 1e-12));
    }
  }
}

TEST_CASE("greedy covers verify and respect 1-D counts") {
  std::vector<double> cand;
  for (int i = 0; i <= 256; ++i) cand.push_back(i / 256.0);
  auto c1 = greedy_cover(IntervalSet(0.0, 1.0), 0.5, cand);
  CHECK(c1.count() >= 1);
  CHECK(c1.count() <= 2);
  auto c2 = greedy_cover(IntervalSet(0.0, 1.0), 0.125, cand);
  CHECK(c2.count() <= 9);
  // covering a split target works too
  auto gap = IntervalSet::from_pieces({{0.0, 0.3}, {0.7, 1.0}});
  auto c3 = greedy_cover(gap, 0.1, cand);
  CHECK(c3.count() <= 8);
}

TEST_CASE("cover kinds stay under the closed-form count bounds") {
  // idealized delta = 1/16 gives L0 = 42, L1 = 34, L2 = 6, n0 = 66
  auto c = discretize(cantor_model(), 9);
  auto prof = ideal_profile(std::log(2.0) / std::log(3.0));
  auto p = build_packing(c, prof, 2, 3);
  double delta = 1.0 / 16.0;
  for (std::size_t s = 0; s < p.phi(); ++s) {
    auto b = cover_B_sigma(p, s, delta);
    CHECK(b.count() >= 1);
    CHECK(b.count() <= 42);
    auto g = cover_gamma_E(p, s, delta);
    CHECK(g.count() <= 34);
    auto h = cover_H_sigma(p, s, delta);
    CHECK(h.count() <= 66);
    auto gx = cover_G_x(p, p.centers[s], delta);
    CHECK(gx.count() <= 6);
  }
}

TEST_CASE("constants at the idealized profile") {
  auto k = constants_from(1.0, 1.0, std::log(2.0) / std::log(3.0), 1);
  CHECK(k.delta == doctest::Approx(1.0 / 16.0));
  CHECK(k.L0 == 42);
  CHECK(k.L1 == 34);
  CHECK(k.L2 == 6);
  CHECK(k.n0 == 66);
  CHECK(k.M0 == 10);
  CHECK(k.eta1 == doctest::Approx(1.0));
  CHECK(k.eta2 ==
        doctest::Approx(std::pow(2.0, std::log(2.0) / std::log(3.0))));
  CHECK(k.m == 3);
  CHECK(k.N == 7);  // (2m+1)^q
  CHECK(k.zeta >= k.xi);
  CHECK(!k.n1.has_value());

  auto one = constants_from(1.0, 1.0, 1.0, 1);
  CHECK(one.eta2 == doctest::Approx(2.0));

  auto half = constants_from(1.0, 2.0, 1.0, 1);
  CHECK(half.delta == doctest::Approx(1.0 / 32.0));
  CHECK(half.M0 == 9);  // [8 * (1 + 1/16)] + 1

  CHECK_THROWS_AS(constants_from(2.0, 1.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(constants_from(1.0, 1.0, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(constants_from(1.0, 1.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("eta3/eta4 bracket the idealized ball masses") {
  auto k = constants_from(1.0, 1.0, 0.7, 1);
  CHECK(k.eta3 == doctest::Approx(std::pow(3.0 + 8.0 / 16.0, 0.7)));
  CHECK(k.eta4 == doctest::Approx(std::pow(2.0, -0.7)));
  CHECK(k.eta4 < 1.0);
  CHECK(k.eta3 > 1.0);
}

TEST_CASE("delta override is range-checked") {
  ConstantsOptions o;
  o.delta_override = 0.2;  // above 1/16
  CHECK_THROWS_AS(constants_from(1.0, 1.0, 1.0, 1, o), std::invalid_argument);
  o.delta_override = 0.01;
  auto k = constants_from(1.0, 1.0, 1.0, 1, o);
  CHECK(k.delta == doctest::Approx(0.01));
  o.N_override = 99;
  CHECK(constants_from(1.0, 1.0, 1.0, 1, o).N == 99);
}

TEST_CASE("packing mass band on the Cantor measure") {
  auto c = discretize(cantor_model(), 12);
  auto prof = cantor_profile(c);
  for (int k : {2, 3, 4}) {
    auto p = build_packing(c, prof, k, 3);
    auto rep = verify_packing_mass(p, c, prof);
    CHECK(rep.pass);
    REQUIRE(rep.values.size() == p.phi());
    for (double v : rep.values) {
      CHECK(v >= rep.eta1_hat - 1e-12);
      CHECK(v <= rep.eta2_hat + 1e-12);
    }
  }
}

TEST_CASE("packing mass band on the uniform measure") {
  auto u = discretize(MeasureModel::uniform(0, 1), 12);
  std::vector<double> grid = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  auto prof = ad_validate(u, 1.0, grid, 128);
  auto p = build_packing(u, prof, 2, 3);
  auto rep = verify_packing_mass(p, u, prof);
  CHECK(rep.pass);
  double lo = prof.c1_hat / prof.c2_hat;
  double hi = std::pow(prof.c2_hat / prof.c1_hat, 2.0) * 2.0;
  for (double v : rep.values) {
    CHECK(v >= lo - 1e-9);
    CHECK(v <= hi + 1e-9);
  }
}

TEST_CASE("single-ball mass is total") {
  auto u = discretize(MeasureModel::uniform(0, 1), 8);
  auto prof = ideal_profile(1.0);
  auto p = build_packing(u, prof, 1, 2);
  REQUIRE(p.phi() == 1);
  auto rep = verify_packing_mass(p, u, prof);
  CHECK(rep.values[0] == doctest::Approx(1.0).epsilon(1e-9));
}
