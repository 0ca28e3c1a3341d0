#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "metastab/landscape.hpp"

using namespace metastab;

namespace {

Potential make(const char* src, Domain d) { return Potential::parse(src, d); }

int count_kind(const std::vector<CriticalPoint>& pts, PointKind k) {
  int n = 0;
  for (const auto& p : pts) n += p.kind == k;
  return n;
}

}  // namespace

TEST_CASE("quartic critical points") {
  const auto pot = fixtures::symmetric_quartic();
  const auto pts = locate_critical_points(pot, 64);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].x[0] == doctest::Approx(-1).epsilon(1e-14));
  CHECK(pts[0].kind == PointKind::minimum);
  CHECK(pts[0].value == doctest::Approx(0).epsilon(1e-20));
  CHECK(pts[1].x[0] == doctest::Approx(0).scale(1));
  CHECK(pts[1].kind == PointKind::saddle);
  CHECK(*pts[1].negative_eigenvalue == doctest::Approx(-4));
  CHECK(pts[2].x[0] == doctest::Approx(1).epsilon(1e-14));
  const double gscale = 1 + std::sqrt(pot.max_probe_grad_sq(64));
  for (const auto& p : pts) CHECK(p.grad_norm <= 1e-10 * gscale);
}

TEST_CASE("quadratic bowl has one minimum") {
  const auto pot = make("x^2+y^2", Domain::rectangle(-1, 1, -1, 1));
  const auto pts = locate_critical_points(pot, 32);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].kind == PointKind::minimum);
  CHECK(std::abs(pts[0].x[0]) < 1e-12);
  CHECK(std::abs(pts[0].x[1]) < 1e-12);
}

TEST_CASE("separable double well in 2D") {
  const auto pot = make("(x^2-1)^2+2.5*y^2", Domain::rectangle(-1.3, 1.3, -1, 1));
  const auto pts = locate_critical_points(pot, 64);
  REQUIRE(pts.size() == 3);
  CHECK(count_kind(pts, PointKind::minimum) == 2);
  CHECK(count_kind(pts, PointKind::saddle) == 1);
  const auto& s = pts[1];
  CHECK(s.kind == PointKind::saddle);
  CHECK(std::abs(s.x[0]) < 1e-12);
  CHECK(*s.negative_eigenvalue == doctest::Approx(-4));
  CHECK(s.hess_det == doctest::Approx(-20));
}

TEST_CASE("degenerate critical point is a Morse violation") {
  const auto pot = make("x^4", Domain::interval(-1, 1.5));
  CHECK_THROWS_AS(locate_critical_points(pot, 32), LandscapeError);
}

TEST_CASE("boundary saddles of the quartic") {
  const auto sym = locate_boundary_saddles(fixtures::symmetric_quartic());
  REQUIRE(sym.size() == 2);
  for (const auto& z : sym) {
    CHECK(z.normal_derivative == doctest::Approx(3.588).epsilon(1e-13));
    CHECK(z.tangential_det == 1.0);
  }
  const auto asym = locate_boundary_saddles(make("(x^2-1)^2", Domain::interval(-1.3, 1.5)));
  REQUIRE(asym.size() == 2);
  CHECK(asym[0].x[0] == -1.3);
  CHECK(asym[0].normal_derivative == doctest::Approx(3.588).epsilon(1e-13));
  CHECK(asym[1].x[0] == 1.5);
  CHECK(asym[1].normal_derivative == doctest::Approx(7.5).epsilon(1e-13));
}

TEST_CASE("boundary saddles on the disk") {
  // f = x has its boundary minimum at (-1, 0) where the gradient points inward,
  // so there is no generalized saddle.
  CHECK(locate_boundary_saddles(make("x", Domain::disk(0, 0, 1))).empty());

  // (x-1/2)^2 + 2y^2: minima of the trace at (1,0) and (-1,0), both with outward gradient.
  const auto z = locate_boundary_saddles(make("(x-0.5)^2 + 2*y^2", Domain::disk(0, 0, 1)));
  REQUIRE(z.size() == 2);
  CHECK(z[0].x[0] == doctest::Approx(-1));
  CHECK(std::abs(z[0].x[1]) < 1e-10);
  CHECK(z[0].normal_derivative == doctest::Approx(3));
  CHECK(z[0].tangential_det == doctest::Approx(1));
  CHECK(z[1].x[0] == doctest::Approx(1));
  CHECK(z[1].normal_derivative == doctest::Approx(1));
  CHECK(z[1].tangential_det == doctest::Approx(3));
}

TEST_CASE("vanishing gradient on the boundary is rejected") {
  CHECK_THROWS_AS(locate_boundary_saddles(make("(x^2-1)^2", Domain::interval(-1, 2))), LandscapeError);
}

TEST_CASE("symmetric quartic decomposition") {
  const auto r = analyze_landscape(fixtures::symmetric_quartic());
  REQUIRE(r.pass);
  CHECK(r.H == doctest::Approx(0.4761).epsilon(1e-13));
  CHECK(r.wells.n1 == 1);
  CHECK(r.wells.n2 == 1);
  CHECK(r.wells.m3 == 0);
  CHECK(r.wells.n3 == 1);  // the inner barrier, above the threshold
  // C_1 = {(x^2-1)^2 < 0.4761} on the left: (-1.3, -sqrt(0.31)), reaching the endpoint
  const double lo = -1.3, hi = -std::sqrt(0.31);
  CHECK(r.well_at(EvalPoint(lo + 1e-6)) == 1);
  CHECK(r.well_at(EvalPoint(hi - 1e-6)) == 1);
  CHECK(r.well_at(EvalPoint(hi + 1e-6)) == 0);
  CHECK(r.well_at(EvalPoint(-lo - 1e-6)) == 2);
  CHECK(r.well_at(EvalPoint(-hi + 1e-6)) == 2);
  CHECK(r.well_at(EvalPoint(0.0)) == 0);
}

TEST_CASE("touching saddle decomposition") {
  const auto r = analyze_landscape(fixtures::touching_quartic());
  REQUIRE(r.pass);
  CHECK(r.H == doctest::Approx(1).epsilon(1e-13));
  CHECK(r.wells.m3 == 1);
  CHECK(r.wells.n3 == 1);
  const auto& z = r.points[static_cast<std::size_t>(r.wells.connecting[0])];
  CHECK(std::abs(z.x[0]) < 1e-12);
  CHECK(*z.negative_eigenvalue == doctest::Approx(-4));
  CHECK(r.well_at(EvalPoint(-1e-4)) == 1);
  CHECK(r.well_at(EvalPoint(1e-4)) == 2);
}

TEST_CASE("clipped wells on an asymmetric interval") {
  const auto pot = make("(x^2-1)^2", Domain::interval(-1.05, 1.3));
  const auto r = analyze_landscape(pot);
  CHECK(r.wells.threshold == doctest::Approx(std::pow(1.05 * 1.05 - 1, 2)).epsilon(1e-12));
  CHECK(r.wells.threshold == doctest::Approx(0.01051).epsilon(1e-3));
  // the right well sits strictly inside the domain, so it does not touch the boundary
  CHECK_FALSE(r.pass);
  CHECK(r.reason.find("C_2 does not touch") != std::string::npos);
}

TEST_CASE("double-well hypothesis failures") {
  const auto tilt = analyze_landscape(make("(x^2-1)^2+0.1*x", Domain::interval(-1.3, 1.3)));
  CHECK_FALSE(tilt.pass);
  CHECK(tilt.reason.find("not degenerate") != std::string::npos);
  const auto single = analyze_landscape(make("x^2", Domain::interval(-1, 1)));
  CHECK_FALSE(single.pass);
  CHECK(single.reason.find("exactly two local minima") != std::string::npos);
  // On the symmetric interval the tilted quartic leaves C_2 away from the boundary.
  const auto tilted_sym = analyze_landscape(make(fixtures::kTilted, Domain::interval(-1.3, 1.3)));
  CHECK_FALSE(tilted_sym.pass);
}

TEST_CASE("tilted quartic on its matched interval") {
  const auto r = analyze_landscape(fixtures::tilted_quartic());
  REQUIRE(r.pass);
  CHECK(r.H == doctest::Approx(0.69 * 0.69 * (1 - 0.39)).epsilon(1e-9));
  CHECK(r.minimum(1).hess_det == doctest::Approx(5.6));
  CHECK(r.minimum(2).hess_det == doctest::Approx(10.4));
}

TEST_CASE("two-contact rectangle") {
  const auto r = analyze_landscape(fixtures::two_contact());
  REQUIRE(r.pass);
  CHECK(r.H == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.wells.n1 == 2);
  CHECK(r.wells.n2 == 2);
  CHECK(r.wells.m3 == 0);
  // interior saddle at the origin plus the two top-edge generalized saddles
  CHECK(r.wells.n3 == 3);
  for (int w = 1; w <= 2; ++w) {
    for (int idx : r.contacts(w)) {
      const auto& z = r.saddles[static_cast<std::size_t>(idx)];
      const bool side = std::abs(std::abs(z.x[0]) - 3) < 1e-12;
      CHECK(z.normal_derivative == doctest::Approx(side ? 2.0 : 1.0));
      CHECK(z.tangential_det == doctest::Approx(1.0));
      CHECK((z.x[0] < 0) == (w == 1));
    }
  }
  const int total = static_cast<int>(r.saddles.size()) + static_cast<int>(r.wells.connecting.size() + r.wells.other_interior.size());
  CHECK(r.wells.n1 + r.wells.n2 + r.wells.n3 == total);
}

TEST_CASE("masks are disjoint and hold one minimum each") {
  for (const auto& pot : fixtures::bundled()) {
    const auto r = analyze_landscape(pot);
    REQUIRE(r.pass);
    CHECK(r.well_at(r.minimum(1).x) == 1);
    CHECK(r.well_at(r.minimum(2).x) == 2);
    int c1 = 0, c2 = 0;
    for (int l : r.wells.label) {
      c1 += l == 1;
      c2 += l == 2;
    }
    CHECK(c1 > 0);
    CHECK(c2 > 0);
  }
}

TEST_CASE("barrier height is resolution independent") {
  for (const auto& pot : fixtures::bundled()) {
    LandscapeOptions a, b;
    a.resolution = pot.dim() == 1 ? 512 : 256;
    b.resolution = 2 * a.resolution;
    const auto ra = analyze_landscape(pot, a), rb = analyze_landscape(pot, b);
    REQUIRE(ra.pass);
    REQUIRE(rb.pass);
    CHECK(std::abs(ra.H - rb.H) < 1e-9);
  }
}

TEST_CASE("adding a constant leaves the structure unchanged") {
  const auto a = analyze_landscape(fixtures::symmetric_quartic());
  const auto b = analyze_landscape(make("(x^2-1)^2 + 7", Domain::interval(-1.3, 1.3)));
  REQUIRE(b.pass);
  CHECK(b.H == doctest::Approx(a.H).epsilon(1e-12));
  CHECK(b.wells.n1 == a.wells.n1);
}
