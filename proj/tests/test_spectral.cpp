#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "metastab/asymptotics.hpp"
#include "metastab/spectral.hpp"

using namespace metastab;

namespace {

const double kPi = std::numbers::pi;

Potential flat() { return Potential::parse("0*x", Domain::interval(0, 1)); }

double one(const EvalPoint&) { return 1.0; }

// Composite Simpson rule, the quadrature oracle for the Laplace reference.
double simpson(const std::function<double(double)>& g, double a, double b, int n) {
  const double d = (b - a) / n;
  double s = g(a) + g(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * g(a + i * d);
  return s * d / 3;
}

}  // namespace

TEST_CASE("mesh layout") {
  const Mesh m = build_mesh(Domain::interval(-1.3, 1.3), 100);
  CHECK(m.size() == 99);
  CHECK(m.faces.size() == 2);
  CHECK(m.edges.size() == 98);
  for (int k = 0; k < m.size(); ++k) CHECK(m.nodes[static_cast<std::size_t>(m.mirror(k, true, false))][0] == -m.nodes[static_cast<std::size_t>(k)][0]);

  const Mesh r = build_mesh(Domain::rectangle(-3, 3, -1, 1.5), 120);
  CHECK(r.nx == 120);
  CHECK(r.ny == 50);
  CHECK(r.dx == doctest::Approx(r.dy));
  CHECK(r.size() == 119 * 49);
  CHECK(r.faces.size() == 2 * 119 + 2 * 49);
  CHECK(r.bandwidth == 49);

  const Mesh d = build_mesh(Domain::disk(0, 0, 1), 80);
  for (const auto& p : d.nodes) CHECK(p[0] * p[0] + p[1] * p[1] < 1);
  for (const auto& f : d.faces) {
    CHECK(std::hypot(f.normal[0], f.normal[1]) == doctest::Approx(1));
    CHECK(std::hypot(f.point[0], f.point[1]) == doctest::Approx(1));
  }
  CHECK_THROWS_AS(build_mesh(Domain::interval(0, 1), 32), SpectralError);
}

TEST_CASE("flat potential gives the scaled Dirichlet Laplacian") {
  const int n = 512;
  const double h = 1.0;
  const auto op = discretize_generator(flat(), h, n);
  const double d = 1.0 / n;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
      CHECK(it.value() == doctest::Approx(it.row() == it.col() ? h / (d * d) : -h / (2 * d * d)).epsilon(1e-14));
  const auto sol = lowest_spectrum(op, 3);
  CHECK(sol.eigenvalues[0] == doctest::Approx(h / 2 * kPi * kPi).epsilon(1e-3));
  for (int j = 1; j <= 3; ++j) {
    const double s = std::sin(j * kPi * d / 2);
    CHECK(sol.eigenvalues[static_cast<std::size_t>(j - 1)] == doctest::Approx(h / 2 * 4 / (d * d) * s * s).epsilon(1e-11));
  }
  // linear in h
  const auto op2 = discretize_generator(flat(), 0.3, n);
  CHECK(lowest_spectrum(op2, 1).eigenvalues[0] == doctest::Approx(0.3 * sol.eigenvalues[0]).epsilon(1e-11));
  CHECK(subspace_dimension_below(op, 0.5) == 0);
  CHECK(subspace_dimension_below(op, 10) == 1);
  CHECK(subspace_dimension_below(op, 40) == 2);
}

TEST_CASE("operator structure") {
  for (const auto& pot : fixtures::bundled()) {
    const int n = pot.dim() == 1 ? 256 : 96;
    const auto op = discretize_generator(pot, 0.2, n);
    const Eigen::SparseMatrix<double> T = op.matrix.transpose();
    CHECK((op.matrix - T).norm() == 0.0);
    for (int k = 0; k < op.matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
        if (it.row() != it.col()) CHECK(it.value() <= 0);
    // stiffness rows sum to the boundary conductance
    const std::vector<double> ones(static_cast<std::size_t>(op.size()), 1.0);
    const auto rs = op.apply_stiffness(ones);
    const auto ex = op.stiffness_excess();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      CHECK(rs[i] >= 0);
      CHECK(rs[i] == doctest::Approx(ex[i]).epsilon(1e-12));
    }
    // the symmetric matrix is the similarity transform of M^{-1} K
    std::vector<double> u(ones.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(0.37 * static_cast<double>(i));
    const auto Ku = op.apply_stiffness(u);
    Eigen::VectorXd v(op.size());
    for (int i = 0; i < op.size(); ++i) v(i) = std::sqrt(op.mass[static_cast<std::size_t>(i)]) * u[static_cast<std::size_t>(i)];
    const Eigen::VectorXd Sv = op.matrix * v;
    for (int i = 0; i < op.size(); ++i)
      CHECK(Sv(i) == doctest::Approx(Ku[static_cast<std::size_t>(i)] / std::sqrt(op.mass[static_cast<std::size_t>(i)])).epsilon(1e-9).scale(op.norm_bound));
  }
}

TEST_CASE("adding a constant leaves the matrix unchanged") {
  const auto a = discretize_generator(fixtures::symmetric_quartic(), 0.1, 256);
  const auto b = discretize_generator(Potential::parse("(x^2-1)^2 + 7", Domain::interval(-1.3, 1.3)), 0.1, 256);
  const Eigen::SparseMatrix<double> diff = a.matrix - b.matrix;
  CHECK(diff.norm() <= 1e-12 * a.matrix.norm());
  CHECK(b.fmin == doctest::Approx(7));
}

TEST_CASE("even potential commutes with the mesh reflection") {
  const auto op = discretize_generator(fixtures::symmetric_quartic(), 0.1, 300);
  const Mesh& m = *op.mesh;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it) {
      const int r = m.mirror(static_cast<int>(it.row()), true, false), c = m.mirror(static_cast<int>(it.col()), true, false);
      CHECK(op.matrix.coeff(r, c) == it.value());
    }
}

TEST_CASE("dense and iterative paths agree") {
  const auto op = discretize_generator(fixtures::symmetric_quartic(), 0.15, 1025);
  REQUIRE(op.size() == 1024);
  const auto it = lowest_spectrum(op, 4);
  SpectrumOptions d;
  d.method = SpectrumOptions::Method::dense;
  const auto de = lowest_spectrum(op, 4, d);
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(it.eigenvalues[c] / de.eigenvalues[c] - 1) <= 1e-9);
  for (double r : it.residuals) CHECK(r <= 1e-10);
}

TEST_CASE("two low-lying eigenvalues below sqrt(h)/2") {
  for (int n : {1024, 2048}) {
    const double h = 0.1;
    const auto op = discretize_generator(fixtures::symmetric_quartic(), h, n);
    const auto sol = lowest_spectrum(op, 3);
    CHECK(sol.eigenvalues[0] > 0);
    CHECK(sol.eigenvalues[0] < sol.eigenvalues[1]);
    CHECK(sol.eigenvalues[1] < std::sqrt(h) / 2);
    CHECK(sol.eigenvalues[2] > std::sqrt(h) / 2);
    CHECK(subspace_dimension_below(op, std::sqrt(h) / 2) == 2);
    CHECK(subspace_dimension_below(op, 0.5 * sol.eigenvalues[0]) == 0);
  }
}

TEST_CASE("ground state is positive and normalised") {
  for (const auto& pot : fixtures::bundled()) {
    const int n = pot.dim() == 1 ? 1024 : 120;
    const auto op = discretize_generator(pot, 0.12, n);
    const auto sol = lowest_spectrum(op, 2);
    double norm = 0;
    for (std::size_t i = 0; i < sol.ground().size(); ++i) {
      CHECK(sol.ground()[i] > 0);
      norm += op.mass[i] * sol.ground()[i] * sol.ground()[i];
    }
    CHECK(norm == doctest::Approx(1).epsilon(1e-12));
    for (double r : sol.residuals) CHECK(r <= 1e-10);
  }
}

TEST_CASE("reflection symmetry of the eigenvectors") {
  const auto op = discretize_generator(fixtures::symmetric_quartic(), 0.1, 2048);
  const auto sol = lowest_spectrum(op, 2);
  const Mesh& m = *op.mesh;
  double umax = 0;
  for (double x : sol.modes[0]) umax = std::max(umax, std::abs(x));
  double sym = 0, anti = 0;
  for (int k = 0; k < m.size(); ++k) {
    const auto r = static_cast<std::size_t>(m.mirror(k, true, false)), kk = static_cast<std::size_t>(k);
    sym = std::max(sym, std::abs(sol.modes[0][kk] - sol.modes[0][r]));
    anti = std::max(anti, std::abs(sol.modes[1][kk] + sol.modes[1][r]));
  }
  CHECK(sym <= 1e-9 * umax);
  CHECK(anti <= 1e-9 * umax);
  const auto q = qsd_measure(op, sol);
  for (int k = 0; k < m.size(); ++k)
    CHECK(std::abs(q.weights[static_cast<std::size_t>(k)] - q.weights[static_cast<std::size_t>(m.mirror(k, true, false))]) <= 1e-9);
}

TEST_CASE("QSD measure and region mass") {
  const auto report = analyze_landscape(fixtures::symmetric_quartic());
  REQUIRE(report.pass);
  const double h = 0.05;
  const auto op = discretize_generator(report.potential, h, 2048);
  const auto sol = lowest_spectrum(op, 2);
  const auto q = qsd_measure(op, sol);
  double total = 0;
  for (double w : q.weights) {
    CHECK(w >= 0);
    total += w;
  }
  CHECK(total == doctest::Approx(1).epsilon(1e-14));
  CHECK(region_mass(q, NodeMask(q.weights.size(), 1)) == doctest::Approx(1).epsilon(1e-14));
  CHECK(region_mass(q, NodeMask(q.weights.size(), 0)) == 0.0);
  const auto c1 = well_mask(*op.mesh, report, 1), c2 = well_mask(*op.mesh, report, 2);
  const double m1 = region_mass(q, c1), m2 = region_mass(q, c2);
  CHECK(m1 + m2 >= 0.995);
  CHECK(m1 == doctest::Approx(0.5).epsilon(0.04));
  CHECK_THROWS_AS(region_mass(q, NodeMask(3, 1)), SpectralError);
}

TEST_CASE("exit functional") {
  const auto op = discretize_generator(fixtures::symmetric_quartic(), 0.1, 1024);
  const auto sol = lowest_spectrum(op, 1);
  CHECK(std::abs(exit_expectation(op, sol, one) - 1) <= 1e-3);
  const double left = exit_expectation(op, sol, [](const EvalPoint& p) { return p[0] < 0 ? 1.0 : 0.0; });
  CHECK(left == doctest::Approx(0.5).epsilon(0.04));
  const auto w = exit_face_weights(op, sol);
  for (double x : w) CHECK(x >= 0);

  // the one-sided stencil converges at second order
  double prev = 0;
  for (int n : {1024, 2048, 4096}) {
    const auto o = discretize_generator(fixtures::symmetric_quartic(), 0.2, n);
    const auto s = lowest_spectrum(o, 1);
    const double e = std::abs(exit_expectation(o, s, one, FluxScheme::three_point) - 1);
    CHECK(std::abs(exit_expectation(o, s, one) - 1) <= 1e-12);
    if (prev > 0) CHECK(prev / e == doctest::Approx(4).epsilon(0.25));
    prev = e;
  }
}

TEST_CASE("generic regime: exits through the non-selected well fade") {
  const double b = fixtures::kTiltedRight;
  double prev = 1;
  for (double h : {0.2, 0.15, 0.12, 0.1}) {
    const auto op = discretize_generator(fixtures::tilted_quartic(), h, 2048);
    const auto sol = lowest_spectrum(op, 1);
    const double right = exit_expectation(op, sol, [b](const EvalPoint& p) { return p[0] == b ? 1.0 : 0.0; });
    CHECK(right < prev);
    prev = right;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("two-contact exit ratio") {
  const auto op = discretize_generator(fixtures::two_contact(), 0.1, 240);
  const auto sol = lowest_spectrum(op, 1);
  auto bin = [&](double cx, double cy) {
    return exit_expectation(op, sol, [=](const EvalPoint& p) { return std::hypot(p[0] - cx, p[1] - cy) < std::sqrt(0.5) ? 1.0 : 0.0; });
  };
  const double side = bin(-3, 0) + bin(3, 0), bottom = bin(-2, -1) + bin(2, -1);
  CHECK(side / bottom == doctest::Approx(2).epsilon(0.2));
  CHECK(side + bottom > 0.99);
}

TEST_CASE("second-order convergence in the mesh") {
  std::vector<double> lam;
  for (int n : {256, 512, 1024, 2048}) {
    const auto op = discretize_generator(fixtures::symmetric_quartic(), 0.12, n);
    lam.push_back(lowest_spectrum(op, 1).eigenvalues[0]);
  }
  for (std::size_t i = 2; i < lam.size(); ++i) {
    const double ratio = (lam[i - 2] - lam[i - 1]) / (lam[i - 1] - lam[i]);
    CHECK(ratio == doctest::Approx(4).epsilon(0.25));
  }
}

TEST_CASE("rescaled eigenvalue approaches the prefactor") {
  const auto report = analyze_landscape(fixtures::symmetric_quartic());
  const double kappa = leading_kappa(report).kappa10;
  double prev = 1e9;
  for (double h : {0.2, 0.15, 0.12, 0.1}) {
    const auto op = discretize_generator(report.potential, h, 2048);
    const double scaled = 2 * std::sqrt(h) * std::exp(2 * report.H / h) * lowest_spectrum(op, 1).eigenvalues[0];
    const double dev = std::abs(scaled / kappa - 1);
    CHECK(dev < prev);
    prev = dev;
  }
}

TEST_CASE("admissible h") {
  try {
    discretize_generator(fixtures::symmetric_quartic(), 0.02, 256);
    FAIL("h below the floor");
  } catch (const AdmissibilityError& e) {
    CHECK(e.minimal_h() == doctest::Approx(0.4761 / (6 * std::log(10.0))).epsilon(1e-3));
  }
  CHECK(minimal_admissible_h(0.4761) == doctest::Approx(0.034461).epsilon(1e-4));
  CHECK_NOTHROW(discretize_generator(fixtures::symmetric_quartic(), 0.035, 256));
  CHECK_THROWS_AS(discretize_generator(fixtures::symmetric_quartic(), -1, 256), SpectralError);
}

TEST_CASE("Laplace reference") {
  const auto bowl = analyze_landscape(Potential::parse("x^2", Domain::interval(-1, 1)));
  const double h = 0.1;
  CHECK(laplace_reference(bowl, [](const EvalPoint&) { return true; }, h) == doctest::Approx(std::sqrt(h * kPi) / std::sqrt(2.0)));
  CHECK_THROWS_AS(laplace_reference(bowl, [](const EvalPoint& p) { return p[0] > 0.5; }, h), SpectralError);

  const auto quartic = analyze_landscape(fixtures::symmetric_quartic());
  const double hq = 0.05;
  const double hi = -std::sqrt(0.31);
  const double quad = simpson([&](double x) { return std::exp(-2 * std::pow(x * x - 1, 2) / hq); }, -1.3, hi, 20000);
  const double ref = laplace_reference(quartic, [&](const EvalPoint& p) { return p[0] < hi; }, hq);
  CHECK(std::abs(quad / ref - 1) <= 3 * hq);
  CHECK_THROWS_AS(laplace_reference(quartic, [](const EvalPoint&) { return true; }, hq), SpectralError);
}

TEST_CASE("disk domain") {
  const auto pot = Potential::parse("(x-0.5)^2 + 2*y^2", Domain::disk(0, 0, 1));
  const auto op = discretize_generator(pot, 0.3, 96);
  const auto sol = lowest_spectrum(op, 2);
  for (double u : sol.ground()) CHECK(u > 0);
  CHECK(std::abs(exit_expectation(op, sol, one) - 1) <= 1e-10);
  CHECK(sol.eigenvalues[0] < sol.eigenvalues[1]);
}

TEST_CASE("decoupled wells: degenerate pair resolves to the symmetric ground state") {
  // interior barrier 4, boundary barrier about 0.42: lambda_2 - lambda_1 sits far below roundoff
  const Potential p = Potential::parse("4*(x^2-1)^2", Domain::interval(-1.15, 1.15));
  const auto op = discretize_generator(p, 0.1, 1024);
  for (int k : {1, 2}) {
    const EigenSolution sol = lowest_spectrum(op, k);
    const auto& u = sol.ground();
    const Mesh& m = *op.mesh;
    double worst = 0, big = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] >= 0);
      const double v = u[i] * std::sqrt(op.mass[i]);
      big = std::max(big, v);
      worst = std::max(worst, std::abs(v - u[static_cast<std::size_t>(m.mirror(static_cast<int>(i), true, false))] * std::sqrt(op.mass[i])));
    }
    CHECK(worst <= 1e-8 * big);
    if (k == 2) {
      CHECK(sol.eigenvalues[1] == doctest::Approx(sol.eigenvalues[0]).epsilon(1e-8));
      double dot = 0;
      for (std::size_t i = 0; i < u.size(); ++i) dot += op.mass[i] * u[i] * sol.modes[1][i];
      CHECK(std::abs(dot) <= 1e-10);
    }
  }
}
