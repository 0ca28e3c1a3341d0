#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "metastab/sde.hpp"

using namespace metastab;

namespace {

Potential flat() { return Potential::parse("0*x", Domain::interval(0, 1)); }

double binomial_sd(double p, double n) { return std::sqrt(p * (1 - p) / n); }

long count_left(const ExitRecordSet& s, double a) {
  long c = 0;
  for (const auto& r : s.records)
    if (!r.censored && r.x[0] == a) ++c;
  return c;
}

}  // namespace

TEST_CASE("stream seeds differ per index and are stable") {
  CHECK(stream_seed(1, 0) == stream_seed(1, 0));
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
}

TEST_CASE("config validation") {
  const Potential q = fixtures::symmetric_quartic();
  SimConfig cfg;
  cfg.dt = 2e-2;
  CHECK_THROWS_AS(cfg.validate(q), SimulationError);
  cfg.dt = 0;
  CHECK_THROWS_AS(cfg.validate(q), SimulationError);
  cfg.dt = 1e-3;
  cfg.h = 0.3;
  const auto warn = cfg.validate(q);  // guidance is 0.003 / 12.87
  REQUIRE(warn.size() == 1);
  CHECK(warn[0].find("guidance") != std::string::npos);
  cfg.dt = 2e-4;
  CHECK(cfg.validate(q).empty());
  CHECK_THROWS_AS(simulate_killed_paths(q, {EvalPoint(1.5)}, cfg), SimulationError);
}

TEST_CASE("Brownian exit from the unit interval") {
  SimConfig cfg;
  cfg.h = 1;
  cfg.dt = 1e-4;
  cfg.n_traj = 4000;
  cfg.master_seed = 11;
  const auto s = simulate_killed_paths(flat(), {EvalPoint(0.5)}, cfg);
  CHECK(s.censored == 0);
  for (const auto& r : s.records) CHECK((r.x[0] == 0.0 || r.x[0] == 1.0));
  const double pl = static_cast<double>(count_left(s, 0.0)) / cfg.n_traj;
  CHECK(std::abs(pl - 0.5) <= 3 * binomial_sd(0.5, cfg.n_traj));
  // E tau = x (1 - x) / h for the generator (h/2) d^2/dx^2
  const double se = std::sqrt(s.var_time / cfg.n_traj);
  CHECK(std::abs(s.mean_time - 0.25) <= 3 * se + 2e-3);
}

TEST_CASE("bridge test removes the crossing bias of the exit time") {
  SimConfig cfg;
  cfg.h = 1;
  cfg.dt = 2e-3;
  cfg.n_traj = 4000;
  cfg.master_seed = 5;
  const auto with = simulate_killed_paths(flat(), {EvalPoint(0.5)}, cfg);
  cfg.bridge_correction = false;
  const auto without = simulate_killed_paths(flat(), {EvalPoint(0.5)}, cfg);
  const double se = std::sqrt(with.var_time / cfg.n_traj);
  CHECK(std::abs(with.mean_time - 0.25) <= 3 * se);
  // naive crossing detection overshoots by about 0.58 sqrt(h dt) in distance
  CHECK(without.mean_time - 0.25 > 5 * se);
}

TEST_CASE("exit positions lie on the boundary") {
  SimConfig cfg;
  cfg.h = 0.5;
  cfg.dt = 1e-3;
  cfg.n_traj = 400;
  const Potential two = fixtures::two_contact();
  const auto s = simulate_killed_paths(two, {EvalPoint(-2, 0), EvalPoint(2, 0)}, cfg);
  const double bound = 3 * std::sqrt(cfg.h * cfg.dt);
  for (const auto& r : s.records) {
    REQUIRE(!r.censored);
    CHECK(std::abs(two.domain().distance_to_boundary(r.x)) < 1e-12);
    CHECK(r.displacement <= bound);
  }
  const Potential disk = Potential::parse("x^2+y^2", Domain::disk(0, 0, 1));
  const auto d = simulate_killed_paths(disk, {EvalPoint(0.2, 0.1)}, cfg);
  for (const auto& r : d.records) {
    CHECK(std::abs(std::hypot(r.x[0], r.x[1]) - 1) < 1e-12);
    CHECK(r.displacement <= bound);
  }
}

TEST_CASE("results do not depend on the number of workers") {
  SimConfig cfg;
  cfg.h = 0.5;
  cfg.dt = 1e-3;
  cfg.n_traj = 200;
  cfg.master_seed = 99;
  const Potential q = fixtures::symmetric_quartic();
  const auto a = simulate_killed_paths(q, {EvalPoint(-1)}, cfg);
  cfg.workers = 3;
  const auto b = simulate_killed_paths(q, {EvalPoint(-1)}, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x[0] == b.records[i].x[0]);
    CHECK(a.records[i].steps == b.records[i].steps);
  }
  CHECK(a.mean_time == b.mean_time);
}

TEST_CASE("censored trajectories are counted") {
  SimConfig cfg;
  cfg.h = 0.3;
  cfg.dt = 1e-3;
  cfg.n_traj = 50;
  cfg.max_steps = 10;
  const auto s = simulate_killed_paths(fixtures::symmetric_quartic(), {EvalPoint(-1)}, cfg);
  CHECK(s.censored == 50);
  CHECK(s.records.size() == 50);
  const auto rep = analyze_landscape(fixtures::symmetric_quartic());
  const auto hist = exit_histogram(s, rep);
  CHECK(hist.censored == 50);
  CHECK(hist.censored_frequency == 1.0);
}

TEST_CASE("paths from one well leave mostly through its own end") {
  SimConfig cfg;
  cfg.h = 0.3;
  cfg.dt = 1e-3;
  cfg.n_traj = 2000;
  const Potential q = fixtures::symmetric_quartic();
  const auto s = simulate_killed_paths(q, {EvalPoint(-1)}, cfg);
  const auto hist = exit_histogram(s, analyze_landscape(q));
  REQUIRE(hist.bins.size() == 2);
  CHECK(hist.bins[0].center[0] == doctest::Approx(-1.3));
  CHECK(hist.bins[0].frequency > 0.9);
  CHECK(hist.bins[1].frequency < 0.1);
}

TEST_CASE("exit histogram bookkeeping") {
  const auto rep = analyze_landscape(fixtures::symmetric_quartic());
  ExitRecordSet s;
  for (int i = 0; i < 10; ++i) {
    ExitRecord r;
    r.x = EvalPoint(1.3);
    s.records.push_back(r);
  }
  auto hist = exit_histogram(s, rep);
  CHECK(hist.radius == doctest::Approx(1.3));
  CHECK(hist.bins[1].frequency == 1.0);
  CHECK(hist.bins[1].stderr_ == 0.0);
  CHECK(hist.bins[0].count == 0);
  CHECK_THROWS_AS(exit_histogram(s, rep, 1.4), SimulationError);

  hist = exit_histogram(s, rep, 0.1);
  long total = hist.other + hist.censored;
  double freq = hist.other_frequency + hist.censored_frequency;
  for (const auto& b : hist.bins) total += b.count, freq += b.frequency;
  CHECK(total == 10);
  CHECK(freq == doctest::Approx(1.0));
}

TEST_CASE("symmetric exit law from a QSD start agrees with the spectral flux") {
  const Potential q = fixtures::symmetric_quartic();
  const double h = 0.3;
  const auto op = discretize_generator(q, h, 2048);
  const auto sol = lowest_spectrum(op, 1);
  const auto starts = sample_qsd(op, qsd_measure(op, sol), 2000, 3);
  SimConfig cfg;
  cfg.h = h;
  cfg.dt = 5e-4;
  cfg.n_traj = 2000;
  const auto s = simulate_killed_paths(q, starts, cfg);
  const auto hist = exit_histogram(s, analyze_landscape(q));
  const double spec = exit_expectation(op, sol, [](const EvalPoint& p) { return p[0] < 0 ? 1.0 : 0.0; });
  CHECK(spec == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(hist.bins[0].frequency - spec) <= 3 * binomial_sd(spec, cfg.n_traj));
  CHECK(hist.other == 0);
}

TEST_CASE("tilted exit law from a QSD start agrees with the spectral flux") {
  const Potential t = fixtures::tilted_quartic();
  const double h = 0.3;
  const auto op = discretize_generator(t, h, 2048);
  const auto sol = lowest_spectrum(op, 1);
  const auto starts = sample_qsd(op, qsd_measure(op, sol), 3000, 4);
  SimConfig cfg;
  cfg.h = h;
  cfg.dt = 5e-4;
  cfg.n_traj = 3000;
  cfg.master_seed = 8;
  const auto s = simulate_killed_paths(t, starts, cfg);
  const double right = exit_expectation(op, sol, [](const EvalPoint& p) { return p[0] > 0 ? 1.0 : 0.0; });
  const double mc = 1.0 - static_cast<double>(count_left(s, -1.3)) / cfg.n_traj;
  MESSAGE("spectral " << right << " MC " << mc);
  CHECK(std::abs(mc - right) <= 3 * binomial_sd(right, cfg.n_traj));
}

TEST_CASE("halving dt keeps exit frequencies within the sampling band") {
  const Potential t = fixtures::tilted_quartic();
  SimConfig cfg;
  cfg.h = 0.3;
  cfg.dt = 1e-3;
  cfg.n_traj = 2000;
  const std::vector<EvalPoint> start{EvalPoint(0.0)};
  const double a = static_cast<double>(count_left(simulate_killed_paths(t, start, cfg), -1.3)) / cfg.n_traj;
  cfg.dt = 5e-4;
  cfg.master_seed = 2;
  const double b = static_cast<double>(count_left(simulate_killed_paths(t, start, cfg), -1.3)) / cfg.n_traj;
  const double p = 0.5 * (a + b);
  CHECK(std::abs(a - b) <= 3 * std::sqrt(2.0) * binomial_sd(p, cfg.n_traj));
}

TEST_CASE("Fleming-Viot reproduces the sine profile on the unit interval") {
  SimConfig cfg;
  cfg.h = 1;
  cfg.dt = 2e-4;
  FleetConfig fleet;
  fleet.n_particles = 2000;
  fleet.t_total = 1.0;
  const auto ens = fleming_viot_qsd(flat(), uniform_interior(Domain::interval(0, 1), 2000, 7), cfg, fleet);
  REQUIRE(ens.positions.size() == 2000);
  long left = 0, middle = 0;
  for (const auto& p : ens.positions) {
    CHECK((p[0] > 0 && p[0] < 1));
    left += p[0] < 0.5;
    middle += p[0] > 0.25 && p[0] < 0.75;
  }
  CHECK(ens.respawns > 0);
  const double n = 2000;
  CHECK(std::abs(left / n - 0.5) <= 3 * binomial_sd(0.5, n));
  // the sine density puts cos(pi/4) of its mass on (1/4, 3/4)
  const double mid = std::cos(std::numbers::pi / 4);
  CHECK(std::abs(middle / n - mid) <= 4 * binomial_sd(mid, n));
}

TEST_CASE("Fleming-Viot occupancy of the symmetric quartic") {
  const Potential q = fixtures::symmetric_quartic();
  const auto rep = analyze_landscape(q);
  SimConfig cfg;
  cfg.h = 0.3;
  cfg.dt = 1e-3;
  cfg.master_seed = 21;
  FleetConfig fleet;
  fleet.n_particles = 2000;
  fleet.t_total = 2.0;
  const auto starts = uniform_interior(q.domain(), 2000, 5);
  const auto a = fleming_viot_qsd(q, starts, cfg, fleet, &rep);
  REQUIRE(!a.series.empty());
  CHECK(a.generation == 2000);
  for (const auto& o : a.series) CHECK(o.c1 + o.c2 + o.elsewhere == doctest::Approx(1.0));
  const auto m = a.mean();
  CHECK(std::abs(m.c1 - 0.5) <= 3 * binomial_sd(0.5, 2000));
  CHECK(a.halves_agree());
  const auto b = fleming_viot_qsd(q, starts, cfg, fleet, &rep);
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) CHECK(a.series[i].c1 == b.series[i].c1);
  for (std::size_t i = 0; i < a.positions.size(); ++i) CHECK(a.positions[i][0] == b.positions[i][0]);
}

TEST_CASE("Fleming-Viot refusals") {
  SimConfig cfg;
  cfg.h = 1;
  cfg.dt = 1e-2;
  FleetConfig fleet;
  fleet.n_particles = 50;
  const Potential narrow = Potential::parse("0*x", Domain::interval(0, 0.01));
  CHECK_THROWS_AS(fleming_viot_qsd(narrow, {EvalPoint(0.005)}, cfg, fleet), SimulationError);
  fleet.n_particles = 100;
  try {
    fleming_viot_qsd(narrow, {EvalPoint(0.005)}, cfg, fleet);
    FAIL("expected an abort");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("all 100 particles") != std::string::npos);
  }
}
