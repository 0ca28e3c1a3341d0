#pragma once

// Killed overdamped Langevin paths dX = -grad f dt + sqrt(h) dB by
// Euler-Maruyama, a Fleming-Viot particle system for the QSD, and the
// exit-point histogram around the generalized saddles.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"
#include "metastab/spectral.hpp"

namespace metastab {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double h = 0.3;
  double dt = 1e-3;
  int n_traj = 1000;
  std::uint64_t master_seed = 1;
  bool bridge_correction = true;
  long max_steps = 10'000'000;
  int workers = 1;

  /// Throws for dt <= 0, dt > 1e-2 or h <= 0; returns guidance warnings.
  std::vector<std::string> validate(const Potential& pot) const;
};

/// Counter-based stream seed for (master seed, stream index).
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

struct ExitRecord {
  EvalPoint x;              // on the boundary
  double time = 0;
  long steps = 0;
  double displacement = 0;  // projection distance onto the boundary
  bool censored = false;    // max_steps reached; x is the last position
  bool bridge = false;      // killed by the bridge test rather than a crossing
};

struct ExitRecordSet {
  std::vector<ExitRecord> records;
  int censored = 0;
  double mean_time = 0, var_time = 0;  // over exited trajectories
  std::vector<std::string> warnings;
};

/// Trajectory i starts at starts[i % starts.size()].
ExitRecordSet simulate_killed_paths(const Potential& pot, const std::vector<EvalPoint>& starts, const SimConfig& cfg);

struct FleetConfig {
  int n_particles = 10000;
  double t_total = 2.0;
  double burn_fraction = 0.5;  // share of t_total discarded before recording
  int record_every = 50;       // steps between occupancy snapshots
};

struct Occupancy {
  double c1 = 0, c2 = 0, elsewhere = 0;
};

struct ParticleEnsemble {
  std::vector<EvalPoint> positions;
  long generation = 0;  // time steps taken
  long respawns = 0;
  std::vector<double> times;
  std::vector<Occupancy> series;  // after burn-in, when a landscape is supplied
  /// Time average of the series and the two-halves stationarity check.
  Occupancy mean() const;
  bool halves_agree(double sigmas = 2.0) const;
};

ParticleEnsemble fleming_viot_qsd(const Potential& pot, const std::vector<EvalPoint>& starts, const SimConfig& cfg,
                                  const FleetConfig& fleet, const LandscapeReport* report = nullptr);

Occupancy well_occupancy(const std::vector<EvalPoint>& positions, const LandscapeReport& report);

struct ExitBin {
  int saddle = -1;  // index into LandscapeReport::saddles
  int well = 0;
  EvalPoint center;
  long count = 0;
  double frequency = 0, stderr_ = 0;
};

struct ExitHistogram {
  double radius = 0;
  std::vector<ExitBin> bins;
  long other = 0, censored = 0, total = 0;
  double other_frequency = 0, censored_frequency = 0;
};

/// Half the smallest distance between two boundary saddles; the domain
/// diameter when there is only one.
double default_bin_radius(const LandscapeReport& report);

/// radius <= 0 selects default_bin_radius.
ExitHistogram exit_histogram(const ExitRecordSet& records, const LandscapeReport& report, double radius = 0);

/// Uniform points strictly inside the domain.
std::vector<EvalPoint> uniform_interior(const Domain& dom, int n, std::uint64_t seed);
/// Draws from the spectral QSD: a node by weight, then uniformly within its dual cell (clipped to the domain).
std::vector<EvalPoint> sample_qsd(const SymmetricOperator& op, const QsdMeasure& q, int n, std::uint64_t seed);

}  // namespace metastab
