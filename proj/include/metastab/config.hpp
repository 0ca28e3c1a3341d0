#pragma once

// Run configuration: an INI file with the sections below. Lines starting
// with ';' or '#' are comments. Lists are separated by spaces or commas.
//
//   [potential]   expression = (x^2-1)^2
//   [domain]      kind = interval | rectangle | disk
//                 bounds = a b | ax bx ay by | cx cy r
//   [ladder]      h = 0.2 0.15 0.12 0.1 0.08        strictly decreasing
//   [mesh]        n = 4096                           cells on the longest side
//                 flux = conservative | three_point
//   [sde]         enabled, dt, n_traj, seed, bridge, max_steps, budget,
//                 particles, t_total, burn_fraction, start, workers
//   [symmetry]    map = reflect_x 0 | reflect_y c | point cx cy
//   [bins]        radius = 0                         0: half the saddle separation
//   [output]      dir = out
//                 formats = json, csv, gnuplot

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metastab/domain.hpp"
#include "metastab/spectral.hpp"

namespace metastab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SdeSettings {
  bool enabled = true;
  double dt = 1e-3;
  int n_traj = 2000;
  std::uint64_t seed = 1;
  bool bridge = true;
  long max_steps = 10'000'000;
  double budget = 5e7;       // Euler steps allowed per route and rung
  int particles = 0;         // Fleming-Viot ensemble size, 0 disables it
  double t_total = 4.0;
  double burn_fraction = 0.5;
  std::string start = "uniform";  // Fleming-Viot start: uniform | qsd
  int workers = 1;
};

struct RunConfig {
  std::string name;
  std::string expression;
  Domain domain;
  std::vector<double> ladder;
  int mesh = 1024;
  FluxScheme flux = FluxScheme::conservative;
  SdeSettings sde;
  std::optional<std::string> symmetry;
  double bin_radius = 0;
  std::string out_dir = "out";
  std::vector<std::string> formats{"json"};

  /// Checks the ladder, mesh, SDE settings and formats. Throws ConfigError.
  void validate() const;
};

RunConfig parse_config(std::istream& in, const std::string& name = "config");
RunConfig load_config(const std::string& path);

/// Splits "0.2, 0.15 0.1" into numbers; throws ConfigError naming `what`.
std::vector<double> parse_number_list(const std::string& text, const std::string& what);
std::vector<std::string> parse_word_list(const std::string& text);

}  // namespace metastab
