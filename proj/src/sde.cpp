#include "metastab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace metastab {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index owns
// its output slot, so the result does not depend on the split.
template <class F>
void parallel_for(int n, int workers, F&& body) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

enum class StepOutcome { inside, crossed, bridged };

struct Stepper {
  const Potential& pot;
  const Domain& dom;
  double h, dt, noise, cutoff;
  bool bridge;

  Stepper(const Potential& p, const SimConfig& cfg)
      : pot(p), dom(p.domain()), h(cfg.h), dt(cfg.dt), noise(std::sqrt(cfg.h * cfg.dt)),
        cutoff(3 * std::sqrt(cfg.h * cfg.dt)), bridge(cfg.bridge_correction) {}

  // Advances x by one Euler-Maruyama step. On exit, x is the exit point on the
  // boundary and `moved` the projection distance.
  StepOutcome step(EvalPoint& x, Rng& rng, std::normal_distribution<double>& gauss, std::uniform_real_distribution<double>& unif,
                   double& frac, double& moved) const {
    const int d = dom.dim();
    const Vec g = pot.gradient(x);
    EvalPoint y = x;
    for (int k = 0; k < d; ++k) y[k] = x[k] - g[static_cast<std::size_t>(k)] * dt + noise * gauss(rng);
    const double t = dom.segment_exit(x, y);
    if (t <= 1) {
      EvalPoint hit = x;
      for (int k = 0; k < d; ++k) hit[k] = x[k] + t * (y[k] - x[k]);
      const EvalPoint on = dom.project_to_boundary(hit);
      moved = std::hypot(on[0] - hit[0], on[1] - hit[1]);
      x = on;
      frac = t;
      return StepOutcome::crossed;
    }
    if (bridge) {
      const auto w0 = dom.nearby_walls(x, cutoff);
      if (!w0.empty()) {
        // Each nearby wall is treated as a half-plane; a Brownian bridge of
        // variance h dt between distances d0, d1 touches it with probability
        // exp(-2 d0 d1 / (h dt)).
        double survive = 1, best = 0;
        int arg = -1;
        for (std::size_t k = 0; k < w0.size(); ++k) {
          const auto& w = w0[k];
          double d1;
          if (dom.kind == DomainKind::disk) {
            d1 = dom.distance_to_boundary(y);
          } else {
            d1 = w.distance;
            for (int c = 0; c < d; ++c) d1 -= (y[c] - x[c]) * w.normal[static_cast<std::size_t>(c)];
          }
          if (d1 <= 0) continue;
          const double p = std::exp(-2 * w.distance * d1 / (h * dt));
          survive *= 1 - p;
          if (p > best) best = p, arg = static_cast<int>(k);
        }
        if (arg >= 0 && unif(rng) >= survive) {
          const auto& w = w0[static_cast<std::size_t>(arg)];
          // land on the wall from whichever end of the step is closer to it
          double dy = w.distance;
          for (int c = 0; c < d; ++c) dy -= (y[c] - x[c]) * w.normal[static_cast<std::size_t>(c)];
          const EvalPoint& from = dy < w.distance ? y : x;
          EvalPoint on;
          if (dom.kind == DomainKind::disk) {
            on = dom.project_to_boundary(from);
          } else {
            const double dist = std::min(dy, w.distance);
            on = from;
            for (int c = 0; c < d; ++c) on[c] += dist * w.normal[static_cast<std::size_t>(c)];
          }
          moved = std::hypot(on[0] - from[0], on[1] - from[1]);
          x = on;
          frac = 1;
          return StepOutcome::bridged;
        }
      }
    }
    x = y;
    return StepOutcome::inside;
  }
};

void check_start(const Domain& dom, const EvalPoint& p) {
  if (p.dim != dom.dim() || !dom.inside(p)) {
    std::ostringstream os;
    os << "start point (" << p[0];
    if (p.dim == 2) os << ", " << p[1];
    os << ") is not strictly inside " << dom.describe();
    throw SimulationError(os.str());
  }
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

std::vector<std::string> SimConfig::validate(const Potential& pot) const {
  if (!(h > 0) || !std::isfinite(h)) throw SimulationError("h must be positive");
  if (!(dt > 0)) throw SimulationError("dt must be positive");
  if (dt > 1e-2) throw SimulationError("dt = " + std::to_string(dt) + " exceeds the cap 1e-2");
  if (n_traj < 1) throw SimulationError("n_traj must be at least 1");
  if (max_steps < 1) throw SimulationError("max_steps must be at least 1");
  std::vector<std::string> warn;
  const double g2 = pot.max_probe_grad_sq();
  const double guide = 0.01 * std::min(1.0, h) / std::max(g2, 1e-300);
  if (dt > guide) {
    std::ostringstream os;
    os << "dt = " << dt << " is above the step-size guidance " << guide << " (max |grad f|^2 = " << g2 << ")";
    warn.push_back(os.str());
  }
  return warn;
}

ExitRecordSet simulate_killed_paths(const Potential& pot, const std::vector<EvalPoint>& starts, const SimConfig& cfg) {
  ExitRecordSet out;
  out.warnings = cfg.validate(pot);
  if (starts.empty()) throw SimulationError("no start points");
  for (const auto& p : starts) check_start(pot.domain(), p);
  const Stepper stepper(pot, cfg);
  out.records.resize(static_cast<std::size_t>(cfg.n_traj));
  parallel_for(cfg.n_traj, cfg.workers, [&](int i) {
    Rng rng(stream_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    EvalPoint x = starts[static_cast<std::size_t>(i) % starts.size()];
    ExitRecord& rec = out.records[static_cast<std::size_t>(i)];
    double frac = 0, moved = 0;
    long k = 0;
    for (; k < cfg.max_steps; ++k) {
      const StepOutcome s = stepper.step(x, rng, gauss, unif, frac, moved);
      if (s == StepOutcome::inside) continue;
      rec.x = x;
      rec.steps = k + 1;
      rec.time = (static_cast<double>(k) + frac) * cfg.dt;
      rec.displacement = moved;
      rec.bridge = s == StepOutcome::bridged;
      return;
    }
    rec.x = x;
    rec.steps = k;
    rec.time = static_cast<double>(k) * cfg.dt;
    rec.censored = true;
  });
  double sum = 0, sq = 0;
  long n = 0;
  for (const auto& r : out.records) {
    if (r.censored) {
      ++out.censored;
      continue;
    }
    ++n;
    sum += r.time;
  }
  if (n > 0) {
    out.mean_time = sum / static_cast<double>(n);
    for (const auto& r : out.records)
      if (!r.censored) sq += (r.time - out.mean_time) * (r.time - out.mean_time);
    out.var_time = n > 1 ? sq / static_cast<double>(n - 1) : 0;
  }
  if (out.censored > 0)
    out.warnings.push_back(std::to_string(out.censored) + " trajectories censored at max_steps = " +
                           std::to_string(cfg.max_steps));
  return out;
}

Occupancy well_occupancy(const std::vector<EvalPoint>& positions, const LandscapeReport& report) {
  Occupancy o;
  if (positions.empty()) return o;
  long c[3] = {0, 0, 0};
  for (const auto& p : positions) ++c[report.well_at(p)];
  const double n = static_cast<double>(positions.size());
  o.c1 = static_cast<double>(c[1]) / n;
  o.c2 = static_cast<double>(c[2]) / n;
  o.elsewhere = static_cast<double>(c[0]) / n;
  return o;
}

Occupancy ParticleEnsemble::mean() const {
  Occupancy m;
  if (series.empty()) return m;
  for (const auto& o : series) {
    m.c1 += o.c1;
    m.c2 += o.c2;
    m.elsewhere += o.elsewhere;
  }
  const double n = static_cast<double>(series.size());
  m.c1 /= n;
  m.c2 /= n;
  m.elsewhere /= n;
  return m;
}

bool ParticleEnsemble::halves_agree(double sigmas) const {
  if (series.size() < 2) return false;
  const std::size_t half = series.size() / 2;
  double a = 0, b = 0;
  for (std::size_t i = 0; i < half; ++i) a += series[i].c1;
  for (std::size_t i = half; i < series.size(); ++i) b += series[i].c1;
  a /= static_cast<double>(half);
  b /= static_cast<double>(series.size() - half);
  const double p = 0.5 * (a + b);
  const double sd = std::sqrt(2 * std::max(p * (1 - p), 1e-12) / static_cast<double>(positions.size()));
  return std::abs(a - b) <= sigmas * sd;
}

ParticleEnsemble fleming_viot_qsd(const Potential& pot, const std::vector<EvalPoint>& starts, const SimConfig& cfg,
                                  const FleetConfig& fleet, const LandscapeReport* report) {
  cfg.validate(pot);
  const int n = fleet.n_particles;
  if (n < 100) throw SimulationError("Fleming-Viot needs at least 100 particles, got " + std::to_string(n));
  if (!(fleet.t_total > 0)) throw SimulationError("t_total must be positive");
  if (!(fleet.burn_fraction >= 0 && fleet.burn_fraction < 1)) throw SimulationError("burn_fraction must lie in [0, 1)");
  if (fleet.record_every < 1) throw SimulationError("record_every must be at least 1");
  if (starts.empty()) throw SimulationError("no start points");
  for (const auto& p : starts) check_start(pot.domain(), p);

  const long steps = std::max(1L, std::lround(fleet.t_total / cfg.dt));
  const long burn = std::lround(fleet.burn_fraction * static_cast<double>(steps));
  const Stepper stepper(pot, cfg);

  ParticleEnsemble ens;
  ens.positions.resize(static_cast<std::size_t>(n));
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n));
  std::vector<std::normal_distribution<double>> gauss(static_cast<std::size_t>(n));
  std::vector<std::uniform_real_distribution<double>> unif(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ens.positions[static_cast<std::size_t>(i)] = starts[static_cast<std::size_t>(i) % starts.size()];
    rngs.emplace_back(stream_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
  }
  Rng respawn(stream_seed(cfg.master_seed, std::numeric_limits<std::uint64_t>::max()));
  std::vector<char> dead(static_cast<std::size_t>(n));
  std::vector<int> alive;
  alive.reserve(static_cast<std::size_t>(n));

  auto record = [&](long k) {
    if (!report) return;
    ens.times.push_back(static_cast<double>(k) * cfg.dt);
    ens.series.push_back(well_occupancy(ens.positions, *report));
  };

  for (long k = 1; k <= steps; ++k) {
    parallel_for(n, cfg.workers, [&](int i) {
      const auto u = static_cast<std::size_t>(i);
      double frac, moved;
      dead[u] = stepper.step(ens.positions[u], rngs[u], gauss[u], unif[u], frac, moved) != StepOutcome::inside;
    });
    alive.clear();
    for (int i = 0; i < n; ++i)
      if (!dead[static_cast<std::size_t>(i)]) alive.push_back(i);
    if (alive.empty()) {
      std::ostringstream os;
      os << "all " << n << " particles left the domain in step " << k << " (h = " << cfg.h << ", dt = " << cfg.dt
         << "); the step is far too large for this potential";
      throw SimulationError(os.str());
    }
    std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
    for (int i = 0; i < n; ++i) {
      if (!dead[static_cast<std::size_t>(i)]) continue;
      ens.positions[static_cast<std::size_t>(i)] = ens.positions[static_cast<std::size_t>(alive[pick(respawn)])];
      ++ens.respawns;
    }
    ens.generation = k;
    if (k > burn && ((k - burn) % fleet.record_every == 0 || k == steps)) record(k);
  }
  return ens;
}

double default_bin_radius(const LandscapeReport& report) {
  const auto& sad = report.saddles;
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sad.size(); ++i)
    for (std::size_t j = i + 1; j < sad.size(); ++j)
      sep = std::min(sep, std::hypot(sad[i].x[0] - sad[j].x[0], sad[i].x[1] - sad[j].x[1]));
  return std::isfinite(sep) ? 0.5 * sep : report.potential.domain().diameter();
}

ExitHistogram exit_histogram(const ExitRecordSet& records, const LandscapeReport& report, double radius) {
  ExitHistogram out;
  const auto& sad = report.saddles;
  const double half = default_bin_radius(report);
  if (radius <= 0) {
    radius = half;
  } else if (radius > half * (1 + 1e-12)) {
    std::ostringstream os;
    os << "bin radius " << radius << " exceeds half the smallest saddle separation " << half << "; bins would overlap";
    throw SimulationError(os.str());
  }
  out.radius = radius;
  for (std::size_t i = 0; i < sad.size(); ++i) {
    ExitBin b;
    b.saddle = static_cast<int>(i);
    b.well = sad[i].well;
    b.center = sad[i].x;
    out.bins.push_back(b);
  }
  for (const auto& r : records.records) {
    ++out.total;
    if (r.censored) {
      ++out.censored;
      continue;
    }
    int best = -1;
    double bd = radius;
    for (std::size_t i = 0; i < sad.size(); ++i) {
      const double d = std::hypot(r.x[0] - sad[i].x[0], r.x[1] - sad[i].x[1]);
      if (d <= bd) bd = d, best = static_cast<int>(i);
    }
    if (best < 0)
      ++out.other;
    else
      ++out.bins[static_cast<std::size_t>(best)].count;
  }
  if (out.total > 0) {
    const double n = static_cast<double>(out.total);
    for (auto& b : out.bins) {
      b.frequency = static_cast<double>(b.count) / n;
      b.stderr_ = std::sqrt(b.frequency * (1 - b.frequency) / n);
    }
    out.other_frequency = static_cast<double>(out.other) / n;
    out.censored_frequency = static_cast<double>(out.censored) / n;
  }
  return out;
}

std::vector<EvalPoint> uniform_interior(const Domain& dom, int n, std::uint64_t seed) {
  Rng rng(stream_seed(seed, 0));
  const Vec lo = dom.lo(), hi = dom.hi();
  std::uniform_real_distribution<double> ux(lo[0], hi[0]), uy(lo[1], hi[1]);
  std::vector<EvalPoint> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  while (static_cast<int>(out.size()) < n) {
    EvalPoint p = dom.dim() == 1 ? EvalPoint(ux(rng)) : EvalPoint(ux(rng), uy(rng));
    if (dom.inside(p)) out.push_back(p);
  }
  return out;
}

std::vector<EvalPoint> sample_qsd(const SymmetricOperator& op, const QsdMeasure& q, int n, std::uint64_t seed) {
  const Mesh& mesh = *op.mesh;
  if (q.weights.size() != static_cast<std::size_t>(mesh.size())) throw SimulationError("QSD weights do not match the mesh");
  Rng rng(stream_seed(seed, 1));
  std::discrete_distribution<int> node(q.weights.begin(), q.weights.end());
  std::uniform_real_distribution<double> jit(-0.5, 0.5);
  std::vector<EvalPoint> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  while (static_cast<int>(out.size()) < n) {
    const EvalPoint c = mesh.nodes[static_cast<std::size_t>(node(rng))];
    for (int tries = 0; tries < 64; ++tries) {
      EvalPoint p = c;
      p[0] += jit(rng) * mesh.dx;
      if (mesh.dim() == 2) p[1] += jit(rng) * mesh.dy;
      if (mesh.domain.inside(p)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace metastab
