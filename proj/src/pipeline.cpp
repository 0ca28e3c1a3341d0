#include "metastab/pipeline.hpp"

#include <json.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "metastab/asymptotics.hpp"
#include "metastab/landscape.hpp"
#include "metastab/sde.hpp"
#include "metastab/spectral.hpp"

namespace metastab {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// Skips every source of a row that a stage did not produce.
void fill_missing(ComparisonRow& row, const std::string& asym, const std::string& spec, const std::string& sde) {
  if (!row.asymptotic.value && row.asymptotic.skipped.empty()) row.asymptotic = Source::skip(asym);
  if (!row.spectral.value && row.spectral.skipped.empty()) row.spectral = Source::skip(spec);
  if (!row.sde.value && row.sde.skipped.empty()) row.sde = Source::skip(sde);
}

ComparisonRow& row_for(RungReport& r, const std::string& family, const std::string& quantity) {
  for (auto& row : r.rows)
    if (row.family == family && row.quantity == quantity) return row;
  r.rows.push_back({family, quantity, {}, {}, {}});
  return r.rows.back();
}

std::string saddle_name(int i) { return "saddle_" + std::to_string(i); }

struct SpectralRung {
  std::unique_ptr<SymmetricOperator> op;
  EigenSolution sol;
  QsdMeasure qsd;
};

double least_squares_slope(const std::vector<std::array<double, 2>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    const double x = std::log(p[0]), y = std::log(p[1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

Source Source::of(double v, double se) {
  Source s;
  s.value = v;
  s.stderr_ = se;
  return s;
}

Source Source::skip(const std::string& reason) {
  Source s;
  s.skipped = "skipped(" + reason + ")";
  return s;
}

StageSet stages_for(const std::string& command) {
  if (command == "analyze") return {false, false, false};
  if (command == "predict") return {true, false, false};
  if (command == "spectrum") return {false, true, false};
  if (command == "simulate") return {false, true, true};
  if (command == "compare") return {true, true, true};
  throw ConfigError("unknown command '" + command + "'");
}

ComparisonReport run_pipeline(const RunConfig& cfg, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const StageSet stages = stages_for(command);

  ComparisonReport rep;
  rep.command = command;
  rep.config = {cfg.name, cfg.expression, cfg.domain.describe(), cfg.ladder, cfg.mesh, to_string(cfg.flux),
                cfg.symmetry.value_or(""), cfg.sde.seed, cfg.sde.dt, cfg.sde.n_traj, cfg.sde.particles};

  std::optional<Potential> pot;
  try {
    pot = Potential::parse(cfg.expression, cfg.domain);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[potential] ") + e.what());
  }
  std::optional<Symmetry> sym;
  if (cfg.symmetry) {
    try {
      sym = Symmetry::parse(*cfg.symmetry);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[symmetry] ") + e.what());
    }
  }

  auto finish = [&] {
    rep.metadata.created_utc = utc_now();
    rep.metadata.version = kVersion;
    rep.metadata.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(report_to_json(rep, false));
    rep.metadata.content_hash = hex.str();
    return rep;
  };

  LandscapeReport land = [&] {
    try {
      return analyze_landscape(*pot);
    } catch (const LandscapeError& e) {
      LandscapeReport r(*pot);
      r.pass = false;
      r.reason = e.what();
      return r;
    }
  }();
  LandscapeSummary& ls = rep.landscape;
  ls.pass = land.pass;
  ls.reason = land.reason;
  ls.warnings = land.warnings;
  if (!land.pass) return finish();
  ls.H = land.H;
  ls.floor_h = minimal_admissible_h(land.H);
  for (int w = 1; w <= 2; ++w) ls.minima.push_back({land.minimum(w).x[0], land.minimum(w).x[1]});
  for (const auto& s : land.saddles) ls.saddles.push_back({{s.x[0], s.x[1]}, s.well, s.normal_derivative, s.tangential_det});
  ls.m3 = land.wells.m3;

  {
    std::string low;
    for (double h : cfg.ladder)
      if (h < ls.floor_h) low += (low.empty() ? "" : ", ") + fmt(h);
    if (!low.empty())
      throw ConfigError("[ladder] h = " + low + " below the admissible floor h_min = " + fmt(ls.floor_h) +
                        " (e^{-2H/h} >= 1e-12 with H = " + fmt(land.H) + ")");
  }

  AsymptoticPrediction pred;
  try {
    pred = predict(land, sym);
  } catch (const SymmetryError& e) {
    throw ConfigError(std::string("[symmetry] ") + e.what());
  }
  PredictionSummary& ps = rep.prediction;
  if (stages.asymptotic || command == "analyze") {
    ps.present = true;
    ps.regime = to_string(pred.regime.tag);
    ps.from_symmetry = pred.regime.from_symmetry;
    ps.justification = pred.regime.justification;
    ps.kappa10 = pred.coeffs.kappa10;
    ps.kappa20 = pred.coeffs.kappa20;
    ps.kappa11 = pred.coeffs.kappa11 ? Source::of(*pred.coeffs.kappa11) : Source::skip("wells do not touch");
    ps.kappa21 = pred.coeffs.kappa21 ? Source::of(*pred.coeffs.kappa21) : Source::skip("wells do not touch");
    ps.epsilon_kind = to_string(pred.model.epsilon_kind);
    ps.c_eps = pred.model.c_eps;
    ps.refusal = pred.refusal;
  }
  if (command == "analyze") return finish();

  const double radius = cfg.bin_radius > 0 ? cfg.bin_radius : default_bin_radius(land);
  if (radius > default_bin_radius(land) * (1 + 1e-12))
    throw ConfigError("[bins] radius " + fmt(radius) + " exceeds half the smallest saddle separation " +
                      fmt(default_bin_radius(land)));

  std::shared_ptr<const Mesh> mesh;
  NodeMask wells[2];
  if (stages.spectral) {
    try {
      mesh = std::make_shared<const Mesh>(build_mesh(cfg.domain, cfg.mesh));
      wells[0] = well_mask(*mesh, land, 1);
      wells[1] = well_mask(*mesh, land, 2);
    } catch (const std::exception& e) {
      rep.failures.push_back(std::string("mesh: ") + e.what());
    }
  }

  const std::string not_asym = "stage not requested";
  for (std::size_t k = 0; k < cfg.ladder.size(); ++k) {
    const double h = cfg.ladder[k];
    RungReport r;
    r.h = h;
    const double scale = 2 * std::sqrt(h) * std::exp(2 * land.H / h);

    // asymptotic route
    std::string asym_reason = not_asym;
    if (stages.asymptotic) {
      try {
        const EigenPrediction ep = predict_eigenvalues(pred.model, pred.regime, h);
        row_for(r, "eigenvalues", "lambda_1").asymptotic = Source::of(ep.lambda1);
        row_for(r, "eigenvalues", "lambda_2").asymptotic = Source::of(ep.lambda2);
        r.rescaled_asymptotic = Source::of(ep.rescaled1);
        if (pred.qsd) {
          row_for(r, "qsd_weights", "well_1").asymptotic = Source::of(pred.qsd->weight_well1);
          row_for(r, "qsd_weights", "well_2").asymptotic = Source::of(pred.qsd->weight_well2);
        }
        if (pred.exits) {
          for (const auto& w : pred.exits->weights)
            row_for(r, "exit_weights", saddle_name(w.saddle)).asymptotic = Source::of(w.weight);
          row_for(r, "exit_weights", "other").asymptotic = Source::of(0.0);
        }
        asym_reason = pred.refusal.empty() ? "no asymptotic value" : pred.refusal;
      } catch (const std::exception& e) {
        rep.failures.push_back("asymptotic h=" + fmt(h) + ": " + e.what());
        asym_reason = std::string("failed: ") + e.what();
      }
    } else {
      r.rescaled_asymptotic = Source::skip(not_asym);
    }

    // spectral route
    std::string spec_reason = "stage not requested";
    SpectralRung sp;
    if (stages.spectral && mesh) {
      try {
        sp.op = std::make_unique<SymmetricOperator>(discretize_generator(*pot, h, mesh));
        sp.sol = lowest_spectrum(*sp.op, 3);
        sp.qsd = qsd_measure(*sp.op, sp.sol);
        const auto& ev = sp.sol.eigenvalues;
        row_for(r, "eigenvalues", "lambda_1").spectral = Source::of(ev[0]);
        row_for(r, "eigenvalues", "lambda_2").spectral = Source::of(ev[1]);
        r.lambda3 = Source::of(ev[2]);
        r.below_threshold = Source::of(subspace_dimension_below(*sp.op, std::sqrt(h) / 2));
        r.rescaled_spectral = Source::of(scale * ev[0]);
        r.relative_splitting = Source::of((ev[1] - ev[0]) / (ev[1] + ev[0]));
        row_for(r, "qsd_weights", "well_1").spectral = Source::of(region_mass(sp.qsd, wells[0]));
        row_for(r, "qsd_weights", "well_2").spectral = Source::of(region_mass(sp.qsd, wells[1]));
        const auto w = exit_face_weights(*sp.op, sp.sol, cfg.flux);
        std::vector<double> bins(land.saddles.size(), 0.0);
        double other = 0, total = 0;
        for (std::size_t f = 0; f < w.size(); ++f) {
          const EvalPoint& p = mesh->faces[f].point;
          int best = -1;
          double bd = radius;
          for (std::size_t s = 0; s < land.saddles.size(); ++s) {
            const double d = std::hypot(p[0] - land.saddles[s].x[0], p[1] - land.saddles[s].x[1]);
            if (d <= bd) bd = d, best = static_cast<int>(s);
          }
          (best < 0 ? other : bins[static_cast<std::size_t>(best)]) += w[f];
          total += w[f];
        }
        for (std::size_t s = 0; s < bins.size(); ++s)
          row_for(r, "exit_weights", saddle_name(static_cast<int>(s))).spectral = Source::of(bins[s]);
        row_for(r, "exit_weights", "other").spectral = Source::of(other);
        r.flux_normalization = Source::of(total - 1);
        spec_reason = "no spectral value";
      } catch (const std::exception& e) {
        rep.failures.push_back("spectral h=" + fmt(h) + ": " + e.what());
        spec_reason = std::string("failed: ") + e.what();
        sp.op.reset();
      }
    } else if (stages.spectral) {
      spec_reason = "mesh construction failed";
    }
    if (!r.lambda3.value) {
      for (Source* s : {&r.lambda3, &r.below_threshold, &r.rescaled_spectral, &r.relative_splitting,
                        &r.flux_normalization})
        *s = Source::skip(spec_reason);
    }

    // simulation route
    std::string sde_reason = "stage not requested";
    r.mc_censored = Source::skip(sde_reason);
    r.fv_halves_agree = Source::skip(sde_reason);
    if (stages.sde && !cfg.sde.enabled) sde_reason = "disabled in [sde]";
    if (stages.sde && cfg.sde.enabled && !sp.op) sde_reason = "needs the spectral QSD to draw start points";
    if (stages.sde && cfg.sde.enabled && sp.op) {
      SimConfig sc;
      sc.h = h;
      sc.dt = cfg.sde.dt;
      sc.n_traj = cfg.sde.n_traj;
      sc.master_seed = stream_seed(cfg.sde.seed, k);
      sc.bridge_correction = cfg.sde.bridge;
      sc.max_steps = cfg.sde.max_steps;
      sc.workers = cfg.sde.workers;
      sde_reason = "no Monte Carlo estimator for this quantity";
      const double lambda1 = sp.sol.eigenvalues[0];
      const double exit_steps = cfg.sde.n_traj / (lambda1 * cfg.sde.dt);
      r.fv_halves_agree = Source::skip("no Fleming-Viot run");
      try {
        for (const auto& w : sc.validate(*pot)) r.notes.push_back("sde: " + w);
        if (exit_steps > cfg.sde.budget) {
          const std::string why = "about " + fmt(exit_steps) + " Euler steps exceed the budget " + fmt(cfg.sde.budget);
          row_for(r, "eigenvalues", "lambda_1").sde = Source::skip(why);
          for (std::size_t s = 0; s < land.saddles.size(); ++s)
            row_for(r, "exit_weights", saddle_name(static_cast<int>(s))).sde = Source::skip(why);
          row_for(r, "exit_weights", "other").sde = Source::skip(why);
          r.mc_censored = Source::skip(why);
        } else {
          const auto starts = sample_qsd(*sp.op, sp.qsd, cfg.sde.n_traj, sc.master_seed);
          const ExitRecordSet rec = simulate_killed_paths(*pot, starts, sc);
          const ExitHistogram hist = exit_histogram(rec, land, radius);
          const double n = static_cast<double>(hist.total);
          for (const auto& b : hist.bins)
            row_for(r, "exit_weights", saddle_name(b.saddle)).sde = Source::of(b.frequency, b.stderr_);
          const double po = hist.other_frequency;
          row_for(r, "exit_weights", "other").sde = Source::of(po, std::sqrt(po * (1 - po) / n));
          r.mc_censored = Source::of(rec.censored);
          const long exited = static_cast<long>(rec.records.size()) - rec.censored;
          if (rec.censored == 0 && rec.mean_time > 0) {
            // exit times from the QSD are exponential with rate lambda_1
            const double l = 1 / rec.mean_time;
            row_for(r, "eigenvalues", "lambda_1").sde = Source::of(l, l / std::sqrt(static_cast<double>(exited)));
          } else {
            row_for(r, "eigenvalues", "lambda_1").sde = Source::skip("censored trajectories bias the mean exit time");
          }
        }
        const int np = cfg.sde.particles;
        const double fv_steps = np * cfg.sde.t_total / cfg.sde.dt;
        if (np == 0) {
          row_for(r, "qsd_weights", "well_1").sde = Source::skip("Fleming-Viot disabled (particles = 0)");
          row_for(r, "qsd_weights", "well_2").sde = Source::skip("Fleming-Viot disabled (particles = 0)");
        } else if (fv_steps > cfg.sde.budget) {
          const std::string why = "about " + fmt(fv_steps) + " Euler steps exceed the budget " + fmt(cfg.sde.budget);
          row_for(r, "qsd_weights", "well_1").sde = Source::skip(why);
          row_for(r, "qsd_weights", "well_2").sde = Source::skip(why);
        } else {
          FleetConfig fleet;
          fleet.n_particles = np;
          fleet.t_total = cfg.sde.t_total;
          fleet.burn_fraction = cfg.sde.burn_fraction;
          fleet.record_every = std::max(1, static_cast<int>(std::lround(0.01 / cfg.sde.dt)));
          const auto starts = cfg.sde.start == "qsd" ? sample_qsd(*sp.op, sp.qsd, np, sc.master_seed + 1)
                                                     : uniform_interior(cfg.domain, np, sc.master_seed + 1);
          const auto ens = fleming_viot_qsd(*pot, starts, sc, fleet, &land);
          const Occupancy m = ens.mean();
          const double se1 = std::sqrt(m.c1 * (1 - m.c1) / np), se2 = std::sqrt(m.c2 * (1 - m.c2) / np);
          row_for(r, "qsd_weights", "well_1").sde = Source::of(m.c1, se1);
          row_for(r, "qsd_weights", "well_2").sde = Source::of(m.c2, se2);
          const double gap = sp.sol.eigenvalues[1] - sp.sol.eigenvalues[0];
          const double burn = cfg.sde.burn_fraction * cfg.sde.t_total;
          if (cfg.sde.start == "uniform" && burn * gap < 3)
            r.notes.push_back("sde: Fleming-Viot burn-in " + fmt(burn) + " is shorter than 3/(lambda_2 - lambda_1) = " +
                              fmt(3 / gap) + "; the split between the wells may not have relaxed");
          const bool agree = ens.halves_agree();
          r.fv_halves_agree = Source::of(agree ? 1 : 0);
          if (!agree) r.notes.push_back("sde: Fleming-Viot occupancy halves differ by more than 2 sigma");
        }
      } catch (const std::exception& e) {
        rep.failures.push_back("sde h=" + fmt(h) + ": " + e.what());
        sde_reason = std::string("failed: ") + e.what();
      }
    }
    if (!stages.asymptotic) asym_reason = not_asym;
    for (auto& row : r.rows) fill_missing(row, asym_reason, spec_reason, sde_reason);
    rep.rungs.push_back(std::move(r));
  }

  // convergence diagnostics
  Diagnostics& dg = rep.diagnostics;
  for (const auto& r : rep.rungs) {
    if (r.rescaled_spectral.value) dg.rescaled.push_back({r.h, *r.rescaled_spectral.value});
    if (r.rescaled_spectral.value && r.rescaled_asymptotic.value)
      dg.rescaled_deviation.push_back(std::abs(*r.rescaled_spectral.value / *r.rescaled_asymptotic.value - 1));
    if (r.relative_splitting.value && *r.relative_splitting.value > 0)
      dg.splitting.push_back({r.h, *r.relative_splitting.value});
  }
  if (dg.rescaled_deviation.size() >= 2 && dg.rescaled_deviation.size() == rep.rungs.size()) {
    bool mono = true;
    for (std::size_t i = 1; i < dg.rescaled_deviation.size(); ++i)
      mono = mono && dg.rescaled_deviation[i] <= dg.rescaled_deviation[i - 1];
    dg.rescaled_monotone = Source::of(mono ? 1 : 0);
  } else {
    dg.rescaled_monotone = Source::skip("needs spectral and asymptotic values on at least two rungs");
  }
  if (dg.splitting.size() >= 2)
    dg.splitting_slope = Source::of(least_squares_slope(dg.splitting));
  else
    dg.splitting_slope = Source::skip("needs a positive splitting on at least two rungs");
  return finish();
}

// ---------------------------------------------------------------------------
// serialization

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

Json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double num_from(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw std::runtime_error("expected a number, got '" + s + "'");
}

Json to_j(const Source& s) {
  if (!s.value) return s.skipped;
  if (s.stderr_ == 0) return num(*s.value);
  return Json{{"value", num(*s.value)}, {"stderr", s.stderr_}};
}

Source source_from(const Json& j) {
  Source s;
  if (j.is_object()) {
    s.value = num_from(j.at("value"));
    s.stderr_ = j.at("stderr").get<double>();
  } else if (j.is_string() && j.get<std::string>().rfind("skipped(", 0) == 0) {
    s.skipped = j.get<std::string>();
  } else {
    s.value = num_from(j);
  }
  return s;
}

Json pairs(const std::vector<std::array<double, 2>>& v) {
  Json a = Json::array();
  for (const auto& p : v) a.push_back({num(p[0]), num(p[1])});
  return a;
}

std::vector<std::array<double, 2>> pairs_from(const Json& j) {
  std::vector<std::array<double, 2>> v;
  for (const auto& p : j) v.push_back({num_from(p.at(0)), num_from(p.at(1))});
  return v;
}

Json body(const ComparisonReport& rep) {
  Json j;
  j["schema"] = rep.schema;
  j["command"] = rep.command;
  const auto& c = rep.config;
  j["config"] = {{"name", c.name},   {"expression", c.expression}, {"domain", c.domain}, {"ladder", c.ladder},
                 {"mesh", c.mesh},   {"flux", c.flux},             {"symmetry", c.symmetry}, {"seed", c.seed},
                 {"dt", c.dt},       {"n_traj", c.n_traj},         {"particles", c.particles}};
  const auto& l = rep.landscape;
  Json sad = Json::array();
  for (const auto& s : l.saddles)
    sad.push_back({{"x", s.x}, {"well", s.well}, {"normal_derivative", num(s.normal_derivative)},
                   {"tangential_det", num(s.tangential_det)}});
  j["landscape"] = {{"pass", l.pass},       {"reason", l.reason},   {"H", num(l.H)},
                    {"floor_h", num(l.floor_h)}, {"minima", pairs(l.minima)}, {"saddles", sad},
                    {"m3", l.m3},           {"warnings", l.warnings}};
  const auto& p = rep.prediction;
  j["prediction"] = {{"present", p.present},         {"regime", p.regime},         {"from_symmetry", p.from_symmetry},
                     {"justification", p.justification}, {"kappa10", num(p.kappa10)}, {"kappa20", num(p.kappa20)},
                     {"kappa11", to_j(p.kappa11)},   {"kappa21", to_j(p.kappa21)}, {"epsilon_kind", p.epsilon_kind},
                     {"c_eps", num(p.c_eps)},        {"refusal", p.refusal}};
  Json rungs = Json::array();
  for (const auto& r : rep.rungs) {
    Json rows = Json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"family", row.family},
                      {"quantity", row.quantity},
                      {"asymptotic", to_j(row.asymptotic)},
                      {"spectral", to_j(row.spectral)},
                      {"sde", to_j(row.sde)}});
    rungs.push_back({{"h", r.h},
                     {"rows", rows},
                     {"lambda_3", to_j(r.lambda3)},
                     {"below_threshold", to_j(r.below_threshold)},
                     {"rescaled_spectral", to_j(r.rescaled_spectral)},
                     {"rescaled_asymptotic", to_j(r.rescaled_asymptotic)},
                     {"relative_splitting", to_j(r.relative_splitting)},
                     {"flux_normalization", to_j(r.flux_normalization)},
                     {"mc_censored", to_j(r.mc_censored)},
                     {"fv_halves_agree", to_j(r.fv_halves_agree)},
                     {"notes", r.notes}});
  }
  j["rungs"] = rungs;
  const auto& d = rep.diagnostics;
  Json dev = Json::array();
  for (double v : d.rescaled_deviation) dev.push_back(num(v));
  j["diagnostics"] = {{"rescaled", pairs(d.rescaled)},
                      {"rescaled_deviation", dev},
                      {"rescaled_monotone", to_j(d.rescaled_monotone)},
                      {"splitting", pairs(d.splitting)},
                      {"splitting_slope", to_j(d.splitting_slope)}};
  j["failures"] = rep.failures;
  return j;
}

}  // namespace

std::string report_to_json(const ComparisonReport& rep, bool with_metadata) {
  Json j = body(rep);
  if (with_metadata)
    j["metadata"] = {{"created_utc", rep.metadata.created_utc},
                     {"version", rep.metadata.version},
                     {"elapsed_seconds", rep.metadata.elapsed_seconds},
                     {"content_hash", rep.metadata.content_hash}};
  return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  ComparisonReport rep;
  rep.schema = j.at("schema").get<std::string>();
  if (rep.schema != "metastab-report/1") throw std::runtime_error("unsupported report schema '" + rep.schema + "'");
  rep.command = j.at("command").get<std::string>();
  const auto& c = j.at("config");
  auto& ce = rep.config;
  ce.name = c.at("name");
  ce.expression = c.at("expression");
  ce.domain = c.at("domain");
  ce.ladder = c.at("ladder").get<std::vector<double>>();
  ce.mesh = c.at("mesh");
  ce.flux = c.at("flux");
  ce.symmetry = c.at("symmetry");
  ce.seed = c.at("seed");
  ce.dt = c.at("dt");
  ce.n_traj = c.at("n_traj");
  ce.particles = c.at("particles");

  const auto& l = j.at("landscape");
  auto& ls = rep.landscape;
  ls.pass = l.at("pass");
  ls.reason = l.at("reason");
  ls.H = num_from(l.at("H"));
  ls.floor_h = num_from(l.at("floor_h"));
  ls.minima = pairs_from(l.at("minima"));
  for (const auto& s : l.at("saddles"))
    ls.saddles.push_back({s.at("x").get<std::array<double, 2>>(), s.at("well").get<int>(),
                          num_from(s.at("normal_derivative")), num_from(s.at("tangential_det"))});
  ls.m3 = l.at("m3");
  ls.warnings = l.at("warnings").get<std::vector<std::string>>();

  const auto& p = j.at("prediction");
  auto& ps = rep.prediction;
  ps.present = p.at("present");
  ps.regime = p.at("regime");
  ps.from_symmetry = p.at("from_symmetry");
  ps.justification = p.at("justification");
  ps.kappa10 = num_from(p.at("kappa10"));
  ps.kappa20 = num_from(p.at("kappa20"));
  ps.kappa11 = source_from(p.at("kappa11"));
  ps.kappa21 = source_from(p.at("kappa21"));
  ps.epsilon_kind = p.at("epsilon_kind");
  ps.c_eps = num_from(p.at("c_eps"));
  ps.refusal = p.at("refusal");

  for (const auto& rj : j.at("rungs")) {
    RungReport r;
    r.h = rj.at("h");
    for (const auto& row : rj.at("rows"))
      r.rows.push_back({row.at("family"), row.at("quantity"), source_from(row.at("asymptotic")),
                        source_from(row.at("spectral")), source_from(row.at("sde"))});
    r.lambda3 = source_from(rj.at("lambda_3"));
    r.below_threshold = source_from(rj.at("below_threshold"));
    r.rescaled_spectral = source_from(rj.at("rescaled_spectral"));
    r.rescaled_asymptotic = source_from(rj.at("rescaled_asymptotic"));
    r.relative_splitting = source_from(rj.at("relative_splitting"));
    r.flux_normalization = source_from(rj.at("flux_normalization"));
    r.mc_censored = source_from(rj.at("mc_censored"));
    r.fv_halves_agree = source_from(rj.at("fv_halves_agree"));
    r.notes = rj.at("notes").get<std::vector<std::string>>();
    rep.rungs.push_back(std::move(r));
  }
  const auto& d = j.at("diagnostics");
  auto& dg = rep.diagnostics;
  dg.rescaled = pairs_from(d.at("rescaled"));
  for (const auto& v : d.at("rescaled_deviation")) dg.rescaled_deviation.push_back(num_from(v));
  dg.rescaled_monotone = source_from(d.at("rescaled_monotone"));
  dg.splitting = pairs_from(d.at("splitting"));
  dg.splitting_slope = source_from(d.at("splitting_slope"));
  rep.failures = j.at("failures").get<std::vector<std::string>>();
  if (j.contains("metadata")) {
    const auto& m = j.at("metadata");
    rep.metadata = {m.at("created_utc"), m.at("version"), m.at("elapsed_seconds"), m.at("content_hash")};
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV and gnuplot

namespace {

std::string csv_cell(const Source& s) {
  if (!s.value) return "\"" + s.skipped + "\"";
  std::ostringstream os;
  os << std::setprecision(17) << *s.value;
  return os.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content, std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
  written.push_back(path.string());
}

}  // namespace

std::string family_csv(const ComparisonReport& rep, const std::string& family) {
  std::ostringstream os;
  os << "h,quantity,asymptotic,spectral,sde,sde_stderr\n";
  for (const auto& r : rep.rungs)
    for (const auto& row : r.rows) {
      if (row.family != family) continue;
      os << std::setprecision(17) << r.h << ',' << csv_quote(row.quantity) << ',' << csv_cell(row.asymptotic) << ','
         << csv_cell(row.spectral) << ',' << csv_cell(row.sde) << ',' << row.sde.stderr_ << '\n';
    }
  return os.str();
}

std::vector<std::string> emit_report(const ComparisonReport& rep, const std::string& dir,
                                     const std::vector<std::string>& formats) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  const fs::path root(dir);
  for (const auto& f : formats) {
    if (f == "json") {
      write_file(root / "report.json", report_to_json(rep), written);
    } else if (f == "csv") {
      for (const char* fam : {"eigenvalues", "qsd_weights", "exit_weights"})
        write_file(root / (std::string(fam) + ".csv"), family_csv(rep, fam), written);
      // one row per rung and comparison family
      std::ostringstream os;
      os << "h,family,rows,complete_rows\n";
      for (const auto& r : rep.rungs)
        for (const char* fam : {"eigenvalues", "qsd_weights", "exit_weights"}) {
          int n = 0, full = 0;
          for (const auto& row : r.rows)
            if (row.family == fam) {
              ++n;
              full += row.asymptotic.value && row.spectral.value && row.sde.value;
            }
          os << std::setprecision(17) << r.h << ',' << fam << ',' << n << ',' << full << '\n';
        }
      write_file(root / "comparisons.csv", os.str(), written);
    } else if (f == "gnuplot") {
      std::ostringstream a;
      a << "# h  2*sqrt(h)*exp(2H/h)*lambda_1 (spectral)\n" << std::setprecision(17);
      for (const auto& p : rep.diagnostics.rescaled) a << p[0] << ' ' << p[1] << '\n';
      write_file(root / "rescaled_eigenvalue.dat", a.str(), written);
      std::ostringstream b;
      b << "# h  (lambda_2-lambda_1)/(lambda_2+lambda_1) (spectral)\n" << std::setprecision(17);
      for (const auto& p : rep.diagnostics.splitting) b << p[0] << ' ' << p[1] << '\n';
      write_file(root / "splitting.dat", b.str(), written);
    } else {
      throw std::runtime_error("unknown report format '" + f + "'");
    }
  }
  return written;
}

}  // namespace metastab
