// metastab: landscape analysis, asymptotic predictions, spectral solves and
// exit simulations for double-well potentials, driven by an INI config.

#include <CLI11.hpp>
#include <cstdio>
#include <iomanip>
#include <iostream>

#include "metastab/asymptotics.hpp"
#include "metastab/landscape.hpp"
#include "metastab/linalg.hpp"
#include "metastab/pipeline.hpp"
#include "metastab/sde.hpp"
#include "metastab/spectral.hpp"

using namespace metastab;

namespace {

enum Exit { kOk = 0, kConfig = 2, kHWell = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::string h;
  int mesh = 0;
  long long seed = -1;
  std::string out;
  std::string format;
  bool quiet = false;
};

std::string show(const Source& s) {
  if (!s.value) return s.skipped.size() > 40 ? s.skipped.substr(0, 37) + "..." : s.skipped;
  std::ostringstream os;
  os << std::setprecision(6) << *s.value;
  if (s.stderr_ > 0) os << " +- " << std::setprecision(2) << s.stderr_;
  return os.str();
}

void print_summary(const ComparisonReport& rep, std::ostream& os) {
  const auto& l = rep.landscape;
  os << "config   " << rep.config.name << ": f = " << rep.config.expression << " on " << rep.config.domain << "\n";
  if (!l.pass) {
    os << "H-Well   FAILED: " << l.reason << "\n";
    return;
  }
  os << "H-Well   pass, H = " << l.H << ", admissible h >= " << l.floor_h << ", boundary saddles " << l.saddles.size()
     << ", m3 = " << l.m3 << "\n";
  for (const auto& w : l.warnings) os << "warning  " << w << "\n";
  if (rep.prediction.present)
    os << "regime   " << rep.prediction.regime << (rep.prediction.from_symmetry ? " (declared symmetry)" : "") << ": "
       << rep.prediction.justification << "\n";
  for (const auto& r : rep.rungs) {
    os << "\nh = " << r.h << "\n";
    os << "  " << std::left << std::setw(14) << "family" << std::setw(12) << "quantity" << std::setw(24) << "asymptotic"
       << std::setw(24) << "spectral"
       << "sde\n";
    for (const auto& row : r.rows)
      os << "  " << std::setw(14) << row.family << std::setw(12) << row.quantity << std::setw(24) << show(row.asymptotic)
         << std::setw(24) << show(row.spectral) << show(row.sde) << "\n";
    os << std::right;
    if (r.lambda3.value)
      os << "  lambda_3 = " << show(r.lambda3) << ", eigenvalues below sqrt(h)/2: " << show(r.below_threshold)
         << ", flux normalization error " << show(r.flux_normalization) << "\n";
    for (const auto& n : r.notes) os << "  note: " << n << "\n";
  }
  const auto& d = rep.diagnostics;
  if (!d.rescaled.empty()) {
    os << "\nrescaled lambda_1:";
    for (const auto& p : d.rescaled) os << "  " << p[0] << " -> " << std::setprecision(6) << p[1];
    os << "\nmonotone approach: " << show(d.rescaled_monotone) << ", splitting slope: " << show(d.splitting_slope)
       << "\n";
  }
  for (const auto& f : rep.failures) os << "failure  " << f << "\n";
}

int run(const std::string& command, const Overrides& o) {
  try {
    RunConfig cfg = load_config(o.config);
    if (!o.h.empty()) cfg.ladder = parse_number_list(o.h, "--h");
    if (o.mesh > 0) cfg.mesh = o.mesh;
    if (o.seed >= 0) cfg.sde.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (!o.format.empty()) cfg.formats = parse_word_list(o.format);
    cfg.validate();

    const ComparisonReport rep = run_pipeline(cfg, command);
    if (!o.quiet) print_summary(rep, std::cout);
    for (const auto& path : emit_report(rep, cfg.out_dir, cfg.formats))
      if (!o.quiet) std::cout << "wrote    " << path << "\n";
    if (!rep.landscape.pass) return kHWell;
    return rep.failures.empty() ? kOk : kNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const LandscapeError& e) {
    std::cerr << "H-Well failure: " << e.what() << "\n";
    return kHWell;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metastab: exit laws and quasi-stationary distributions of double-well diffusions"};
  app.require_subcommand(1);
  Overrides o;
  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "landscape check and regime"},
      {"predict", "asymptotic eigenvalues, QSD weights and exit weights"},
      {"spectrum", "finite-volume spectral solve on every rung"},
      {"simulate", "Monte Carlo exits and Fleming-Viot occupancy"},
      {"compare", "full pipeline with the three-way comparison"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->set_help_flag("--help", "print this help");  // -h would clash with --h
    sub->add_option("--config", o.config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--h", o.h, "override the h ladder, e.g. 0.2,0.1");
    sub->add_option("--mesh", o.mesh, "cells on the longest side");
    sub->add_option("--seed", o.seed, "master seed for the simulations");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "json,csv,gnuplot");
    sub->add_flag("--quiet", o.quiet, "no summary on stdout");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }
  for (const auto& [name, help] : commands)
    if (app.got_subcommand(name)) return run(name, o);
  return kConfig;
}
