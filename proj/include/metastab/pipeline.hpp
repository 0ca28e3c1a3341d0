#pragma once

// parse -> landscape -> asymptotics -> spectral -> simulation -> comparison,
// and the report writers. Every number in a comparison row is tagged by the
// route that produced it: asymptotic, spectral or sde.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metastab/config.hpp"

namespace metastab {

/// One value from one route, or the reason it is absent.
struct Source {
  std::optional<double> value;
  double stderr_ = 0;   // sampling error, sde only
  std::string skipped;  // "skipped(reason)" when value is empty

  static Source of(double v, double se = 0);
  static Source skip(const std::string& reason);
  bool operator==(const Source&) const = default;
};

struct ComparisonRow {
  std::string family;    // eigenvalues | qsd_weights | exit_weights
  std::string quantity;  // lambda_1, well_1, saddle_0, other, ...
  Source asymptotic, spectral, sde;
  bool operator==(const ComparisonRow&) const = default;
};

struct RungReport {
  double h = 0;
  std::vector<ComparisonRow> rows;
  Source lambda3;              // spectral
  Source below_threshold;      // eigenvalues under sqrt(h)/2, spectral
  Source rescaled_spectral;    // 2 sqrt(h) e^{2H/h} lambda_1
  Source rescaled_asymptotic;
  Source relative_splitting;   // (lambda_2 - lambda_1)/(lambda_2 + lambda_1), spectral
  Source flux_normalization;   // exit functional of F = 1, minus 1
  Source mc_censored;
  Source fv_halves_agree;      // 1 when the two halves of the occupancy series agree within 2 sigma
  std::vector<std::string> notes;
  bool operator==(const RungReport&) const = default;
};

struct SaddleSummary {
  std::array<double, 2> x{};
  int well = 0;
  double normal_derivative = 0;
  double tangential_det = 1;
  bool operator==(const SaddleSummary&) const = default;
};

struct LandscapeSummary {
  bool pass = false;
  std::string reason;
  double H = 0;
  double floor_h = 0;  // smallest admissible h
  std::vector<std::array<double, 2>> minima;
  std::vector<SaddleSummary> saddles;
  int m3 = 0;
  std::vector<std::string> warnings;
  bool operator==(const LandscapeSummary&) const = default;
};

struct PredictionSummary {
  bool present = false;
  std::string regime;
  bool from_symmetry = false;
  std::string justification;
  double kappa10 = 0, kappa20 = 0;
  Source kappa11, kappa21;
  std::string epsilon_kind;
  double c_eps = 0;
  std::string refusal;
  bool operator==(const PredictionSummary&) const = default;
};

struct Diagnostics {
  std::vector<std::array<double, 2>> rescaled;  // (h, spectral rescaled lambda_1)
  std::vector<double> rescaled_deviation;       // |spectral / asymptotic - 1| per rung
  Source rescaled_monotone;                     // 1 when the deviation shrinks along the ladder
  std::vector<std::array<double, 2>> splitting; // (h, relative splitting)
  Source splitting_slope;                       // log-log least squares
  bool operator==(const Diagnostics&) const = default;
};

struct ConfigEcho {
  std::string name, expression, domain;
  std::vector<double> ladder;
  int mesh = 0;
  std::string flux;
  std::string symmetry;
  std::uint64_t seed = 0;
  double dt = 0;
  int n_traj = 0, particles = 0;
  bool operator==(const ConfigEcho&) const = default;
};

struct ReportMetadata {
  std::string created_utc;
  std::string version;
  double elapsed_seconds = 0;
  std::string content_hash;  // FNV-1a of the report without this field
  bool operator==(const ReportMetadata&) const = default;
};

struct ComparisonReport {
  std::string schema = "metastab-report/1";
  std::string command;
  ConfigEcho config;
  LandscapeSummary landscape;
  PredictionSummary prediction;
  std::vector<RungReport> rungs;
  Diagnostics diagnostics;
  std::vector<std::string> failures;  // stages that threw, with the message
  ReportMetadata metadata;

  bool complete() const { return landscape.pass && failures.empty(); }
  bool operator==(const ComparisonReport&) const = default;
};

struct StageSet {
  bool asymptotic = false, spectral = false, sde = false;
};
/// analyze | predict | spectrum | simulate | compare. Throws ConfigError otherwise.
StageSet stages_for(const std::string& command);

/// Throws ConfigError for invalid input (including rungs below the floor).
/// [H-Well] failures are reported with landscape.pass = false; later stages
/// that throw are recorded in `failures` and their values marked skipped.
ComparisonReport run_pipeline(const RunConfig& cfg, const std::string& command = "compare");

std::uint64_t fnv1a(std::string_view bytes);
/// Pretty JSON; `with_metadata = false` gives the hashed, comparable form.
std::string report_to_json(const ComparisonReport& rep, bool with_metadata = true);
ComparisonReport report_from_json(const std::string& text);

/// Writes report.json, the CSV tables and the gnuplot files into `dir`.
/// Returns the written paths; throws std::runtime_error naming the path on I/O failure.
std::vector<std::string> emit_report(const ComparisonReport& rep, const std::string& dir,
                                     const std::vector<std::string>& formats);

/// Rows of one family flattened to CSV, header included.
std::string family_csv(const ComparisonReport& rep, const std::string& family);

}  // namespace metastab
