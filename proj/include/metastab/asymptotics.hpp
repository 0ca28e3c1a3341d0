#pragma once

// Closed-form small-temperature predictions for a double well with degenerate
// barriers: prefactors, the 2x2 interaction model, regime, QSD repartition
// and exit-point weights.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"

namespace metastab {

class AsymptoticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a declared symmetry does not hold.
class SymmetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeriesCoeffs {
  double kappa10 = 0, kappa20 = 0;
  std::optional<double> kappa11, kappa21;  // only when the wells touch (m_3 > 0)
};

enum class EpsilonKind { exponentially_small, order_sqrt_h };
enum class EpsilonSign { unknown, negative };
const char* to_string(EpsilonKind k);
const char* to_string(EpsilonSign s);

struct InteractionModel {
  double H = 0;
  double kappa10 = 0, kappa20 = 0;
  std::optional<double> kappa11, kappa21;
  EpsilonKind epsilon_kind = EpsilonKind::exponentially_small;
  double c_eps = 0;  // |eps(h)| ~ c_eps sqrt(h) when order_sqrt_h
  EpsilonSign epsilon_sign = EpsilonSign::unknown;
  int m3 = 0;

  /// alpha_i(h) truncated to the known terms.
  double alpha(int i, double h) const;
  /// |eps(h)| at leading order; 0 when exponentially small.
  double epsilon_magnitude(double h) const;
};

/// A user-declared isometry of the domain exchanging the two minima.
struct Symmetry {
  enum class Kind { reflect_x, reflect_y, point };
  Kind kind = Kind::reflect_x;
  double c0 = 0, c1 = 0;  // reflection line / centre

  EvalPoint apply(const EvalPoint& p) const;
  std::string describe() const;
  /// Parses "reflect_x [c]", "reflect_y [c]" or "point [cx cy]".
  static Symmetry parse(const std::string& text);
};

enum class RegimeTag { H1_first_well, H1_second_well, H2, indeterminate };
const char* to_string(RegimeTag t);

struct Regime {
  RegimeTag tag = RegimeTag::indeterminate;
  bool from_symmetry = false;
  std::string justification;
  /// The well the QSD concentrates in under H1 (1 or 2), 0 otherwise.
  int selected_well() const;
};

struct QsdPrediction {
  double weight_well1 = 0, weight_well2 = 0;
  std::string error_order;
};

struct ExitWeight {
  int saddle = -1;  // index into LandscapeReport::saddles
  int well = 0;
  EvalPoint x;
  double a = 0;       // within-well share
  double weight = 0;  // predicted exit probability
};

struct ExitLawPrediction {
  std::vector<ExitWeight> weights;  // one entry per boundary generalized saddle
  std::string error_order;
  double total() const;
};

struct TwoByTwo {
  double lambda1 = 0, lambda2 = 0;
  std::optional<double> beta;  // undefined when eps = 0 and alpha1 = alpha2
};

struct EigenPrediction {
  double lambda1 = 0, lambda2 = 0;
  double rescaled1 = 0, rescaled2 = 0;  // 2 sqrt(h) exp(2H/h) lambda_i
  double relative_splitting = 0;         // (lambda2 - lambda1) / lambda1
  std::string note;
};

SeriesCoeffs leading_kappa(const LandscapeReport& report);
InteractionModel interaction_model(const LandscapeReport& report, const SeriesCoeffs& coeffs);

TwoByTwo two_by_two_eigen(double alpha1, double alpha2, double eps, double h, double H);

/// Checks f o Phi = f on a probe grid, Phi(x_1) = x_2, Phi o Phi = id and that
/// Phi maps the domain to itself. Throws SymmetryError naming the first failure.
void verify_symmetry(const LandscapeReport& report, const Symmetry& sym);

Regime classify_regime(const LandscapeReport& report, const SeriesCoeffs& coeffs, const InteractionModel& model,
                       const std::optional<Symmetry>& declared);

/// b_k from the two minimum Hessian determinants.
std::pair<double, double> qsd_b_weights(double det1, double det2);

QsdPrediction predict_qsd_weights(const Regime& regime, const LandscapeReport& report);
ExitLawPrediction predict_exit_weights(const Regime& regime, const LandscapeReport& report);
EigenPrediction predict_eigenvalues(const InteractionModel& model, const Regime& regime, double h);

/// Everything above for one landscape.
struct AsymptoticPrediction {
  SeriesCoeffs coeffs;
  InteractionModel model;
  Regime regime;
  std::optional<QsdPrediction> qsd;         // absent when the regime is indeterminate
  std::optional<ExitLawPrediction> exits;
  std::string refusal;                      // why qsd/exits are absent
};

AsymptoticPrediction predict(const LandscapeReport& report, const std::optional<Symmetry>& declared);

}  // namespace metastab
