#include "metastab/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace metastab {

const char* to_string(EpsilonKind k) {
  return k == EpsilonKind::exponentially_small ? "exponentially_small" : "order_sqrt_h";
}
const char* to_string(EpsilonSign s) { return s == EpsilonSign::unknown ? "unknown" : "negative"; }

const char* to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::H1_first_well: return "H1_first_well";
    case RegimeTag::H1_second_well: return "H1_second_well";
    case RegimeTag::H2: return "H2";
    case RegimeTag::indeterminate: return "indeterminate";
  }
  return "?";
}

int Regime::selected_well() const {
  if (tag == RegimeTag::H1_first_well) return 1;
  if (tag == RegimeTag::H1_second_well) return 2;
  return 0;
}

double ExitLawPrediction::total() const {
  double s = 0;
  for (const auto& w : weights) s += w.weight;
  return s;
}

double InteractionModel::alpha(int i, double h) const {
  const double k0 = i == 1 ? kappa10 : kappa20;
  const auto& k1 = i == 1 ? kappa11 : kappa21;
  return k0 + (k1 ? *k1 * std::sqrt(h) : 0.0);
}

double InteractionModel::epsilon_magnitude(double h) const {
  return epsilon_kind == EpsilonKind::order_sqrt_h ? c_eps * std::sqrt(h) : 0.0;
}

// ------------------------------------------------------------ symmetry

EvalPoint Symmetry::apply(const EvalPoint& p) const {
  EvalPoint q = p;
  switch (kind) {
    case Kind::reflect_x:
      q[0] = 2 * c0 - p[0];
      break;
    case Kind::reflect_y:
      q[1] = 2 * c0 - p[1];
      break;
    case Kind::point:
      q[0] = 2 * c0 - p[0];
      if (p.dim == 2) q[1] = 2 * c1 - p[1];
      break;
  }
  return q;
}

std::string Symmetry::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::reflect_x: os << "reflect_x " << c0; break;
    case Kind::reflect_y: os << "reflect_y " << c0; break;
    case Kind::point: os << "point " << c0 << " " << c1; break;
  }
  return os.str();
}

Symmetry Symmetry::parse(const std::string& text) {
  std::istringstream is(text);
  std::string name;
  is >> name;
  Symmetry s;
  if (name == "reflect_x") {
    s.kind = Kind::reflect_x;
  } else if (name == "reflect_y") {
    s.kind = Kind::reflect_y;
  } else if (name == "point") {
    s.kind = Kind::point;
  } else {
    throw std::invalid_argument("unknown symmetry '" + name + "' (expected reflect_x, reflect_y or point)");
  }
  std::vector<double> args;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("malformed number '" + tok + "' in symmetry '" + text + "'");
    args.push_back(v);
  }
  const std::size_t max_args = s.kind == Kind::point ? 2 : 1;
  if (args.size() > max_args) throw std::invalid_argument("too many parameters in symmetry '" + text + "'");
  if (!args.empty()) s.c0 = args[0];
  if (args.size() > 1) s.c1 = args[1];
  return s;
}

// ------------------------------------------------------------ prefactors

SeriesCoeffs leading_kappa(const LandscapeReport& report) {
  if (!report.pass) throw AsymptoticsError("landscape does not satisfy the double-well hypothesis: " + report.reason);
  SeriesCoeffs c;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 1; i <= 2; ++i) {
    const double det = report.minimum(i).hess_det;
    double k0 = 0;
    for (int idx : report.contacts(i)) {
      const auto& z = report.saddles[static_cast<std::size_t>(idx)];
      k0 += 2 * z.normal_derivative / sqrt_pi * std::sqrt(det) / std::sqrt(z.tangential_det);
    }
    (i == 1 ? c.kappa10 : c.kappa20) = k0;
    if (report.wells.m3 > 0) {
      double k1 = 0;
      for (int idx : report.wells.connecting) {
        const auto& z = report.points[static_cast<std::size_t>(idx)];
        k1 += std::abs(*z.negative_eigenvalue) * std::sqrt(det) / (std::numbers::pi * std::sqrt(std::abs(z.hess_det)));
      }
      (i == 1 ? c.kappa11 : c.kappa21) = k1;
    }
  }
  return c;
}

InteractionModel interaction_model(const LandscapeReport& report, const SeriesCoeffs& coeffs) {
  if (!report.pass) throw AsymptoticsError("landscape does not satisfy the double-well hypothesis: " + report.reason);
  InteractionModel m;
  m.H = report.H;
  m.kappa10 = coeffs.kappa10;
  m.kappa20 = coeffs.kappa20;
  m.kappa11 = coeffs.kappa11;
  m.kappa21 = coeffs.kappa21;
  m.m3 = report.wells.m3;
  m.epsilon_kind = m.m3 > 0 ? EpsilonKind::order_sqrt_h : EpsilonKind::exponentially_small;
  if (m.m3 > 0) {
    const double d1 = report.minimum(1).hess_det, d2 = report.minimum(2).hess_det;
    for (int idx : report.wells.connecting) {
      const auto& z = report.points[static_cast<std::size_t>(idx)];
      const double base = std::sqrt(std::abs(*z.negative_eigenvalue)) / std::sqrt(std::numbers::pi) /
                          std::pow(std::abs(z.hess_det), 0.25);
      m.c_eps += base * std::pow(d1, 0.25) * base * std::pow(d2, 0.25);
    }
  }
  return m;
}

TwoByTwo two_by_two_eigen(double alpha1, double alpha2, double eps, double h, double H) {
  if (!(h > 0)) throw std::invalid_argument("h must be positive");
  if (!(H > 0)) throw std::invalid_argument("H must be positive");
  const double d = alpha2 - alpha1;
  const double s = std::hypot(d, 2 * eps);
  const double sum = alpha1 + alpha2;
  const double scale = std::exp(-2 * H / h) / (4 * std::sqrt(h));
  double mu2 = sum + s;
  double mu1 = sum - s;
  if (sum > 0) {
    mu1 = 4 * (alpha1 * alpha2 - eps * eps) / mu2;  // product of the roots, no cancellation
  } else {
    mu2 = 4 * (alpha1 * alpha2 - eps * eps) / mu1;
  }
  TwoByTwo out;
  out.lambda1 = mu1 * scale;
  out.lambda2 = mu2 * scale;
  if (eps == 0 && d == 0) return out;
  if (d >= 0) {
    out.beta = -2 * eps / (d + s);
  } else if (eps != 0) {
    out.beta = -(s - d) / (2 * eps);  // same value, stable when alpha2 < alpha1
  } else {
    out.beta = -std::copysign(std::numeric_limits<double>::infinity(), eps);
  }
  return out;
}

// ------------------------------------------------------------ regime

void verify_symmetry(const LandscapeReport& report, const Symmetry& sym) {
  const Potential& pot = report.potential;
  const Domain& dom = pot.domain();
  if (dom.dim() == 1 && sym.kind == Symmetry::Kind::reflect_y)
    throw SymmetryError("reflect_y is not defined in one dimension");
  const double diam = dom.diameter();
  auto fmt = [](const EvalPoint& p) {
    std::ostringstream os;
    os.precision(12);
    os << "(" << p[0];
    if (p.dim == 2) os << ", " << p[1];
    os << ")";
    return os.str();
  };
  std::vector<EvalPoint> probe = dom.interior_probe(64);
  for (const auto& p : dom.boundary_probe(256)) probe.push_back(p);
  for (const auto& p : probe) {
    const EvalPoint q = sym.apply(p);
    const EvalPoint back = sym.apply(q);
    if (std::hypot(back[0] - p[0], back[1] - p[1]) > 1e-12 * diam)
      throw SymmetryError("declared symmetry is not an involution at " + fmt(p));
    if (dom.distance_to_boundary(q) < -1e-10 * diam)
      throw SymmetryError("declared symmetry maps " + fmt(p) + " outside the domain");
    const double fp = pot.value(p), fq = pot.value(q);
    if (std::abs(fp - fq) > 1e-10 * std::max(1.0, std::abs(fp)))
      throw SymmetryError("f o Phi != f at probe point " + fmt(p));
  }
  if (report.x1 >= 0 && report.x2 >= 0) {
    const EvalPoint q = sym.apply(report.minimum(1).x);
    const EvalPoint& x2 = report.minimum(2).x;
    if (std::hypot(q[0] - x2[0], q[1] - x2[1]) > 1e-8 * diam)
      throw SymmetryError("declared symmetry does not map x_1 to x_2");
  }
}

Regime classify_regime(const LandscapeReport& report, const SeriesCoeffs& coeffs, const InteractionModel& model,
                       const std::optional<Symmetry>& declared) {
  Regime r;
  auto equal = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); };
  std::ostringstream why;
  why.precision(12);
  if (declared) {
    verify_symmetry(report, *declared);
    r.tag = RegimeTag::H2;
    r.from_symmetry = true;
    why << "declared symmetry '" << declared->describe() << "' verified: f o Phi = f, Phi(x_1) = x_2";
    r.justification = why.str();
    return r;
  }
  const bool k0_equal = equal(coeffs.kappa10, coeffs.kappa20);
  const RegimeTag h1 = coeffs.kappa10 < coeffs.kappa20 ? RegimeTag::H1_first_well : RegimeTag::H1_second_well;
  if (model.m3 > 0) {
    if (!k0_equal) {
      r.tag = h1;
      why << "wells touch (m_3 = " << model.m3 << "); kappa_{1,0} = " << coeffs.kappa10 << " != kappa_{2,0} = "
          << coeffs.kappa20 << "; the well with the smaller kappa_{i,0} is selected";
    } else if (equal(*coeffs.kappa11, *coeffs.kappa21)) {
      r.tag = RegimeTag::H2;
      why << "wells touch (m_3 = " << model.m3 << "); kappa_{1,0} = kappa_{2,0} = " << coeffs.kappa10
          << " and kappa_{1,1} = kappa_{2,1} = " << *coeffs.kappa11;
    } else {
      r.tag = RegimeTag::indeterminate;
      why << "wells touch; kappa_{1,0} = kappa_{2,0} but kappa_{1,1} = " << *coeffs.kappa11
          << " != kappa_{2,1} = " << *coeffs.kappa21 << ": alpha_1 - alpha_2 and eps are of the same order";
    }
  } else if (!k0_equal) {
    r.tag = h1;
    why << "wells do not touch (m_3 = 0); kappa_{1,0} = " << coeffs.kappa10 << " != kappa_{2,0} = " << coeffs.kappa20
        << "; the well with the smaller kappa_{i,0} is selected";
  } else {
    r.tag = RegimeTag::indeterminate;
    why << "wells do not touch and kappa_{1,0} = kappa_{2,0}; equality of all higher coefficients cannot be "
           "decided from leading-order data and no symmetry was declared";
  }
  r.justification = why.str();
  return r;
}

std::pair<double, double> qsd_b_weights(double det1, double det2) {
  const double q1 = std::pow(det1, 0.25), q2 = std::pow(det2, 0.25);
  const double b1 = q2 / (q1 + q2);
  return {b1, 1.0 - b1};
}

QsdPrediction predict_qsd_weights(const Regime& regime, const LandscapeReport& report) {
  if (regime.tag == RegimeTag::indeterminate)
    throw AsymptoticsError("regime is indeterminate: " + regime.justification);
  QsdPrediction q;
  const bool touch = report.wells.m3 > 0;
  switch (regime.tag) {
    case RegimeTag::H1_first_well:
    case RegimeTag::H1_second_well:
      q.weight_well1 = regime.tag == RegimeTag::H1_first_well ? 1.0 : 0.0;
      q.weight_well2 = 1.0 - q.weight_well1;
      q.error_order = touch ? "O(sqrt(h))" : "O(exp(-c/h))";
      break;
    case RegimeTag::H2: {
      if (regime.from_symmetry) {
        q.weight_well1 = q.weight_well2 = 0.5;
        q.error_order = "O(exp(-c/h))";
      } else {
        const auto b = qsd_b_weights(report.minimum(1).hess_det, report.minimum(2).hess_det);
        q.weight_well1 = b.first;
        q.weight_well2 = b.second;
        q.error_order = "O(sqrt(h))";
      }
      break;
    }
    default:
      break;
  }
  return q;
}

ExitLawPrediction predict_exit_weights(const Regime& regime, const LandscapeReport& report) {
  const QsdPrediction q = predict_qsd_weights(regime, report);
  ExitLawPrediction out;
  double share[2] = {0, 0};
  for (int i = 1; i <= 2; ++i)
    for (int idx : report.contacts(i)) {
      const auto& z = report.saddles[static_cast<std::size_t>(idx)];
      share[i - 1] += z.normal_derivative / std::sqrt(z.tangential_det);
    }
  for (std::size_t s = 0; s < report.saddles.size(); ++s) {
    const auto& z = report.saddles[s];
    ExitWeight w;
    w.saddle = static_cast<int>(s);
    w.well = z.well;
    w.x = z.x;
    if (z.well == 1 || z.well == 2) {
      w.a = z.normal_derivative / std::sqrt(z.tangential_det) / share[z.well - 1];
      w.weight = w.a * (z.well == 1 ? q.weight_well1 : q.weight_well2);
    }
    out.weights.push_back(w);
  }
  out.error_order = regime.tag == RegimeTag::H2 && regime.from_symmetry ? "O(h)" : (report.wells.m3 > 0 ? "O(sqrt(h))" : "O(h)");
  return out;
}

EigenPrediction predict_eigenvalues(const InteractionModel& model, const Regime& regime, double h) {
  if (!(h > 0)) throw std::invalid_argument("h must be positive");
  EigenPrediction p;
  const TwoByTwo t = two_by_two_eigen(model.alpha(1, h), model.alpha(2, h), model.epsilon_magnitude(h), h, model.H);
  p.lambda1 = t.lambda1;
  p.lambda2 = t.lambda2;
  const double resc = 2 * std::sqrt(h) * std::exp(2 * model.H / h);
  p.rescaled1 = resc * t.lambda1;
  p.rescaled2 = resc * t.lambda2;
  p.relative_splitting = (t.lambda2 - t.lambda1) / t.lambda1;
  const bool touch = model.m3 > 0;
  switch (regime.tag) {
    case RegimeTag::H1_first_well:
    case RegimeTag::H1_second_well:
      p.note = touch ? "rescaled lambda_i = kappa_{i,0} (1 + O(sqrt(h)))" : "rescaled lambda_i = kappa_{i,0} + O(h)";
      break;
    case RegimeTag::H2:
      p.note = touch ? "lambda_1, lambda_2 = kappa_{1,0} exp(-2H/h)/(2 sqrt(h)) (1 + O(sqrt(h))); relative splitting ~ 2 c_eps sqrt(h) / kappa_{1,0}"
                     : "lambda_1 and lambda_2 exponentially close";
      break;
    case RegimeTag::indeterminate:
      p.note = "regime indeterminate; values from the truncated interaction matrix";
      break;
  }
  return p;
}

AsymptoticPrediction predict(const LandscapeReport& report, const std::optional<Symmetry>& declared) {
  AsymptoticPrediction a;
  a.coeffs = leading_kappa(report);
  a.model = interaction_model(report, a.coeffs);
  a.regime = classify_regime(report, a.coeffs, a.model, declared);
  if (a.regime.tag == RegimeTag::H2) a.model.epsilon_sign = EpsilonSign::negative;
  if (a.regime.tag == RegimeTag::indeterminate) {
    a.refusal = "regime indeterminate: " + a.regime.justification;
  } else {
    a.qsd = predict_qsd_weights(a.regime, report);
    a.exits = predict_exit_weights(a.regime, report);
  }
  return a;
}

}  // namespace metastab
