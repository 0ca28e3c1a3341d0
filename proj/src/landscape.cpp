#include "metastab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace metastab {

const char* to_string(PointKind k) {
  switch (k) {
    case PointKind::minimum: return "minimum";
    case PointKind::saddle: return "saddle_index_1";
    case PointKind::maximum: return "maximum";
  }
  return "?";
}

Vec symmetric_eigenvalues(const Mat& m, int dim) {
  if (dim == 1) return {m[0][0], 0.0};
  const double a = m[0][0], b = m[0][1], c = m[1][1];
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  // smaller eigenvalue from the determinant when it would cancel
  double hi = mean + (mean >= 0 ? rad : -rad);
  double lo = hi != 0 ? (a * c - b * b) / hi : 0.0;
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

namespace {

std::string fmt_point(const EvalPoint& p) {
  std::ostringstream os;
  os.precision(10);
  if (p.dim == 1) {
    os << "x=" << p[0];
  } else {
    os << "(" << p[0] << ", " << p[1] << ")";
  }
  return os.str();
}

double dist(const EvalPoint& a, const EvalPoint& b) {
  return a.dim == 1 ? std::abs(a[0] - b[0]) : std::hypot(a[0] - b[0], a[1] - b[1]);
}

bool lex_less(const EvalPoint& a, const EvalPoint& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  return a[1] < b[1];
}

// Newton on grad f = 0 from p. Returns true on convergence.
bool newton_critical(const Potential& pot, EvalPoint& p, double gtol, double max_step) {
  const int d = pot.dim();
  const Domain& dom = pot.domain();
  const double far = dom.diameter();
  for (int it = 0; it < 100; ++it) {
    const expr::Jet j = pot.jet(p);
    double gn = std::hypot(j.grad[0], j.grad[1]);
    double step[2] = {0, 0};
    if (d == 1) {
      if (j.hess[0][0] == 0) return false;
      step[0] = -j.grad[0] / j.hess[0][0];
    } else {
      const double det = j.hess[0][0] * j.hess[1][1] - j.hess[0][1] * j.hess[1][0];
      if (det == 0) return false;
      step[0] = -(j.hess[1][1] * j.grad[0] - j.hess[0][1] * j.grad[1]) / det;
      step[1] = -(-j.hess[1][0] * j.grad[0] + j.hess[0][0] * j.grad[1]) / det;
    }
    if (gn <= gtol) {
      // keep polishing while it helps; at a degenerate point this drives the
      // iterate far enough in for the Hessian test to see the zero eigenvalue
      for (int extra = 0; extra < 60 && gn > 0; ++extra) {
        EvalPoint q = p;
        q[0] += step[0];
        q[1] += step[1];
        const expr::Jet jq = pot.jet(q);
        const double gq = std::hypot(jq.grad[0], jq.grad[1]);
        if (!(gq < gn)) break;
        p = q;
        gn = gq;
        if (d == 1) {
          if (jq.hess[0][0] == 0) break;
          step[0] = -jq.grad[0] / jq.hess[0][0];
        } else {
          const double det = jq.hess[0][0] * jq.hess[1][1] - jq.hess[0][1] * jq.hess[1][0];
          if (det == 0) break;
          step[0] = -(jq.hess[1][1] * jq.grad[0] - jq.hess[0][1] * jq.grad[1]) / det;
          step[1] = -(-jq.hess[1][0] * jq.grad[0] + jq.hess[0][0] * jq.grad[1]) / det;
        }
      }
      return true;
    }
    const double sl = std::hypot(step[0], step[1]);
    const double s = sl > max_step ? max_step / sl : 1.0;
    p[0] += s * step[0];
    if (d == 2) p[1] += s * step[1];
    if (dom.distance_to_boundary(p) < -far) return false;
  }
  return false;
}

}  // namespace

std::vector<CriticalPoint> locate_critical_points(const Potential& pot, int grid_density,
                                                  std::vector<std::string>* warnings) {
  if (grid_density < 16) throw std::invalid_argument("grid_density must be at least 16 per axis");
  const Domain& dom = pot.domain();
  const int d = pot.dim();
  const double diam = dom.diameter();
  const double gscale = 1.0 + std::sqrt(pot.max_probe_grad_sq(grid_density));
  const double gtol = 1e-10 * gscale;
  const double merge = 1e-8 * diam;

  std::vector<EvalPoint> found;
  for (EvalPoint p : dom.interior_probe(grid_density)) {
    if (!newton_critical(pot, p, gtol, 0.1 * diam)) continue;
    if (dom.distance_to_boundary(p) <= 1e-9 * diam) continue;  // outside or on the boundary
    found.push_back(p);
  }
  std::sort(found.begin(), found.end(), lex_less);
  std::vector<EvalPoint> uniq;
  for (const auto& p : found) {
    bool dup = false;
    for (const auto& q : uniq) dup = dup || dist(p, q) <= merge;
    if (!dup) uniq.push_back(p);
  }

  std::vector<CriticalPoint> out;
  double hess_scale = 1.0;
  std::vector<expr::Jet> jets;
  for (const auto& p : uniq) {
    jets.push_back(pot.jet(p));
    const Vec ev = symmetric_eigenvalues(jets.back().hess, d);
    hess_scale = std::max({hess_scale, std::abs(ev[0]), d == 2 ? std::abs(ev[1]) : 0.0});
  }
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    const expr::Jet& j = jets[i];
    CriticalPoint cp;
    cp.x = uniq[i];
    cp.value = j.value;
    cp.hessian = j.hess;
    cp.grad_norm = std::hypot(j.grad[0], j.grad[1]);
    cp.hess_eigenvalues = symmetric_eigenvalues(j.hess, d);
    cp.hess_det = d == 1 ? j.hess[0][0] : j.hess[0][0] * j.hess[1][1] - j.hess[0][1] * j.hess[1][0];
    int negatives = 0;
    for (int k = 0; k < d; ++k) {
      const double lam = cp.hess_eigenvalues[static_cast<std::size_t>(k)];
      if (std::abs(lam) <= 1e-8 * hess_scale)
        throw LandscapeError("degenerate critical point at " + fmt_point(cp.x) +
                             " (Hessian eigenvalue " + std::to_string(lam) + "): f is not Morse");
      if (lam < 0) ++negatives;
    }
    if (negatives == 0) {
      cp.kind = PointKind::minimum;
    } else if (negatives == d) {
      cp.kind = PointKind::maximum;
    } else {
      cp.kind = PointKind::saddle;
      cp.negative_eigenvalue = cp.hess_eigenvalues[0];
    }
    if (d == 1 && cp.kind == PointKind::maximum) {
      // in 1D a maximum is also the index-1 saddle
      cp.kind = PointKind::saddle;
      cp.negative_eigenvalue = cp.hess_eigenvalues[0];
    }
    out.push_back(cp);
  }

  // Sign changes of f' that no Newton run explained.
  if (warnings && d == 1) {
    const int n = 8 * grid_density;
    const double a = dom.a, b = dom.b;
    double xprev = a + (b - a) * 0.5 / n;
    double gprev = pot.gradient(EvalPoint(xprev))[0];
    for (int k = 1; k < n; ++k) {
      const double x = a + (b - a) * (k + 0.5) / n;
      const double g = pot.gradient(EvalPoint(x))[0];
      if ((g > 0) != (gprev > 0)) {
        bool seen = false;
        for (const auto& cp : out) seen = seen || (cp.x[0] >= xprev - merge && cp.x[0] <= x + merge);
        if (!seen) {
          std::ostringstream os;
          os << "Newton missed a sign change of f' in [" << xprev << ", " << x << "]";
          warnings->push_back(os.str());
        }
      }
      xprev = x;
      gprev = g;
    }
  }
  return out;
}

std::vector<BoundaryMinimum> locate_boundary_minima(const Potential& pot, int samples) {
  const Domain& dom = pot.domain();
  std::vector<BoundaryMinimum> out;
  if (dom.dim() == 1) {
    for (const auto& piece : dom.boundary_pieces()) {
      const Vec g = pot.gradient(piece.origin);
      BoundaryMinimum m;
      m.x = piece.origin;
      m.value = pot.value(piece.origin);
      m.normal_derivative = g[0] * piece.normal[0];
      m.tangential_second = 1.0;
      out.push_back(m);
    }
    return out;
  }

  const double diam = dom.diameter();
  auto phi = [&](const BoundaryPiece& pc, double s, double& d1, double& d2) {
    EvalPoint p;
    Vec t, c;
    dom.piece_eval(pc, s, p, t, c);
    const expr::Jet j = pot.jet(p);
    d1 = j.grad[0] * t[0] + j.grad[1] * t[1];
    d2 = t[0] * (j.hess[0][0] * t[0] + j.hess[0][1] * t[1]) + t[1] * (j.hess[1][0] * t[0] + j.hess[1][1] * t[1]) +
         j.grad[0] * c[0] + j.grad[1] * c[1];
    return j.value;
  };

  for (const auto& pc : dom.boundary_pieces()) {
    const int n = std::max(samples, 16);
    const int count = pc.closed ? n : n + 1;
    std::vector<double> s(static_cast<std::size_t>(count)), v(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      s[static_cast<std::size_t>(k)] = pc.length * k / n;
      double a1, a2;
      v[static_cast<std::size_t>(k)] = phi(pc, s[static_cast<std::size_t>(k)], a1, a2);
    }
    for (int k = 0; k < count; ++k) {
      const bool has_l = pc.closed || k > 0, has_r = pc.closed || k < count - 1;
      const double vl = has_l ? v[static_cast<std::size_t>((k - 1 + count) % count)] : INFINITY;
      const double vr = has_r ? v[static_cast<std::size_t>((k + 1) % count)] : INFINITY;
      const double vk = v[static_cast<std::size_t>(k)];
      if (!(vk <= vl && vk <= vr)) continue;
      if (!has_l || !has_r) continue;  // corner, handled below
      // Safeguarded Newton on phi'(s) = 0 inside [s_{k-1}, s_{k+1}].
      double lo = s[static_cast<std::size_t>(k)] - pc.length / n, hi = s[static_cast<std::size_t>(k)] + pc.length / n;
      double x = s[static_cast<std::size_t>(k)];
      double d1 = 0, d2 = 0;
      bool ok = false;
      for (int it = 0; it < 200; ++it) {
        phi(pc, x, d1, d2);
        if (std::abs(d1) <= 1e-13 * (1 + std::abs(d2) * pc.length)) {
          ok = true;
          break;
        }
        if (d1 > 0) hi = x; else lo = x;
        double nx = d2 > 0 ? x - d1 / d2 : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * std::max(1.0, pc.length)) {
          ok = true;
          break;
        }
        x = nx;
      }
      if (!ok) continue;
      if (!pc.closed && (x <= 1e-12 * pc.length || x >= pc.length * (1 - 1e-12))) continue;
      if (pc.closed) x = std::fmod(std::fmod(x, pc.length) + pc.length, pc.length);
      EvalPoint p;
      Vec t, c;
      dom.piece_eval(pc, x, p, t, c);
      const double fv = phi(pc, x, d1, d2);
      if (d2 <= 1e-8 * std::max(1.0, std::abs(fv)))
        throw LandscapeError("tangential second derivative " + std::to_string(d2) +
                             " <= 0 at boundary minimum " + fmt_point(p) + ": f restricted to the boundary is not Morse");
      const Vec g = pot.gradient(p);
      const Vec nrm = dom.outward_normal(p);
      BoundaryMinimum m;
      m.x = p;
      m.value = fv;
      m.normal_derivative = g[0] * nrm[0] + g[1] * nrm[1];
      m.tangential_second = d2;
      bool dup = false;
      for (const auto& q : out) dup = dup || dist(q.x, p) <= 1e-8 * diam;
      if (!dup) out.push_back(m);
    }
  }
  // Corners that are local minima along both adjacent edges.
  const auto pcs = dom.boundary_pieces();
  for (std::size_t c = 0; c < pcs.size() && !pcs[c].closed && pcs[c].length > 0; ++c) {
    const BoundaryPiece& out_edge = pcs[c];                            // starts at this corner
    const BoundaryPiece& in_edge = pcs[(c + pcs.size() - 1) % pcs.size()];  // ends at this corner
    double d1o, d1i, d2;
    const double fv = phi(out_edge, 0.0, d1o, d2);
    phi(in_edge, in_edge.length, d1i, d2);
    if (d1o >= 0 && d1i <= 0) {
      BoundaryMinimum m;
      m.x = out_edge.origin;
      m.value = fv;
      m.corner = true;
      out.push_back(m);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return lex_less(a.x, b.x); });
  return out;
}

std::vector<BoundarySaddle> locate_boundary_saddles(const Potential& pot, int samples) {
  const Domain& dom = pot.domain();
  // |grad f| must not vanish on the boundary.
  double gmax = 0, gmin = INFINITY;
  EvalPoint where;
  auto probe = dom.boundary_probe(std::max(samples, 16));
  for (const auto& c : dom.corners()) probe.push_back(c);
  for (const auto& p : probe) {
    const Vec g = pot.gradient(p);
    const double gn = std::hypot(g[0], g[1]);
    gmax = std::max(gmax, gn);
    if (gn < gmin) {
      gmin = gn;
      where = p;
    }
  }
  if (gmin <= 1e-8 * (1 + gmax))
    throw LandscapeError("|grad f| vanishes on the boundary near " + fmt_point(where));

  std::vector<BoundarySaddle> out;
  for (const auto& m : locate_boundary_minima(pot, samples)) {
    if (m.corner || !(m.normal_derivative > 0)) continue;
    BoundarySaddle z;
    z.x = m.x;
    z.value = m.value;
    z.normal_derivative = m.normal_derivative;
    z.tangential_det = dom.dim() == 1 ? 1.0 : m.tangential_second;
    z.normal = dom.outward_normal(m.x);
    out.push_back(z);
  }
  return out;
}

int WellDecomposition::cell_index(const EvalPoint& p) const {
  const int i = static_cast<int>(std::floor((p[0] - lo[0]) / cell[0]));
  const int j = ny == 1 ? 0 : static_cast<int>(std::floor((p[1] - lo[1]) / cell[1]));
  if (i < 0 || i >= nx || j < 0 || j >= ny) return -1;
  return j * nx + i;
}

EvalPoint WellDecomposition::cell_center(int idx) const {
  const int i = idx % nx, j = idx / nx;
  if (ny == 1) return EvalPoint(lo[0] + (i + 0.5) * cell[0]);
  return EvalPoint(lo[0] + (i + 0.5) * cell[0], lo[1] + (j + 0.5) * cell[1]);
}

namespace {

// Labels of the cells within `radius` (in cell units) of p.
std::vector<int> labels_near(const WellDecomposition& w, const EvalPoint& p, double radius) {
  std::vector<int> found;
  const int ci = static_cast<int>(std::floor((p[0] - w.lo[0]) / w.cell[0]));
  const int cj = w.ny == 1 ? 0 : static_cast<int>(std::floor((p[1] - w.lo[1]) / w.cell[1]));
  const int rr = static_cast<int>(std::ceil(radius)) + 1;
  for (int dj = (w.ny == 1 ? 0 : -rr); dj <= (w.ny == 1 ? 0 : rr); ++dj) {
    for (int di = -rr; di <= rr; ++di) {
      const int i = ci + di, j = cj + dj;
      if (i < 0 || i >= w.nx || j < 0 || j >= w.ny) continue;
      const EvalPoint c = w.cell_center(j * w.nx + i);
      const double ex = (c[0] - p[0]) / w.cell[0];
      const double ey = w.ny == 1 ? 0.0 : (c[1] - p[1]) / w.cell[1];
      if (std::hypot(ex, ey) > radius) continue;
      const int l = w.label[static_cast<std::size_t>(j * w.nx + i)];
      if (l > 0 && std::find(found.begin(), found.end(), l) == found.end()) found.push_back(l);
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace

WellDecomposition decompose_wells(const Potential& pot, const std::vector<CriticalPoint>& points,
                                  std::vector<BoundarySaddle>& saddles,
                                  const std::vector<BoundaryMinimum>& bmins, int resolution) {
  const Domain& dom = pot.domain();
  const int d = dom.dim();
  WellDecomposition w;
  if (resolution <= 0) resolution = d == 1 ? 1024 : 512;

  double thr = INFINITY;
  for (const auto& m : bmins) thr = std::min(thr, m.value);
  for (const auto& p : dom.boundary_probe(4 * resolution)) thr = std::min(thr, pot.value(p));
  w.threshold = thr;
  const double eq_tol = 1e-9 * std::max(1.0, std::abs(thr));

  w.nx = resolution;
  w.ny = d == 1 ? 1 : resolution;
  w.lo = dom.lo();
  const Vec hi = dom.hi();
  w.cell = {(hi[0] - w.lo[0]) / w.nx, d == 1 ? 1.0 : (hi[1] - w.lo[1]) / w.ny};
  w.label.assign(static_cast<std::size_t>(w.nx) * static_cast<std::size_t>(w.ny), 0);
  for (std::size_t k = 0; k < w.label.size(); ++k) {
    const EvalPoint c = w.cell_center(static_cast<int>(k));
    if (!dom.inside(c)) {
      w.label[k] = -1;
    } else if (pot.value(c) < thr) {
      w.label[k] = 1;  // provisional: below threshold
    }
  }
  // Interior saddles at the threshold level touch two components in a single
  // point; cut a small disc around them so the grid does not merge the wells.
  std::vector<int> level_saddles;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].kind == PointKind::saddle && std::abs(points[i].value - thr) <= eq_tol) {
      level_saddles.push_back(static_cast<int>(i));
      const EvalPoint& z = points[i].x;
      for (std::size_t k = 0; k < w.label.size(); ++k) {
        if (w.label[k] != 1) continue;
        const EvalPoint c = w.cell_center(static_cast<int>(k));
        const double ex = (c[0] - z[0]) / w.cell[0];
        const double ey = d == 1 ? 0.0 : (c[1] - z[1]) / w.cell[1];
        if (std::hypot(ex, ey) <= 2.5) w.label[k] = 0;
      }
    }
  }

  // Connected components, 4-connectivity; ids start at 3 to stay clear of the
  // final well labels.
  std::vector<int> comp(w.label.size(), 0);
  int next = 0;
  for (std::size_t s = 0; s < w.label.size(); ++s) {
    if (w.label[s] != 1 || comp[s] != 0) continue;
    ++next;
    std::deque<std::size_t> q{s};
    comp[s] = next;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop_front();
      const int i = static_cast<int>(k) % w.nx, j = static_cast<int>(k) / w.nx;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[0] >= w.nx || n[1] < 0 || n[1] >= w.ny) continue;
        const std::size_t m = static_cast<std::size_t>(n[1] * w.nx + n[0]);
        if (w.label[m] == 1 && comp[m] == 0) {
          comp[m] = next;
          q.push_back(m);
        }
      }
    }
  }
  w.components = next;

  // Wells are the components of the two lowest-index minima in canonical order.
  std::vector<int> minima;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].kind == PointKind::minimum) minima.push_back(static_cast<int>(i));
  int well_comp[2] = {0, 0};
  for (int k = 0; k < 2 && k < static_cast<int>(minima.size()); ++k) {
    const int idx = w.cell_index(points[static_cast<std::size_t>(minima[static_cast<std::size_t>(k)])].x);
    if (idx >= 0) well_comp[k] = comp[static_cast<std::size_t>(idx)];
    if (well_comp[k] == 0) w.problems.push_back("minimum " + std::to_string(k + 1) + " is not below the boundary minimum");
  }
  if (well_comp[0] != 0 && well_comp[0] == well_comp[1])
    w.problems.push_back("x_1 and x_2 lie in the same component of the sublevel set");
  for (std::size_t k = 0; k < w.label.size(); ++k) {
    if (w.label[k] != 1) continue;
    const int c = comp[k];
    w.label[k] = c == well_comp[0] && c != 0 ? 1 : (c == well_comp[1] && c != 0 ? 2 : 2 + c);
  }

  for (std::size_t s = 0; s < saddles.size(); ++s) {
    BoundarySaddle& z = saddles[s];
    z.well = 0;
    if (std::abs(z.value - thr) > eq_tol) {
      w.other_boundary.push_back(static_cast<int>(s));
      continue;
    }
    const auto near = labels_near(w, z.x, 2.0);
    std::vector<int> wells;
    for (int l : near)
      if (l == 1 || l == 2) wells.push_back(l);
    if (wells.size() == 1) {
      z.well = wells[0];
      w.contacts[wells[0] - 1].push_back(static_cast<int>(s));
    } else if (wells.size() == 2) {
      w.problems.push_back("boundary saddle at " + fmt_point(z.x) + " is within 2 cells of both wells");
    } else {
      w.problems.push_back("boundary saddle at " + fmt_point(z.x) + " at threshold level touches neither well");
      w.other_boundary.push_back(static_cast<int>(s));
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].kind != PointKind::saddle) continue;
    const bool at_level = std::find(level_saddles.begin(), level_saddles.end(), static_cast<int>(i)) != level_saddles.end();
    bool both = false;
    if (at_level) {
      const auto near = labels_near(w, points[i].x, 4.0);
      both = std::find(near.begin(), near.end(), 1) != near.end() && std::find(near.begin(), near.end(), 2) != near.end();
    }
    (both ? w.connecting : w.other_interior).push_back(static_cast<int>(i));
  }
  w.n1 = static_cast<int>(w.contacts[0].size());
  w.n2 = static_cast<int>(w.contacts[1].size());
  w.m3 = static_cast<int>(w.connecting.size());
  w.n3 = w.m3 + static_cast<int>(w.other_interior.size() + w.other_boundary.size());
  return w;
}

LandscapeReport check_hwell(const Potential& pot, std::vector<CriticalPoint> points,
                            std::vector<BoundarySaddle> saddles, std::vector<BoundaryMinimum> bmins,
                            WellDecomposition dec) {
  LandscapeReport r(pot);
  r.points = std::move(points);
  r.saddles = std::move(saddles);
  r.boundary_minima = std::move(bmins);
  r.wells = std::move(dec);
  auto fail = [&](const std::string& why) {
    r.pass = false;
    r.reason = why;
    return r;
  };

  std::vector<int> minima;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    if (r.points[i].kind == PointKind::minimum) minima.push_back(static_cast<int>(i));
  if (minima.size() != 2)
    return fail("f must have exactly two local minima in the domain, found " + std::to_string(minima.size()));
  r.x1 = minima[0];
  r.x2 = minima[1];
  const double f1 = r.points[static_cast<std::size_t>(r.x1)].value;
  const double f2 = r.points[static_cast<std::size_t>(r.x2)].value;
  r.min_value = std::min(f1, f2);
  if (std::abs(f1 - f2) > 1e-10) {
    std::ostringstream os;
    os.precision(12);
    os << "minimum values differ (" << f1 << " vs " << f2 << "): barriers are not degenerate";
    return fail(os.str());
  }
  const double thr = r.wells.threshold;
  r.H = thr - r.min_value;
  if (!(r.H > 0)) return fail("argmin over the closed domain is not attained only at x_1, x_2 (boundary minimum is not above the minima)");
  for (const auto& m : r.boundary_minima) {
    if (m.corner && std::abs(m.value - thr) <= 1e-9 * std::max(1.0, std::abs(thr)))
      return fail("the lowest boundary value is attained at a corner " + fmt_point(m.x));
  }
  if (!r.wells.problems.empty()) return fail(r.wells.problems.front());
  if (r.wells.components != 2)
    return fail("sublevel set {f < min over boundary} has " + std::to_string(r.wells.components) +
                " connected components, expected 2");
  if (r.wells.n1 == 0) return fail("well C_1 does not touch the boundary");
  if (r.wells.n2 == 0) return fail("well C_2 does not touch the boundary");
  r.pass = true;
  r.reason.clear();
  return r;
}

LandscapeReport analyze_landscape(const Potential& pot, const LandscapeOptions& opt) {
  std::vector<std::string> warnings;
  try {
    auto points = locate_critical_points(pot, opt.grid_density, &warnings);
    auto saddles = locate_boundary_saddles(pot, opt.boundary_samples);
    auto bmins = locate_boundary_minima(pot, opt.boundary_samples);
    auto dec = decompose_wells(pot, points, saddles, bmins, opt.resolution);
    LandscapeReport r = check_hwell(pot, std::move(points), std::move(saddles), std::move(bmins), std::move(dec));
    r.warnings = std::move(warnings);
    return r;
  } catch (const LandscapeError& e) {
    LandscapeReport r(pot);
    r.pass = false;
    r.reason = e.what();
    r.warnings = std::move(warnings);
    return r;
  }
}

int LandscapeReport::well_at(const EvalPoint& p) const {
  const WellDecomposition& w = wells;
  if (w.label.empty() || !potential.domain().inside(p)) return 0;
  EvalPoint q = p;
  Vec g{};
  double fv = potential.value_and_gradient(q, g);
  if (!(fv < w.threshold)) return 0;
  const double step = 0.5 * std::min(w.cell[0], potential.dim() == 1 ? w.cell[0] : w.cell[1]);
  for (int it = 0; it < 4000; ++it) {
    const int idx = w.cell_index(q);
    if (idx >= 0) {
      const int l = w.label[static_cast<std::size_t>(idx)];
      if (l == 1 || l == 2) return l;
      if (l > 2) return 0;
    }
    // descend; the flow stays in the component of the start point
    const double gn = std::hypot(g[0], g[1]);
    if (gn == 0) return 0;
    q[0] -= step * g[0] / gn;
    if (q.dim == 2) q[1] -= step * g[1] / gn;
    fv = potential.value_and_gradient(q, g);
  }
  return 0;
}

}  // namespace metastab
