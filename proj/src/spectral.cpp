#include "metastab/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace metastab {

namespace {

constexpr double kFloor = 1e-12;       // e^{-2H/h} must stay above this
constexpr double kMaxExponent = 700;   // 2(f - fmin)/h, below underflow of e^{-x}

std::size_t at(int i) { return static_cast<std::size_t>(i); }

// Grid coordinate i of n cells on [lo, hi], computed from the nearer end so
// that symmetric intervals give exactly mirrored nodes.
double coord(double lo, double hi, int n, int i) {
  const double d = (hi - lo) / n;
  return 2 * i <= n ? lo + i * d : hi - (n - i) * d;
}

double face_potential(const Potential& pot, const EvalPoint& p) {
  const Domain& d = pot.domain();
  if (d.kind == DomainKind::disk && !d.inside(p)) return pot.value(d.project_to_boundary(p));
  return pot.value(p);
}

}  // namespace

// ------------------------------------------------------------ mesh

int Mesh::node_at(int i, int j) const {
  const int stride = ny + 1;
  if (i < 0 || i > nx || j < 0 || j > (dim() == 1 ? 0 : ny)) return -1;
  return node_of[at(dim() == 1 ? i : i * stride + j)];
}

int Mesh::mirror(int node, bool flip_x, bool flip_y) const {
  const auto g = grid[at(node)];
  return node_at(flip_x ? nx - g[0] : g[0], flip_y && dim() == 2 ? ny - g[1] : g[1]);
}

Mesh build_mesh(const Domain& dom, int n) {
  dom.validate();
  if (n < 64) throw SpectralError("mesh needs at least 64 cells per axis, got " + std::to_string(n));
  Mesh m;
  m.domain = dom;
  m.lo = dom.lo();
  const Vec hi = dom.hi();
  const double Lx = hi[0] - m.lo[0];
  if (dom.dim() == 1) {
    m.nx = n;
    m.ny = 0;
    m.dx = Lx / n;
    m.dy = 1;
    m.volume = m.dx;
    m.node_of.assign(at(n + 1), -1);
    for (int i = 1; i < n; ++i) {
      m.node_of[at(i)] = m.size();
      m.nodes.emplace_back(coord(dom.a, dom.b, n, i));
      m.grid.push_back({i, 0});
    }
    const int N = m.size();
    for (int k = 0; k + 1 < N; ++k)
      m.edges.push_back({k, k + 1, 1.0 / m.dx, EvalPoint(0.5 * (m.nodes[at(k)][0] + m.nodes[at(k + 1)][0]))});
    BoundaryFace left;
    left.node = 0;
    left.inner = N > 1 ? 1 : -1;
    left.point = EvalPoint(dom.a);
    left.mid = EvalPoint(0.5 * (dom.a + m.nodes[0][0]));
    left.normal = {-1.0, 0.0};
    left.distance = m.dx;
    BoundaryFace right = left;
    right.node = N - 1;
    right.inner = N > 1 ? N - 2 : -1;
    right.point = EvalPoint(dom.b);
    right.mid = EvalPoint(0.5 * (dom.b + m.nodes[at(N - 1)][0]));
    right.normal = {1.0, 0.0};
    m.faces = {left, right};
    m.bandwidth = 1;
    return m;
  }

  const double Ly = hi[1] - m.lo[1];
  if (Lx >= Ly) {
    m.nx = n;
    m.ny = std::max(2, static_cast<int>(std::lround(Ly / (Lx / n))));
  } else {
    m.ny = n;
    m.nx = std::max(2, static_cast<int>(std::lround(Lx / (Ly / n))));
  }
  m.dx = Lx / m.nx;
  m.dy = Ly / m.ny;
  m.volume = m.dx * m.dy;
  const int stride = m.ny + 1;
  m.node_of.assign(at((m.nx + 1) * stride), -1);
  auto pos = [&](int i, int j) { return EvalPoint(coord(m.lo[0], hi[0], m.nx, i), coord(m.lo[1], hi[1], m.ny, j)); };
  const double eps = 1e-12 * dom.diameter();
  auto active = [&](int i, int j) {
    if (i <= 0 || i >= m.nx || j <= 0 || j >= m.ny) return false;
    if (dom.kind == DomainKind::rectangle) return true;
    return dom.distance_to_boundary(pos(i, j)) > eps;
  };
  // the axis with fewer nodes runs fastest, which keeps the band narrow
  const bool y_fast = m.ny <= m.nx;
  const int outer = y_fast ? m.nx : m.ny, inner = y_fast ? m.ny : m.nx;
  for (int s = 1; s < outer; ++s)
    for (int t = 1; t < inner; ++t) {
      const int i = y_fast ? s : t, j = y_fast ? t : s;
      if (!active(i, j)) continue;
      m.node_of[at(i * stride + j)] = m.size();
      m.nodes.push_back(pos(i, j));
      m.grid.push_back({i, j});
    }
  if (m.nodes.empty()) throw SpectralError("mesh has no interior nodes");

  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int k = 0; k < m.size(); ++k) {
    const auto [i, j] = m.grid[at(k)];
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di[d], jj = j + dj[d];
      const bool along_x = d < 2;
      const double dist = along_x ? m.dx : m.dy, area = along_x ? m.dy : m.dx;
      const int nb = m.node_at(ii, jj);
      const EvalPoint mid((pos(i, j)[0] + pos(ii, jj)[0]) / 2, (pos(i, j)[1] + pos(ii, jj)[1]) / 2);
      if (nb >= 0) {
        if (nb > k) {
          m.edges.push_back({k, nb, area / dist, mid});
          m.bandwidth = std::max(m.bandwidth, nb - k);
        }
        continue;
      }
      BoundaryFace f;
      f.node = k;
      f.inner = m.node_at(i - di[d], j - dj[d]);
      f.distance = dist;
      f.area = area;
      f.mid = mid;
      if (dom.kind == DomainKind::rectangle) {
        f.point = pos(ii, jj);
        f.normal = {static_cast<double>(di[d]), static_cast<double>(dj[d])};
      } else {
        f.point = dom.project_to_boundary(mid);
        f.normal = dom.outward_normal(f.point);
      }
      m.faces.push_back(f);
    }
  }

  std::vector<char> seen(at(m.size()), 0);
  std::vector<std::vector<int>> adj(at(m.size()));
  for (const auto& e : m.edges) {
    adj[at(e.a)].push_back(e.b);
    adj[at(e.b)].push_back(e.a);
  }
  std::deque<int> queue{0};
  seen[0] = 1;
  int count = 1;
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (int nb : adj[at(k)])
      if (!seen[at(nb)]) {
        seen[at(nb)] = 1;
        ++count;
        queue.push_back(nb);
      }
  }
  if (count != m.size()) throw SpectralError("interior mask is not connected; refine the mesh");
  return m;
}

// ------------------------------------------------------------ operator

double minimal_admissible_h(double H) { return H <= 0 ? 0.0 : 2 * H / -std::log(kFloor); }

std::vector<double> SymmetricOperator::apply_stiffness(const std::vector<double>& u) const {
  const Mesh& m = *mesh;
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const auto& ed = m.edges[e];
    const double flow = edge_k[e] * (u[at(ed.a)] - u[at(ed.b)]);
    y[at(ed.a)] += flow;
    y[at(ed.b)] -= flow;
  }
  for (std::size_t q = 0; q < m.faces.size(); ++q) y[at(m.faces[q].node)] += face_k[q] * u[at(m.faces[q].node)];
  return y;
}

linalg::BandMatrix SymmetricOperator::stiffness_band() const {
  const Mesh& m = *mesh;
  linalg::BandMatrix b(size(), m.bandwidth);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const auto& ed = m.edges[e];
    const int lo = std::min(ed.a, ed.b), hi = std::max(ed.a, ed.b);
    b.upper(lo, hi - lo) += edge_k[e];
  }
  return b;
}

std::vector<double> SymmetricOperator::stiffness_excess() const {
  std::vector<double> e(at(size()), 0.0);
  for (std::size_t q = 0; q < mesh->faces.size(); ++q) e[at(mesh->faces[q].node)] += face_k[q];
  return e;
}

linalg::BandMatrix SymmetricOperator::symmetric_band() const {
  linalg::BandMatrix b(size(), mesh->bandwidth);
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (r == c)
        b.diag[at(r)] = it.value();
      else if (c > r)
        b.upper(r, c - r) = it.value();
    }
  return b;
}

SymmetricOperator discretize_generator(const Potential& pot, double h, int n) {
  return discretize_generator(pot, h, std::make_shared<const Mesh>(build_mesh(pot.domain(), n)));
}

SymmetricOperator discretize_generator(const Potential& pot, double h, std::shared_ptr<const Mesh> mesh) {
  if (!(h > 0) || !std::isfinite(h)) throw SpectralError("h must be positive");
  const Mesh& m = *mesh;
  SymmetricOperator op;
  op.mesh = mesh;
  op.h = h;
  const int N = m.size();
  op.f.resize(at(N));
  for (int k = 0; k < N; ++k) op.f[at(k)] = pot.value(m.nodes[at(k)]);
  op.fmin = *std::min_element(op.f.begin(), op.f.end());
  const double fmax = *std::max_element(op.f.begin(), op.f.end());
  op.face_f.resize(m.faces.size());
  double fb = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < m.faces.size(); ++q) {
    op.face_f[q] = pot.value(m.faces[q].point);
    fb = std::min(fb, op.face_f[q]);
  }
  op.barrier = fb - op.fmin;

  const double h_floor = minimal_admissible_h(op.barrier);
  const double h_range = 2 * (fmax - op.fmin) / kMaxExponent;
  if (h < h_floor || h < h_range) {
    const double h_min = std::max(h_floor, h_range);
    std::ostringstream os;
    os.precision(6);
    if (h < h_floor)
      os << "h = " << h << " puts e^{-2H/h} below 1e-12 (H = " << op.barrier << "); minimal admissible h is " << h_min;
    else
      os << "h = " << h << " underflows e^{-2(f - min f)/h} over the mesh; minimal admissible h is " << h_min;
    throw AdmissibilityError(os.str(), h_min);
  }

  const double V = m.volume;
  op.log_weight.resize(at(N));
  op.mass.resize(at(N));
  for (int k = 0; k < N; ++k) {
    op.log_weight[at(k)] = (op.f[at(k)] - op.fmin) / h;
    op.mass[at(k)] = std::exp(-2 * op.log_weight[at(k)]) * V;
  }

  std::vector<double> diag(at(N), 0.0);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * m.edges.size() + at(N));
  op.edge_k.resize(m.edges.size());
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const auto& ed = m.edges[e];
    const double fm = pot.value(ed.mid);
    const double c = 0.5 * h * ed.coeff;
    op.edge_k[e] = c * std::exp(-2 * (fm - op.fmin) / h);
    const double fa = op.f[at(ed.a)], fbb = op.f[at(ed.b)];
    const double s = c / V * std::exp((fa + fbb - 2 * fm) / h);
    trips.emplace_back(ed.a, ed.b, -s);
    trips.emplace_back(ed.b, ed.a, -s);
    diag[at(ed.a)] += c / V * std::exp(2 * (fa - fm) / h);
    diag[at(ed.b)] += c / V * std::exp(2 * (fbb - fm) / h);
  }
  op.face_k.resize(m.faces.size());
  for (std::size_t q = 0; q < m.faces.size(); ++q) {
    const auto& fc = m.faces[q];
    const double fm = face_potential(pot, fc.mid);
    const double c = 0.5 * h * fc.area / fc.distance;
    op.face_k[q] = c * std::exp(-2 * (fm - op.fmin) / h);
    diag[at(fc.node)] += c / V * std::exp(2 * (op.f[at(fc.node)] - fm) / h);
  }
  for (int k = 0; k < N; ++k) trips.emplace_back(k, k, diag[at(k)]);
  op.matrix.resize(N, N);
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();

  std::vector<double> gersh(diag);
  for (const auto& t : trips)
    if (t.row() != t.col()) gersh[at(t.row())] += std::abs(t.value());
  op.norm_bound = *std::max_element(gersh.begin(), gersh.end());
  for (double x : op.mass)
    if (!(x > 0)) throw SpectralError("mass underflow; increase h");
  return op;
}

// ------------------------------------------------------------ eigenpairs

namespace {

// |A v - lambda v| / (|A| |v|) for v = M^{1/2} u.
double relative_residual(const SymmetricOperator& op, const std::vector<double>& u, double lambda) {
  const auto Ku = op.apply_stiffness(u);
  double r2 = 0, v2 = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = Ku[i] - lambda * op.mass[i] * u[i];
    r2 += d * d / op.mass[i];
    v2 += op.mass[i] * u[i] * u[i];
  }
  return std::sqrt(r2) / (op.norm_bound * std::sqrt(v2));
}

// u^T K u as a sum of nonnegative edge and face terms.
double energy(const SymmetricOperator& op, const double* u) {
  const Mesh& m = *op.mesh;
  double s = 0;
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const double d = u[m.edges[e].a] - u[m.edges[e].b];
    s += op.edge_k[e] * d * d;
  }
  for (std::size_t q = 0; q < m.faces.size(); ++q) s += op.face_k[q] * u[m.faces[q].node] * u[m.faces[q].node];
  return s;
}

// Extended accumulation: the Ritz rotation inside a nearly degenerate pair
// is only as good as these sums.
double mass_dot(const std::vector<double>& M, const double* a, const double* b, std::size_t n) {
  long double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<long double>(M[i] * a[i]) * b[i];
  return static_cast<double>(s);
}

void normalize(const SymmetricOperator& op, std::vector<double>& u) {
  const double nrm = std::sqrt(mass_dot(op.mass, u.data(), u.data(), u.size()));
  for (double& x : u) x /= nrm;
}

// Largest |v_i| = sqrt(M_i)|u_i| made positive.
void fix_sign(const SymmetricOperator& op, std::vector<double>& u) {
  std::size_t best = 0;
  double big = -1;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]) * std::sqrt(op.mass[i]);
    if (a > big) {
      big = a;
      best = i;
    }
  }
  if (u[best] < 0)
    for (double& x : u) x = -x;
}

// Positive ground state: checks the sign pattern, clamps roundoff-level
// negatives and runs inverse iteration with the subtraction-free factor.
void perron_polish(const SymmetricOperator& op, const linalg::MMatrixFactor& fac, std::vector<double>& u) {
  double sum = 0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += op.mass[i] * u[i];
  if (sum < 0)
    for (double& x : u) x = -x;
  double vmax = 0;
  for (std::size_t i = 0; i < u.size(); ++i) vmax = std::max(vmax, std::abs(u[i]) * std::sqrt(op.mass[i]));
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] >= 0) continue;
    if (-u[i] * std::sqrt(op.mass[i]) > 1e-5 * vmax) {
      std::ostringstream os;
      os << "ground eigenvector changes sign at node " << i << " (" << u[i] * std::sqrt(op.mass[i]) / vmax
         << " relative); the M-matrix structure is broken";
      throw SpectralError(os.str());
    }
    u[i] = 0;
  }
  for (int it = 0; it < 2; ++it) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= op.mass[i];
    fac.solve(u.data());
    normalize(op, u);
  }
}

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One step of iterative refinement for K y = M x with the residual
// accumulated in extended precision.
void refine(const SymmetricOperator& op, const linalg::MMatrixFactor& fac, const double* x, double* y) {
  const Mesh& m = *op.mesh;
  const auto n = op.mass.size();
  std::vector<long double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<long double>(op.mass[i]) * x[i];
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const auto a = static_cast<std::size_t>(m.edges[e].a), b = static_cast<std::size_t>(m.edges[e].b);
    const long double flow = static_cast<long double>(op.edge_k[e]) * (static_cast<long double>(y[a]) - y[b]);
    r[a] -= flow;
    r[b] += flow;
  }
  for (std::size_t q = 0; q < m.faces.size(); ++q) {
    const auto k = static_cast<std::size_t>(m.faces[q].node);
    r[k] -= static_cast<long double>(op.face_k[q]) * y[k];
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<double>(r[i]);
  fac.solve(d.data());
  for (std::size_t i = 0; i < n; ++i) y[i] += d[i];
}

EigenSolution dense_spectrum(const SymmetricOperator& op, int k) {
  const int N = op.size();
  if (N > 6000) throw SpectralError("dense path limited to 6000 unknowns");
  const Eigen::MatrixXd S(op.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw SpectralError("dense eigensolver failed");
  EigenSolution sol;
  sol.method = "dense";
  for (int c = 0; c < k; ++c) {
    sol.eigenvalues.push_back(es.eigenvalues()(c));
    std::vector<double> u(at(N));
    for (int i = 0; i < N; ++i) u[at(i)] = es.eigenvectors()(i, c) / std::sqrt(op.mass[at(i)]);
    sol.modes.push_back(std::move(u));
  }
  return sol;
}

EigenSolution iterative_spectrum(const SymmetricOperator& op, const linalg::MMatrixFactor& fac, int k,
                                 const SpectrumOptions& opt) {
  const int N = op.size();
  const int p = std::min(N, k + std::max(1, opt.guard));
  const auto n = at(N);
  using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
  Block X(N, p), Y(N, p);
  std::uint64_t seed = 0x5eed;
  for (int c = 0; c < p; ++c)
    for (int i = 0; i < N; ++i)
      X(i, c) = c == 0 ? 1.0 : static_cast<double>(splitmix(seed) >> 11) * 0x1.0p-53 - 0.5;

  // modified Gram-Schmidt in the M inner product, twice
  auto orthonormalize = [&](Block& Q) {
    for (int pass = 0; pass < 2; ++pass)
      for (int c = 0; c < p; ++c) {
        for (int b = 0; b < c; ++b) Q.col(c) -= mass_dot(op.mass, Q.col(b).data(), Q.col(c).data(), n) * Q.col(b);
        const double nrm = std::sqrt(mass_dot(op.mass, Q.col(c).data(), Q.col(c).data(), n));
        if (!(nrm > 0)) throw SpectralError("block iteration lost rank");
        Q.col(c) /= nrm;
      }
  };
  orthonormalize(X);

  EigenSolution sol;
  sol.method = "block inverse iteration";
  std::vector<double> prev(at(k), 0.0);
  double worst = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    for (int c = 0; c < p; ++c) {
      for (int i = 0; i < N; ++i) Y(i, c) = op.mass[at(i)] * X(i, c);
      fac.solve(Y.col(c).data());
      refine(op, fac, X.col(c).data(), Y.col(c).data());
    }
    // Ritz vectors from K^{-1} M, whose projection is accurate at the low end;
    // the values come from the energy form, accurate across the block
    Eigen::MatrixXd Hr(p, p);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b <= a; ++b)
        Hr(a, b) = Hr(b, a) = 0.5 * (mass_dot(op.mass, X.col(a).data(), Y.col(b).data(), n) +
                                     mass_dot(op.mass, X.col(b).data(), Y.col(a).data(), n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hr);
    const Eigen::MatrixXd W = es.eigenvectors().rowwise().reverse();
    X = Y * W;
    orthonormalize(X);

    bool done = it >= (k > 1 ? 8 : 3);  // pairs need a few more sweeps to settle their rotation
    worst = 0;
    for (int c = 0; c < k; ++c) {
      const double lam = energy(op, X.col(c).data());
      std::vector<double> u(X.col(c).data(), X.col(c).data() + N);
      const double r = relative_residual(op, u, lam);
      worst = std::max(worst, r);
      if (r > opt.tol || std::abs(lam - prev[at(c)]) > 1e-12 * std::abs(lam)) done = false;
      prev[at(c)] = lam;
    }
    sol.iterations = it;
    if (done) break;
  }
  if (worst > opt.tol) {
    std::ostringstream os;
    os << "block inverse iteration did not converge in " << opt.max_iter << " steps; residual " << worst;
    throw SpectralError(os.str());
  }
  // Wells decoupled by a barrier far above the boundary one leave the lowest
  // pair degenerate in double precision and the Ritz rotation arbitrary. Take
  // the projection of the constant start vector, the limit of exact inverse
  // iteration, as the ground state and complete the cluster orthogonally.
  int s = 1;
  while (s < p && energy(op, X.col(s).data()) - prev[0] <= opt.degenerate_tol * prev[0]) ++s;
  if (s > 1) {
    Eigen::VectorXd a(s);
    const std::vector<double> one(n, 1.0);
    for (int c = 0; c < s; ++c) a(c) = mass_dot(op.mass, one.data(), X.col(c).data(), n);
    if (a.norm() > 0) {
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(a)};
      const Eigen::MatrixXd Q = qr.householderQ();
      X.leftCols(s) = (X.leftCols(s) * Q).eval();
      orthonormalize(X);
      for (int c = 0; c < std::min(s, k); ++c) prev[at(c)] = energy(op, X.col(c).data());
      sol.method += ", degenerate cluster of " + std::to_string(s) + " resolved from the constant vector";
    }
  }
  for (int c = 0; c < k; ++c) {
    sol.eigenvalues.push_back(prev[at(c)]);
    sol.modes.emplace_back(X.col(c).data(), X.col(c).data() + N);
  }
  return sol;
}

}  // namespace

EigenSolution lowest_spectrum(const SymmetricOperator& op, int k, const SpectrumOptions& opt) {
  if (k < 1 || k > 6) throw SpectralError("between 1 and 6 eigenpairs can be requested");
  if (k > op.size()) throw SpectralError("more eigenpairs than unknowns");
  const linalg::MMatrixFactor fac(op.stiffness_band(), op.stiffness_excess());
  EigenSolution sol = opt.method == SpectrumOptions::Method::dense ? dense_spectrum(op, k)
                                                                    : iterative_spectrum(op, fac, k, opt);
  perron_polish(op, fac, sol.modes[0]);
  for (std::size_t c = 1; c < sol.modes.size(); ++c) {
    normalize(op, sol.modes[c]);
    fix_sign(op, sol.modes[c]);
  }
  for (std::size_t c = 0; c < sol.modes.size(); ++c)
    sol.residuals.push_back(relative_residual(op, sol.modes[c], sol.eigenvalues[c]));
  if (!(sol.eigenvalues[0] > 0)) throw SpectralError("lowest eigenvalue is not positive");
  return sol;
}

int subspace_dimension_below(const SymmetricOperator& op, double threshold) {
  if (!(threshold > 0)) throw SpectralError("threshold must be positive");
  return linalg::count_below(op.symmetric_band(), threshold);
}

// ------------------------------------------------------------ functionals

QsdMeasure qsd_measure(const SymmetricOperator& op, const EigenSolution& sol) {
  const auto& u = sol.ground();
  QsdMeasure q;
  q.weights.resize(u.size());
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    q.weights[i] = u[i] * op.mass[i];
    s += q.weights[i];
  }
  for (double& w : q.weights) w /= s;
  return q;
}

NodeMask region_mask(const Mesh& mesh, const std::function<bool(const EvalPoint&)>& inside) {
  NodeMask m(mesh.nodes.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = inside(mesh.nodes[i]) ? 1 : 0;
  return m;
}

NodeMask well_mask(const Mesh& mesh, const LandscapeReport& report, int well) {
  return region_mask(mesh, [&](const EvalPoint& p) { return report.well_at(p) == well; });
}

double region_mass(const QsdMeasure& m, const NodeMask& region) {
  if (region.size() != m.weights.size()) throw SpectralError("region mask does not match the mesh");
  double s = 0;
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region[i]) s += m.weights[i];
  return s;
}

const char* to_string(FluxScheme s) { return s == FluxScheme::conservative ? "conservative" : "three_point"; }

std::vector<double> exit_face_weights(const SymmetricOperator& op, const EigenSolution& sol, FluxScheme scheme) {
  const auto& u = sol.ground();
  const double lambda = sol.eigenvalues.at(0);
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw SpectralError("lambda_1 is not positive; the exit law is not resolved");
  double denom = 0;
  for (std::size_t i = 0; i < u.size(); ++i) denom += op.mass[i] * u[i];
  denom *= lambda;
  const Mesh& m = *op.mesh;
  // Summing K u = lambda M u over all nodes leaves the boundary flux alone on
  // the left; when lambda_1 is below what the pair resolves this fails first.
  double flux = 0;
  for (std::size_t q = 0; q < m.faces.size(); ++q) flux += op.face_k[q] * u[at(m.faces[q].node)];
  if (!(std::abs(flux / denom - 1) <= 1e-6)) {
    std::ostringstream os;
    os << "lambda_1 = " << lambda << " is below the solver resolution: boundary flux / (lambda_1 sum M u) = "
       << flux / denom;
    throw SpectralError(os.str());
  }
  std::vector<double> w(m.faces.size());
  for (std::size_t q = 0; q < m.faces.size(); ++q) {
    const auto& fc = m.faces[q];
    const double u1 = u[at(fc.node)];
    if (scheme == FluxScheme::conservative) {
      w[q] = op.face_k[q] * u1 / denom;
    } else {
      // -du/dn at the Dirichlet node from u(0) = 0, u(d) = u1, u(2d) = u2
      const double dudn = fc.inner >= 0 ? (4 * u1 - u[at(fc.inner)]) / (2 * fc.distance) : u1 / fc.distance;
      w[q] = 0.5 * op.h * fc.area * std::exp(-2 * (op.face_f[q] - op.fmin) / op.h) * dudn / denom;
    }
  }
  return w;
}

double exit_expectation(const SymmetricOperator& op, const EigenSolution& sol,
                        const std::function<double(const EvalPoint&)>& F, FluxScheme scheme) {
  const auto w = exit_face_weights(op, sol, scheme);
  double s = 0;
  for (std::size_t q = 0; q < w.size(); ++q) s += F(op.mesh->faces[q].point) * w[q];
  return s;
}

double laplace_reference(const LandscapeReport& report, const std::function<bool(const EvalPoint&)>& region,
                         double h) {
  const CriticalPoint* hit = nullptr;
  int count = 0;
  for (const auto& p : report.points)
    if (p.kind == PointKind::minimum && region(p.x)) {
      hit = &p;
      ++count;
    }
  if (count != 1)
    throw SpectralError("laplace_reference needs exactly one minimum in the region, found " + std::to_string(count));
  const int d = report.potential.dim();
  return std::pow(h * std::numbers::pi, d / 2.0) * std::exp(-2 * hit->value / h) / std::sqrt(hit->hess_det);
}

}  // namespace metastab
