#pragma once

// Finite-volume Dirichlet generator on a uniform grid, its lowest eigenpairs,
// and the discrete QSD and exit-law functionals built from the ground state.
//
// Unknowns live at grid nodes strictly inside the domain. The stiffness form
//   (K u)_i = sum_faces (h/2) e^{-2(f_face - fmin)/h} (A/d) (u_i - u_j),
// with u_j = 0 across the boundary, and the mass M_i = e^{-2(f_i - fmin)/h} V
// give K u = lambda M u. The symmetric matrix is M^{-1/2} K M^{-1/2}.

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "metastab/landscape.hpp"
#include "metastab/linalg.hpp"

namespace metastab {

class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when h is below the double-precision floor e^{-2H/h} >= 1e-12.
class AdmissibilityError : public SpectralError {
 public:
  AdmissibilityError(const std::string& what, double h_min) : SpectralError(what), h_min_(h_min) {}
  double minimal_h() const { return h_min_; }

 private:
  double h_min_;
};

struct MeshEdge {
  int a = 0, b = 0;
  double coeff = 0;  // face measure / node distance
  EvalPoint mid;
};

/// Interior node next to the boundary; the neighbour across is a Dirichlet node.
struct BoundaryFace {
  int node = 0;
  int inner = -1;      // next active node inward on the same grid line, -1 if none
  EvalPoint point;     // the Dirichlet node, on the boundary (projected for the disk)
  EvalPoint mid;       // face midpoint
  Vec normal{};        // outward unit normal
  double distance = 0; // node to Dirichlet node
  double area = 1;     // face measure (1 in 1D)
};

struct Mesh {
  Domain domain;
  int nx = 0, ny = 0;  // cells per axis (ny = 0 in 1D)
  double dx = 0, dy = 0;
  Vec lo{};
  double volume = 0;   // dual cell measure
  std::vector<EvalPoint> nodes;
  std::vector<std::array<int, 2>> grid;  // (i, j) grid index of each node
  std::vector<int> node_of;              // grid -> node, -1 if inactive
  std::vector<MeshEdge> edges;
  std::vector<BoundaryFace> faces;
  int bandwidth = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  int dim() const { return domain.dim(); }
  double spacing() const { return std::max(dx, dy); }
  int node_at(int i, int j = 0) const;
  /// Node index of the mirror image under x -> lo+hi-x (1D) or a point reflection, -1 if none.
  int mirror(int node, bool flip_x, bool flip_y) const;
};

/// n cells along the longest bounding-box side; the other axis gets the
/// closest spacing. Throws SpectralError for n < 64 or a disconnected mask.
Mesh build_mesh(const Domain& dom, int n);

struct SymmetricOperator {
  std::shared_ptr<const Mesh> mesh;
  double h = 0;
  double fmin = 0;
  double barrier = 0;               // min over boundary of f minus fmin, on the mesh
  std::vector<double> f;            // potential at nodes
  std::vector<double> log_weight;   // (f - fmin)/h; similarity weight is exp(log_weight)
  std::vector<double> mass;         // M_i
  std::vector<double> edge_k;       // |K_ab| per mesh edge
  std::vector<double> face_k;       // K contribution per boundary face
  std::vector<double> face_f;       // f at each face's boundary point
  Eigen::SparseMatrix<double> matrix;
  double norm_bound = 0;            // Gershgorin bound on the symmetric matrix

  int size() const { return static_cast<int>(f.size()); }
  /// K u in the edge form, free of cancellation in the diagonal.
  std::vector<double> apply_stiffness(const std::vector<double>& u) const;
  /// Off-diagonal magnitudes of K in band storage and the row sums.
  linalg::BandMatrix stiffness_band() const;
  std::vector<double> stiffness_excess() const;
  /// The symmetric matrix in band storage.
  linalg::BandMatrix symmetric_band() const;
};

/// Smallest h with e^{-2H/h} >= 1e-12.
double minimal_admissible_h(double H);

SymmetricOperator discretize_generator(const Potential& pot, double h, int n);
SymmetricOperator discretize_generator(const Potential& pot, double h, std::shared_ptr<const Mesh> mesh);

struct SpectrumOptions {
  enum class Method { iterative, dense };
  Method method = Method::iterative;
  double tol = 1e-10;  // residual, relative to |A| |v|
  double degenerate_tol = 1e-8;  // relative spread below which the lowest pair is one cluster
  int max_iter = 400;
  int guard = 3;       // extra block vectors
};

struct EigenSolution {
  std::vector<double> eigenvalues;           // ascending
  std::vector<std::vector<double>> modes;    // u at nodes, sum M u^2 = 1
  std::vector<double> residuals;             // |A v - lambda v| / (|A| |v|)
  int iterations = 0;
  std::string method;

  const std::vector<double>& ground() const { return modes.at(0); }
};

EigenSolution lowest_spectrum(const SymmetricOperator& op, int k, const SpectrumOptions& opt = {});

/// Eigenvalues strictly below `threshold`, by an inertia count.
int subspace_dimension_below(const SymmetricOperator& op, double threshold);

struct QsdMeasure {
  std::vector<double> weights;  // per node, summing to 1
};

QsdMeasure qsd_measure(const SymmetricOperator& op, const EigenSolution& sol);

using NodeMask = std::vector<char>;
NodeMask region_mask(const Mesh& mesh, const std::function<bool(const EvalPoint&)>& inside);
/// Nodes whose well label is `well` (1 or 2).
NodeMask well_mask(const Mesh& mesh, const LandscapeReport& report, int well);
double region_mass(const QsdMeasure& m, const NodeMask& region);

enum class FluxScheme { conservative, three_point };
const char* to_string(FluxScheme s);

/// Probability of leaving through each boundary face.
std::vector<double> exit_face_weights(const SymmetricOperator& op, const EigenSolution& sol,
                                      FluxScheme scheme = FluxScheme::conservative);
double exit_expectation(const SymmetricOperator& op, const EigenSolution& sol,
                        const std::function<double(const EvalPoint&)>& F,
                        FluxScheme scheme = FluxScheme::conservative);

/// (h pi)^{d/2} e^{-2 f(x_i)/h} / sqrt(det Hess f(x_i)) for the single minimum in `region`.
double laplace_reference(const LandscapeReport& report, const std::function<bool(const EvalPoint&)>& region,
                         double h);

}  // namespace metastab
