#pragma once

// Critical structure of a potential on a domain: interior critical points,
// generalized saddle points on the boundary, the two wells below the lowest
// boundary value, and the double-well verdict.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metastab/potential.hpp"

namespace metastab {

/// Geometry or Morse-structure violation found while searching the landscape.
class LandscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PointKind { minimum, saddle, maximum };
const char* to_string(PointKind k);

struct CriticalPoint {
  EvalPoint x;
  double value = 0;
  Mat hessian{};
  Vec hess_eigenvalues{};  // ascending; second entry unused in 1D
  double hess_det = 0;
  PointKind kind = PointKind::minimum;
  std::optional<double> negative_eigenvalue;  // index-1 saddles only
  double grad_norm = 0;
};

struct BoundarySaddle {
  EvalPoint x;
  double value = 0;
  double normal_derivative = 0;
  double tangential_det = 1;  // d/ds^2 of f along the boundary; 1 in 1D
  Vec normal{};
  int well = 0;  // 1, 2, or 0 when the point is not on the closure of a well
};

/// Local minimum of f restricted to the boundary, whatever the sign of the
/// normal derivative; corners of a rectangle are reported separately.
struct BoundaryMinimum {
  EvalPoint x;
  double value = 0;
  double normal_derivative = 0;
  double tangential_second = 0;
  bool corner = false;
};

struct WellDecomposition {
  double threshold = 0;  // min of f over the boundary
  // Flood-fill grid: cell centres over the bounding box, row-major in x.
  int nx = 0, ny = 1;
  Vec lo{}, cell{};
  std::vector<int> label;  // -1 outside, 0 not below threshold, 1/2 wells, >2 other components
  int components = 0;

  // Indices into LandscapeReport::saddles (boundary) and ::points (interior).
  std::vector<int> contacts[2];
  std::vector<int> connecting;      // interior saddles on the closure of both wells (m_3 of them)
  std::vector<int> other_interior;  // remaining interior index-1 saddles
  std::vector<int> other_boundary;  // generalized saddles on the boundary of neither well
  int n1 = 0, n2 = 0, m3 = 0, n3 = 0;
  std::vector<std::string> problems;

  int cell_index(const EvalPoint& p) const;
  EvalPoint cell_center(int idx) const;
  std::size_t size() const { return label.size(); }
};

struct LandscapeReport {
  explicit LandscapeReport(Potential pot) : potential(std::move(pot)) {}

  Potential potential;
  std::vector<CriticalPoint> points;
  std::vector<BoundarySaddle> saddles;  // generalized saddles on the boundary
  std::vector<BoundaryMinimum> boundary_minima;
  WellDecomposition wells;
  int x1 = -1, x2 = -1;  // indices into points of the two minima (x_1 < x_2 lexicographically)
  double H = 0;
  double min_value = 0;
  bool pass = false;
  std::string reason;  // empty on pass
  std::vector<std::string> warnings;

  const CriticalPoint& minimum(int well) const { return points.at(static_cast<std::size_t>(well == 1 ? x1 : x2)); }
  /// Well (1 or 2) containing p, 0 if p lies outside both wells.
  int well_at(const EvalPoint& p) const;
  /// Generalized saddles on the boundary of well i (i = 1, 2), as indices into saddles.
  const std::vector<int>& contacts(int well) const { return wells.contacts[well - 1]; }
};

struct LandscapeOptions {
  int grid_density = 64;      // Newton seeds per axis
  int resolution = 0;         // flood-fill cells per axis; 0 -> 1024 (1D) / 512 (2D)
  int boundary_samples = 512; // samples per boundary piece for the tangential search
};

std::vector<CriticalPoint> locate_critical_points(const Potential& pot, int grid_density,
                                                  std::vector<std::string>* warnings = nullptr);

/// All local minima of f on the boundary (both signs of the normal derivative).
std::vector<BoundaryMinimum> locate_boundary_minima(const Potential& pot, int samples = 512);

/// Local minima of f on the boundary with positive outward normal derivative.
std::vector<BoundarySaddle> locate_boundary_saddles(const Potential& pot, int samples = 512);

WellDecomposition decompose_wells(const Potential& pot, const std::vector<CriticalPoint>& points,
                                  std::vector<BoundarySaddle>& saddles,
                                  const std::vector<BoundaryMinimum>& bmins, int resolution);

/// Applies the double-well hypothesis clause by clause and assembles the report.
LandscapeReport check_hwell(const Potential& pot, std::vector<CriticalPoint> points,
                            std::vector<BoundarySaddle> saddles, std::vector<BoundaryMinimum> bmins,
                            WellDecomposition dec);

/// Runs the whole landscape stage.
LandscapeReport analyze_landscape(const Potential& pot, const LandscapeOptions& opt = {});

/// Eigen-decomposition of a symmetric 1x1 / 2x2 matrix, ascending.
Vec symmetric_eigenvalues(const Mat& m, int dim);

}  // namespace metastab
