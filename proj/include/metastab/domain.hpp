#pragma once

// Bounded Euclidean domains in one and two dimensions: interval, rectangle
// and disk. Geometry queries used by the landscape search, the mesh builder
// and the path simulator.

#include <string>
#include <vector>

#include "metastab/expr.hpp"

namespace metastab {

using expr::EvalPoint;
using expr::Mat;
using expr::Vec;

enum class DomainKind { interval, rectangle, disk };

/// A smooth piece of the boundary, parameterised by arclength s in [0, length].
/// For an interval the two pieces are the endpoints (length 0).
struct BoundaryPiece {
  EvalPoint origin;   // point at s = 0 (disk: angle 0)
  Vec tangent{};      // unit tangent (edges)
  Vec normal{};       // outward normal (edges, endpoints)
  double length = 0;  // 0 for endpoints; 2*pi*r for the disk
  bool closed = false;
};

struct Domain {
  DomainKind kind = DomainKind::interval;
  double a = 0, b = 1;                     // interval
  double ax = 0, bx = 1, ay = 0, by = 1;   // rectangle
  double cx = 0, cy = 0, r = 1;            // disk

  static Domain interval(double a, double b);
  static Domain rectangle(double ax, double bx, double ay, double by);
  static Domain disk(double cx, double cy, double r);

  int dim() const { return kind == DomainKind::interval ? 1 : 2; }
  std::string describe() const;

  /// Axis-aligned bounding box [lo[0],hi[0]] x [lo[1],hi[1]] (second axis unused in 1D).
  Vec lo() const;
  Vec hi() const;
  double diameter() const;

  bool inside(const EvalPoint& p) const;  // open set
  /// Signed distance to the boundary, positive inside.
  double distance_to_boundary(const EvalPoint& p) const;
  EvalPoint project_to_boundary(const EvalPoint& p) const;
  /// Outward unit normal at (or nearest to) a boundary point.
  Vec outward_normal(const EvalPoint& p) const;

  std::vector<BoundaryPiece> boundary_pieces() const;
  /// Point and derivatives of the arclength parameterisation of a piece:
  /// gamma(s), gamma'(s) (unit tangent), gamma''(s) (curvature vector).
  void piece_eval(const BoundaryPiece& piece, double s, EvalPoint& p, Vec& d1, Vec& d2) const;
  /// Corners of the rectangle; empty for smooth boundaries.
  std::vector<EvalPoint> corners() const;
  /// Evenly spaced boundary points, `per_piece` on each curved/straight piece.
  std::vector<EvalPoint> boundary_probe(int per_piece) const;
  /// Evenly spaced interior probe points, `per_axis` per dimension.
  std::vector<EvalPoint> interior_probe(int per_axis) const;

  /// First exit of the segment p0 -> p1 (p0 inside). Returns the fraction
  /// t in (0,1] at which the segment meets the boundary, or a value > 1 when
  /// p1 is inside as well.
  double segment_exit(const EvalPoint& p0, const EvalPoint& p1) const;

  /// Flat boundary components close to p, as (distance, outward normal) pairs.
  /// For the disk this is the single circle, treated as locally flat.
  struct Wall {
    double distance;
    Vec normal;
  };
  std::vector<Wall> nearby_walls(const EvalPoint& p, double cutoff) const;

  void validate() const;
};

}  // namespace metastab
