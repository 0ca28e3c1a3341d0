#include "metastab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace metastab {

Domain Domain::interval(double a, double b) {
  Domain d;
  d.kind = DomainKind::interval;
  d.a = a;
  d.b = b;
  d.validate();
  return d;
}

Domain Domain::rectangle(double ax, double bx, double ay, double by) {
  Domain d;
  d.kind = DomainKind::rectangle;
  d.ax = ax;
  d.bx = bx;
  d.ay = ay;
  d.by = by;
  d.validate();
  return d;
}

Domain Domain::disk(double cx, double cy, double r) {
  Domain d;
  d.kind = DomainKind::disk;
  d.cx = cx;
  d.cy = cy;
  d.r = r;
  d.validate();
  return d;
}

void Domain::validate() const {
  auto finite = [](std::initializer_list<double> v) {
    return std::all_of(v.begin(), v.end(), [](double t) { return std::isfinite(t); });
  };
  switch (kind) {
    case DomainKind::interval:
      if (!finite({a, b}) || !(b > a)) throw std::invalid_argument("interval needs finite a < b");
      break;
    case DomainKind::rectangle:
      if (!finite({ax, bx, ay, by}) || !(bx > ax) || !(by > ay))
        throw std::invalid_argument("rectangle needs finite ax < bx and ay < by");
      break;
    case DomainKind::disk:
      if (!finite({cx, cy, r}) || !(r > 0)) throw std::invalid_argument("disk needs a positive radius");
      break;
  }
}

std::string Domain::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case DomainKind::interval:
      os << "interval(" << a << ", " << b << ")";
      break;
    case DomainKind::rectangle:
      os << "rectangle(" << ax << ", " << bx << ", " << ay << ", " << by << ")";
      break;
    case DomainKind::disk:
      os << "disk((" << cx << ", " << cy << "), " << r << ")";
      break;
  }
  return os.str();
}

Vec Domain::lo() const {
  switch (kind) {
    case DomainKind::interval: return {a, 0.0};
    case DomainKind::rectangle: return {ax, ay};
    case DomainKind::disk: return {cx - r, cy - r};
  }
  return {};
}

Vec Domain::hi() const {
  switch (kind) {
    case DomainKind::interval: return {b, 0.0};
    case DomainKind::rectangle: return {bx, by};
    case DomainKind::disk: return {cx + r, cy + r};
  }
  return {};
}

double Domain::diameter() const {
  switch (kind) {
    case DomainKind::interval: return b - a;
    case DomainKind::rectangle: return std::hypot(bx - ax, by - ay);
    case DomainKind::disk: return 2 * r;
  }
  return 0;
}

bool Domain::inside(const EvalPoint& p) const { return distance_to_boundary(p) > 0; }

double Domain::distance_to_boundary(const EvalPoint& p) const {
  switch (kind) {
    case DomainKind::interval:
      return std::min(p[0] - a, b - p[0]);
    case DomainKind::rectangle:
      return std::min({p[0] - ax, bx - p[0], p[1] - ay, by - p[1]});
    case DomainKind::disk:
      return r - std::hypot(p[0] - cx, p[1] - cy);
  }
  return 0;
}

EvalPoint Domain::project_to_boundary(const EvalPoint& p) const {
  switch (kind) {
    case DomainKind::interval:
      return EvalPoint(p[0] - a < b - p[0] ? a : b);
    case DomainKind::rectangle: {
      const double x = std::clamp(p[0], ax, bx), y = std::clamp(p[1], ay, by);
      const double d[4] = {x - ax, bx - x, y - ay, by - y};
      const int k = static_cast<int>(std::min_element(d, d + 4) - d);
      switch (k) {
        case 0: return EvalPoint(ax, y);
        case 1: return EvalPoint(bx, y);
        case 2: return EvalPoint(x, ay);
        default: return EvalPoint(x, by);
      }
    }
    case DomainKind::disk: {
      double dx = p[0] - cx, dy = p[1] - cy;
      const double n = std::hypot(dx, dy);
      if (n == 0) {
        dx = 1;
        dy = 0;
      } else {
        dx /= n;
        dy /= n;
      }
      return EvalPoint(cx + r * dx, cy + r * dy);
    }
  }
  return p;
}

Vec Domain::outward_normal(const EvalPoint& p) const {
  switch (kind) {
    case DomainKind::interval:
      return {p[0] - a < b - p[0] ? -1.0 : 1.0, 0.0};
    case DomainKind::rectangle: {
      const double d[4] = {std::abs(p[0] - ax), std::abs(bx - p[0]), std::abs(p[1] - ay),
                           std::abs(by - p[1])};
      const int k = static_cast<int>(std::min_element(d, d + 4) - d);
      static const Vec normals[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      return normals[k];
    }
    case DomainKind::disk: {
      const double dx = p[0] - cx, dy = p[1] - cy;
      const double n = std::hypot(dx, dy);
      if (n == 0) return {1.0, 0.0};
      return {dx / n, dy / n};
    }
  }
  return {};
}

std::vector<BoundaryPiece> Domain::boundary_pieces() const {
  std::vector<BoundaryPiece> out;
  switch (kind) {
    case DomainKind::interval: {
      BoundaryPiece left, right;
      left.origin = EvalPoint(a);
      left.normal = {-1, 0};
      right.origin = EvalPoint(b);
      right.normal = {1, 0};
      out = {left, right};
      break;
    }
    case DomainKind::rectangle: {
      const double w = bx - ax, hgt = by - ay;
      out.push_back({EvalPoint(ax, ay), {1, 0}, {0, -1}, w, false});
      out.push_back({EvalPoint(bx, ay), {0, 1}, {1, 0}, hgt, false});
      out.push_back({EvalPoint(bx, by), {-1, 0}, {0, 1}, w, false});
      out.push_back({EvalPoint(ax, by), {0, -1}, {-1, 0}, hgt, false});
      break;
    }
    case DomainKind::disk: {
      BoundaryPiece c;
      c.origin = EvalPoint(cx + r, cy);
      c.length = 2 * std::numbers::pi * r;
      c.closed = true;
      out.push_back(c);
      break;
    }
  }
  return out;
}

void Domain::piece_eval(const BoundaryPiece& piece, double s, EvalPoint& p, Vec& d1, Vec& d2) const {
  if (kind == DomainKind::disk) {
    const double t = s / r;
    p = EvalPoint(cx + r * std::cos(t), cy + r * std::sin(t));
    d1 = {-std::sin(t), std::cos(t)};
    d2 = {-std::cos(t) / r, -std::sin(t) / r};
    return;
  }
  p = piece.origin;
  if (dim() == 2) {
    p[0] += s * piece.tangent[0];
    p[1] += s * piece.tangent[1];
  }
  d1 = piece.tangent;
  d2 = {0, 0};
}

std::vector<EvalPoint> Domain::corners() const {
  if (kind != DomainKind::rectangle) return {};
  return {EvalPoint(ax, ay), EvalPoint(bx, ay), EvalPoint(bx, by), EvalPoint(ax, by)};
}

std::vector<EvalPoint> Domain::boundary_probe(int per_piece) const {
  std::vector<EvalPoint> out;
  for (const auto& piece : boundary_pieces()) {
    if (piece.length == 0) {
      out.push_back(piece.origin);
      continue;
    }
    const int n = std::max(per_piece, 2);
    for (int k = 0; k < n; ++k) {
      const double s = piece.closed ? piece.length * k / n : piece.length * k / (n - 1);
      EvalPoint p;
      Vec d1, d2;
      piece_eval(piece, s, p, d1, d2);
      out.push_back(p);
    }
  }
  return out;
}

std::vector<EvalPoint> Domain::interior_probe(int per_axis) const {
  std::vector<EvalPoint> out;
  const Vec l = lo(), u = hi();
  const int n = std::max(per_axis, 2);
  if (dim() == 1) {
    for (int i = 0; i < n; ++i) out.emplace_back(l[0] + (u[0] - l[0]) * (i + 0.5) / n);
    return out;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      EvalPoint p(l[0] + (u[0] - l[0]) * (i + 0.5) / n, l[1] + (u[1] - l[1]) * (j + 0.5) / n);
      if (inside(p)) out.push_back(p);
    }
  }
  return out;
}

double Domain::segment_exit(const EvalPoint& p0, const EvalPoint& p1) const {
  if (inside(p1)) return 2.0;
  switch (kind) {
    case DomainKind::interval: {
      const double bound = p1[0] <= a ? a : b;
      return std::clamp((bound - p0[0]) / (p1[0] - p0[0]), 0.0, 1.0);
    }
    case DomainKind::rectangle: {
      double t = 1.0;
      const double lo_[2] = {ax, ay}, hi_[2] = {bx, by};
      for (int k = 0; k < 2; ++k) {
        const double d = p1[k] - p0[k];
        if (p1[k] < lo_[k]) t = std::min(t, (lo_[k] - p0[k]) / d);
        if (p1[k] > hi_[k]) t = std::min(t, (hi_[k] - p0[k]) / d);
      }
      return std::clamp(t, 0.0, 1.0);
    }
    case DomainKind::disk: {
      const double ox = p0[0] - cx, oy = p0[1] - cy;
      const double dx = p1[0] - p0[0], dy = p1[1] - p0[1];
      const double A = dx * dx + dy * dy;
      const double B = 2 * (ox * dx + oy * dy);
      const double C = ox * ox + oy * oy - r * r;  // negative: p0 inside
      const double disc = std::max(B * B - 4 * A * C, 0.0);
      // larger root, written to avoid cancellation
      const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
      double t = B >= 0 ? C / q : q / A;
      if (!(t >= 0)) t = 0;
      return std::min(t, 1.0);
    }
  }
  return 1.0;
}

std::vector<Domain::Wall> Domain::nearby_walls(const EvalPoint& p, double cutoff) const {
  std::vector<Wall> out;
  auto add = [&](double d, Vec n) {
    if (d < cutoff) out.push_back({d, n});
  };
  switch (kind) {
    case DomainKind::interval:
      add(p[0] - a, {-1, 0});
      add(b - p[0], {1, 0});
      break;
    case DomainKind::rectangle:
      add(p[0] - ax, {-1, 0});
      add(bx - p[0], {1, 0});
      add(p[1] - ay, {0, -1});
      add(by - p[1], {0, 1});
      break;
    case DomainKind::disk: {
      const double dx = p[0] - cx, dy = p[1] - cy;
      const double n = std::hypot(dx, dy);
      if (n > 0) add(r - n, {dx / n, dy / n});
      break;
    }
  }
  return out;
}

}  // namespace metastab
