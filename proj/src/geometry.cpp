#include "fracdtn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fracdtn/errors.hpp"

namespace fracdtn {

Grid::Grid(int dimension, double half_width, int nodes_per_axis)
    : dimension_(dimension),
      half_width_(half_width),
      nodes_per_axis_(nodes_per_axis) {
  if (dimension != 2 && dimension != 3)
    throw ValidationError("grid dimension must be 2 or 3, got " +
                          std::to_string(dimension));
  if (nodes_per_axis < 3)
    throw ValidationError("grid needs at least 3 nodes per axis, got " +
                          std::to_string(nodes_per_axis));
  if (!(half_width > 0.0))
    throw ValidationError("grid half-width must be positive");
  spacing_ = 2.0 * half_width / (nodes_per_axis - 1);
  cell_measure_ = std::pow(spacing_, dimension);
  node_count_ = 1;
  for (int k = 0; k < dimension; ++k) node_count_ *= nodes_per_axis;
}

Point Grid::node(int index) const {
  const auto multi = multi_index(index);
  Point x(dimension_);
  for (int k = 0; k < dimension_; ++k) x[k] = coordinate(multi[k]);
  return x;
}

int Grid::index_of(const std::array<int, 3>& multi) const {
  int idx = 0;
  for (int k = dimension_ - 1; k >= 0; --k) idx = idx * nodes_per_axis_ + multi[k];
  return idx;
}

std::array<int, 3> Grid::multi_index(int index) const {
  std::array<int, 3> multi{0, 0, 0};
  for (int k = 0; k < dimension_; ++k) {
    multi[k] = index % nodes_per_axis_;
    index /= nodes_per_axis_;
  }
  return multi;
}

bool Grid::in_lattice(const std::array<int, 3>& multi) const {
  for (int k = 0; k < dimension_; ++k)
    if (multi[k] < 0 || multi[k] >= nodes_per_axis_) return false;
  return true;
}

Grid build_grid(int dimension, double half_width, int nodes_per_axis) {
  return Grid(dimension, half_width, nodes_per_axis);
}

Shape Shape::ball(Point center, double radius) {
  if (!(radius > 0.0)) throw ValidationError("ball radius must be positive");
  Shape s;
  s.kind = Kind::ball;
  s.center = std::move(center);
  s.radius = radius;
  return s;
}

Shape Shape::box(Point lo, Point hi) {
  if (lo.size() != hi.size())
    throw ValidationError("box corners must have the same dimension");
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (!(lo[k] < hi[k])) throw ValidationError("box corners must satisfy lo < hi");
  Shape s;
  s.kind = Kind::box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

bool Shape::contains_strict(const Point& x) const {
  if (kind == Kind::ball) return (x - center).norm() < radius;
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (!(x[k] > lo[k] && x[k] < hi[k])) return false;
  return true;
}

std::string Shape::describe() const {
  std::ostringstream os;
  if (kind == Kind::ball) {
    os << "ball(center=[" << center.transpose() << "], r=" << radius << ")";
  } else {
    os << "box([" << lo.transpose() << "],[" << hi.transpose() << "])";
  }
  return os.str();
}

bool ShapeSpec::contains_strict(const Point& x) const {
  for (const auto& s : parts_)
    if (s.contains_strict(x)) return true;
  return false;
}

std::string ShapeSpec::describe() const {
  if (parts_.empty()) return "empty";
  std::string out;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) out += " U ";
    out += parts_[i].describe();
  }
  return out;
}

namespace {

// Distance from a point to the closure of a box; zero inside.
double box_distance(const Point& lo, const Point& hi, const Point& x) {
  double d2 = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double d = std::max({lo[k] - x[k], x[k] - hi[k], 0.0});
    d2 += d * d;
  }
  return std::sqrt(d2);
}

bool primitive_strictly_inside(const Shape& inner, const Shape& outer) {
  if (outer.kind == Shape::Kind::ball) {
    if (inner.kind == Shape::Kind::ball)
      return (inner.center - outer.center).norm() + inner.radius < outer.radius;
    // box in ball: all corners strictly inside
    const Eigen::Index n = inner.lo.size();
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
      Point p(n);
      for (Eigen::Index k = 0; k < n; ++k)
        p[k] = (c >> k & 1) ? inner.hi[k] : inner.lo[k];
      if (!((p - outer.center).norm() < outer.radius)) return false;
    }
    return true;
  }
  // outer is a box
  if (inner.kind == Shape::Kind::ball) {
    for (Eigen::Index k = 0; k < inner.center.size(); ++k) {
      if (!(inner.center[k] - inner.radius > outer.lo[k])) return false;
      if (!(inner.center[k] + inner.radius < outer.hi[k])) return false;
    }
    return true;
  }
  for (Eigen::Index k = 0; k < inner.lo.size(); ++k)
    if (!(inner.lo[k] > outer.lo[k] && inner.hi[k] < outer.hi[k])) return false;
  return true;
}

bool primitive_closure_disjoint(const Shape& a, const Shape& b) {
  if (a.kind == Shape::Kind::ball && b.kind == Shape::Kind::ball)
    return (a.center - b.center).norm() > a.radius + b.radius;
  if (a.kind == Shape::Kind::ball && b.kind == Shape::Kind::box)
    return box_distance(b.lo, b.hi, a.center) > a.radius;
  if (a.kind == Shape::Kind::box && b.kind == Shape::Kind::ball)
    return box_distance(a.lo, a.hi, b.center) > b.radius;
  for (Eigen::Index k = 0; k < a.lo.size(); ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return true;
  return false;
}

}  // namespace

bool ShapeSpec::strictly_inside(const ShapeSpec& outer) const {
  for (const auto& inner_part : parts_) {
    bool covered = false;
    for (const auto& outer_part : outer.parts_) {
      if (primitive_strictly_inside(inner_part, outer_part)) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

bool ShapeSpec::closure_disjoint_from(const ShapeSpec& other) const {
  for (const auto& a : parts_)
    for (const auto& b : other.parts_)
      if (!primitive_closure_disjoint(a, b)) return false;
  return true;
}

DomainPartition partition(const Grid& grid, const ShapeSpec& omega,
                          const ShapeSpec& obstacle, const ShapeSpec& o1,
                          const ShapeSpec& o2) {
  if (omega.is_empty()) throw ValidationError("omega shape must be nonempty");
  if (o1.is_empty() || o2.is_empty())
    throw ValidationError("both measurement patches must be nonempty shapes");

  if (!obstacle.is_empty() && !obstacle.strictly_inside(omega))
    throw ValidationError("obstacle " + obstacle.describe() +
                          " is not strictly contained in omega " + omega.describe());
  if (!o1.closure_disjoint_from(omega))
    throw ValidationError("patch O1 " + o1.describe() +
                          " must be disjoint from the closure of omega");
  if (!o2.closure_disjoint_from(omega))
    throw ValidationError("patch O2 " + o2.describe() +
                          " must be disjoint from the closure of omega");

  DomainPartition part;
  for (int i = 0; i < grid.node_count(); ++i) {
    const Point x = grid.node(i);
    if (omega.contains_strict(x)) {
      part.interior.push_back(i);
      if (obstacle.contains_strict(x)) {
        part.obstacle.push_back(i);
      } else {
        part.annulus.push_back(i);
      }
    } else {
      part.exterior.push_back(i);
      if (obstacle.contains_strict(x))
        throw ValidationError("obstacle node outside omega at index " +
                              std::to_string(i));
      if (o1.contains_strict(x)) part.control.push_back(i);
      if (o2.contains_strict(x)) part.observation.push_back(i);
    }
  }

  if (part.annulus.empty())
    throw ValidationError("annulus Omega \\ D has no grid nodes");
  if (part.interior.empty())
    throw ValidationError("omega contains no grid nodes");
  if (part.control.empty())
    throw ValidationError("patch O1 contains no grid nodes");
  if (part.observation.empty())
    throw ValidationError("patch O2 contains no grid nodes");
  if (!obstacle.is_empty() && part.obstacle.empty())
    throw ValidationError("obstacle shape contains no grid nodes");

  return part;
}

}  // namespace fracdtn
