#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

namespace fracdtn {

/// A grid point; dimension 2 or 3, stack-allocated.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Uniform node lattice on the computational box [-R, R]^n. Values are assumed
/// to vanish identically outside the box (homogeneous extension), so every
/// node is a degree of freedom.
class Grid {
 public:
  Grid(int dimension, double half_width, int nodes_per_axis);

  int dimension() const { return dimension_; }
  double half_width() const { return half_width_; }
  int nodes_per_axis() const { return nodes_per_axis_; }
  double spacing() const { return spacing_; }
  double cell_measure() const { return cell_measure_; }  // h^n
  int node_count() const { return node_count_; }

  Point node(int index) const;
  double coordinate(int axis_index) const {
    return -half_width_ + spacing_ * axis_index;
  }

  /// Lexicographic index with the first axis fastest.
  int index_of(const std::array<int, 3>& multi) const;
  std::array<int, 3> multi_index(int index) const;

  /// True if the multi-index lies inside the node lattice.
  bool in_lattice(const std::array<int, 3>& multi) const;

 private:
  int dimension_;
  double half_width_;
  int nodes_per_axis_;
  double spacing_;
  double cell_measure_;
  int node_count_;
};

Grid build_grid(int dimension, double half_width, int nodes_per_axis);

/// Axis-aligned primitive: open ball or open box.
struct Shape {
  enum class Kind { ball, box };

  Kind kind = Kind::ball;
  Point center;  // ball
  double radius = 0.0;
  Point lo, hi;  // box corners

  static Shape ball(Point center, double radius);
  static Shape box(Point lo, Point hi);

  bool contains_strict(const Point& x) const;
  std::string describe() const;
};

/// Finite union of primitives. An empty spec denotes the empty set (used for
/// scenarios without an obstacle).
class ShapeSpec {
 public:
  ShapeSpec() = default;
  explicit ShapeSpec(std::vector<Shape> parts) : parts_(std::move(parts)) {}
  static ShapeSpec empty() { return ShapeSpec(); }

  bool is_empty() const { return parts_.empty(); }
  const std::vector<Shape>& parts() const { return parts_; }
  void add(Shape s) { parts_.push_back(std::move(s)); }

  bool contains_strict(const Point& x) const;
  std::string describe() const;

  /// Conservative geometric test: every part of this union lies strictly
  /// inside a single part of `outer`.
  bool strictly_inside(const ShapeSpec& outer) const;
  /// Exact for primitive pairs: the closures of the two unions do not meet.
  bool closure_disjoint_from(const ShapeSpec& other) const;

 private:
  std::vector<Shape> parts_;
};

/// Node index sets for the regions of the problem. Indices are sorted
/// ascending; `annulus` carries the potential, `exterior` the Dirichlet data.
struct DomainPartition {
  std::vector<int> interior;     // nodes strictly inside Omega
  std::vector<int> obstacle;     // nodes strictly inside D
  std::vector<int> annulus;      // interior minus obstacle
  std::vector<int> exterior;     // all remaining nodes
  std::vector<int> control;      // O1, subset of exterior
  std::vector<int> observation;  // O2, subset of exterior
};

/// Classifies every grid node by strict interior tests and validates the
/// region invariants (obstacle strictly contained, patches disjoint from the
/// closure of Omega, no empty patch). Throws ValidationError on violation.
DomainPartition partition(const Grid& grid, const ShapeSpec& omega,
                          const ShapeSpec& obstacle, const ShapeSpec& o1,
                          const ShapeSpec& o2);

}  // namespace fracdtn
