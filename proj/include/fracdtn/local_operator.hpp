#pragma once

#include <Eigen/Core>

#include "fracdtn/elliptic_tensor.hpp"
#include "fracdtn/geometry.hpp"

namespace fracdtn {

/// Dense symmetric positive-semidefinite discretization of -div(A grad) over
/// all grid nodes, with values assumed zero outside the computational box.
class LocalOperator {
 public:
  /// Wraps an explicit symmetric matrix (used for analytic toy systems).
  LocalOperator(Eigen::MatrixXd matrix, double spacing);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double spacing() const { return spacing_; }
  Eigen::Index size() const { return matrix_.rows(); }

 private:
  Eigen::MatrixXd matrix_;
  double spacing_;
};

/// Finite-difference assembly with face-averaged coefficients. Diagonal
/// entries of A feed the axis stencil; off-diagonal entries are split by sign
/// onto the two lattice diagonals, which keeps the matrix symmetric and the
/// quadratic form nonnegative. Requires a_kk >= sum_{l != k} |a_kl| at face
/// midpoints (checked during assembly).
LocalOperator assemble_local_operator(const Grid& grid,
                                      const EllipticTensorField& field);

}  // namespace fracdtn
