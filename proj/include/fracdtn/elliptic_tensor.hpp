#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

#include "fracdtn/geometry.hpp"

namespace fracdtn {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Symmetric coefficient field A(x) with uniform ellipticity constant
/// gamma in (0,1): gamma <= xi^T A(x) xi <= 1/gamma for unit xi.
class EllipticTensorField {
 public:
  using Evaluator = std::function<SmallMatrix(const Point&)>;

  static EllipticTensorField constant(const SmallMatrix& matrix);
  static EllipticTensorField from_function(int dimension, Evaluator evaluate,
                                           double gamma, std::string description);

  SmallMatrix at(const Point& x) const { return evaluate_(x); }
  int dimension() const { return dimension_; }
  double gamma() const { return gamma_; }
  const std::string& description() const { return description_; }

  /// Checks symmetry and the ellipticity window by sampling the eigenvalues of
  /// A(x) at every grid node. Throws ValidationError on violation.
  void validate_on(const Grid& grid) const;

 private:
  EllipticTensorField(int dimension, Evaluator evaluate, double gamma,
                      std::string description);

  int dimension_;
  Evaluator evaluate_;
  double gamma_;
  std::string description_;
};

}  // namespace fracdtn
