#include "fracdtn/elliptic_tensor.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>

#include "fracdtn/errors.hpp"

namespace fracdtn {

namespace {
constexpr double kSymmetryTol = 1e-12;
constexpr double kEllipticityTol = 1e-10;
}  // namespace

EllipticTensorField::EllipticTensorField(int dimension, Evaluator evaluate,
                                         double gamma, std::string description)
    : dimension_(dimension),
      evaluate_(std::move(evaluate)),
      gamma_(gamma),
      description_(std::move(description)) {
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw ValidationError("ellipticity constant must lie in (0,1), got " +
                          std::to_string(gamma_));
}

EllipticTensorField EllipticTensorField::constant(const SmallMatrix& matrix) {
  const int n = static_cast<int>(matrix.rows());
  if (matrix.cols() != n) throw ValidationError("tensor matrix must be square");
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(1.0, matrix.cwiseAbs().maxCoeff()))
    throw ValidationError("tensor matrix is not symmetric");
  SmallMatrix sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<SmallMatrix> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0))
    throw ValidationError("tensor matrix is not positive definite");
  const double gamma = std::min({lo, 1.0 / hi, 1.0 - 1e-12});
  std::ostringstream desc;
  desc << "constant[";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) desc << sym(i, j) << (i + 1 == n && j + 1 == n ? "]" : ",");
  return EllipticTensorField(
      n, [sym](const Point&) { return sym; }, gamma, desc.str());
}

EllipticTensorField EllipticTensorField::from_function(int dimension,
                                                       Evaluator evaluate,
                                                       double gamma,
                                                       std::string description) {
  return EllipticTensorField(dimension, std::move(evaluate), gamma,
                             std::move(description));
}

void EllipticTensorField::validate_on(const Grid& grid) const {
  if (grid.dimension() != dimension_)
    throw ValidationError("tensor field dimension does not match grid");
  for (int i = 0; i < grid.node_count(); ++i) {
    const Point x = grid.node(i);
    const SmallMatrix a = evaluate_(x);
    if (a.rows() != dimension_ || a.cols() != dimension_)
      throw ValidationError("tensor field returned a matrix of wrong size");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale)
      throw ValidationError("tensor field is not symmetric at node " +
                            std::to_string(i));
    Eigen::SelfAdjointEigenSolver<SmallMatrix> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < gamma_ - kEllipticityTol || hi > 1.0 / gamma_ + kEllipticityTol) {
      std::ostringstream os;
      os << "ellipticity violated at node " << i << ": eigenvalues in [" << lo
         << ", " << hi << "] vs admissible [" << gamma_ << ", " << 1.0 / gamma_
         << "]";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace fracdtn
