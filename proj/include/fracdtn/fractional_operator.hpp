#pragma once

#include <Eigen/Core>
#include <memory>

#include "fracdtn/geometry.hpp"
#include "fracdtn/local_operator.hpp"

namespace fracdtn {

/// Full symmetric eigendecomposition of a LocalOperator, eigenvalues ascending
/// and clamped to [0, inf). Shared between fractional powers, heat semigroup
/// applications, and solver assembly.
struct SpectralFactorization {
  Eigen::MatrixXd vectors;  // columns are orthonormal eigenvectors
  Eigen::VectorXd values;   // ascending, nonnegative
  double spacing = 1.0;

  Eigen::Index size() const { return values.size(); }
};

/// Eigendecomposition with a guard against meaningfully negative spectra
/// (anything below -1e-10 * max eigenvalue signals a broken assembly).
SpectralFactorization factorize(const LocalOperator& op);

/// Eigenvalues (ascending) of a dense symmetric matrix; no sign clamping.
Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a);

/// L^s realized through the spectral calculus of the local operator.
class FractionalOperator {
 public:
  FractionalOperator(std::shared_ptr<const SpectralFactorization> fact,
                     double exponent, double cell_measure);

  double exponent() const { return exponent_; }
  double cell_measure() const { return cell_measure_; }
  Eigen::Index size() const { return fact_->size(); }
  const SpectralFactorization& factorization() const { return *fact_; }
  std::shared_ptr<const SpectralFactorization> factorization_ptr() const {
    return fact_;
  }

  /// Dense matrix of L^s.
  const Eigen::MatrixXd& matrix() const { return power_; }
  /// L^s v through the factorization.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

 private:
  std::shared_ptr<const SpectralFactorization> fact_;
  double exponent_;
  double cell_measure_;
  Eigen::MatrixXd power_;
};

/// Spectral route: L^s = V diag(lambda^s) V^T. Requires 0 < s < 1.
/// `cell_measure` (h^n) feeds the discrete integrals; pass the grid overload
/// when the operator lives on a grid.
FractionalOperator spectral_fractional_power(const LocalOperator& op, double s,
                                             double cell_measure = 1.0);
FractionalOperator spectral_fractional_power(const LocalOperator& op, double s,
                                             const Grid& grid);
FractionalOperator spectral_fractional_power(
    std::shared_ptr<const SpectralFactorization> fact, double s,
    double cell_measure = 1.0);

/// e^{-tL} v for t >= 0; contraction in the Euclidean norm.
Eigen::VectorXd heat_semigroup_apply(const SpectralFactorization& fact, double t,
                                     const Eigen::VectorXd& v);
Eigen::VectorXd heat_semigroup_apply(const LocalOperator& op, double t,
                                     const Eigen::VectorXd& v);

/// Independent route to L^s v through the heat-semigroup integral
///   L^s v = 1/Gamma(-s) * int_0^inf (e^{-tL} v - v) dt / t^{1+s},
/// discretized by a trapezoid rule in tau = log t over
/// [log(1e-6 / lambda_max), log(40 / lambda_min)] with Euler-Maclaurin
/// endpoint corrections and analytic corrections for both truncated tails.
/// Throws NumericalError if refinement fails to contract.
Eigen::VectorXd heat_quadrature_fractional_apply(const SpectralFactorization& fact,
                                                 double s,
                                                 const Eigen::VectorXd& v,
                                                 int quadrature_nodes);
Eigen::VectorXd heat_quadrature_fractional_apply(const LocalOperator& op, double s,
                                                 const Eigen::VectorXd& v,
                                                 int quadrature_nodes);

/// Discrete bilinear form  B_q(v, w) = v^T L^s w h^n + sum_{annulus} q v w h^n.
/// The potential is a full-grid vector read on the annulus only.
double bilinear_form(const FractionalOperator& op, const Eigen::VectorXd& potential,
                     const DomainPartition& part, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& w);

/// sqrt(||v||_{L2,h}^2 + v^T L^s v h^n), the discrete H^s norm built from the
/// scenario's own operator.
double hs_norm(const FractionalOperator& op, const Eigen::VectorXd& v);

/// Weighted L2 norm sqrt(h^n sum v_i^2) over an index subset (or all nodes).
double l2h_norm(const Eigen::VectorXd& v, double cell_measure);
double l2h_norm(const Eigen::VectorXd& v, const std::vector<int>& subset,
                double cell_measure);

}  // namespace fracdtn
