#include "fracdtn/fractional_operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fracdtn/errors.hpp"

#ifdef FRACDTN_HAVE_LAPACK
extern "C" {
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a,
             const int* lda, double* w, double* work, const int* lwork,
             int* iwork, const int* liwork, int* info);
}
#else
#include <Eigen/Eigenvalues>
#endif

namespace fracdtn {

namespace {
constexpr double kNegativeEigenvalueTol = 1e-10;
}

SpectralFactorization factorize(const LocalOperator& op) {
  const Eigen::Index n = op.size();
  SpectralFactorization fact;
  fact.spacing = op.spacing();
  fact.vectors = op.matrix();
  fact.values.resize(n);

#ifdef FRACDTN_HAVE_LAPACK
  {
    const int ni = static_cast<int>(n);
    int lwork = -1, liwork = -1, info = 0;
    double wopt = 0;
    int iwopt = 0;
    dsyevd_("V", "L", &ni, fact.vectors.data(), &ni, fact.values.data(), &wopt,
            &lwork, &iwopt, &liwork, &info);
    lwork = static_cast<int>(wopt);
    liwork = iwopt;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<int> iwork(static_cast<std::size_t>(liwork));
    dsyevd_("V", "L", &ni, fact.vectors.data(), &ni, fact.values.data(),
            work.data(), &lwork, iwork.data(), &liwork, &info);
    if (info != 0)
      throw NumericalError("dsyevd failed with info = " + std::to_string(info));
  }
#else
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix());
    if (es.info() != Eigen::Success)
      throw NumericalError("eigendecomposition failed");
    fact.vectors = es.eigenvectors();
    fact.values = es.eigenvalues();
  }
#endif

  const double lmax = fact.values.maxCoeff();
  const double floor = -kNegativeEigenvalueTol * std::max(lmax, 1.0);
  if (fact.values.minCoeff() < floor)
    throw NumericalError(
        "operator has a genuinely negative eigenvalue (" +
        std::to_string(fact.values.minCoeff()) + "); assembly is broken");
  fact.values = fact.values.cwiseMax(0.0);
  return fact;
}

Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a) {
  if (a.rows() != a.cols())
    throw ValidationError("symmetric_eigenvalues: matrix must be square");
  Eigen::VectorXd w(a.rows());
#ifdef FRACDTN_HAVE_LAPACK
  const int ni = static_cast<int>(a.rows());
  int lwork = -1, liwork = -1, info = 0;
  double wopt = 0;
  int iwopt = 0;
  dsyevd_("N", "L", &ni, a.data(), &ni, w.data(), &wopt, &lwork, &iwopt,
          &liwork, &info);
  lwork = static_cast<int>(wopt);
  liwork = iwopt;
  std::vector<double> work(static_cast<std::size_t>(lwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  dsyevd_("N", "L", &ni, a.data(), &ni, w.data(), work.data(), &lwork,
          iwork.data(), &liwork, &info);
  if (info != 0)
    throw NumericalError("dsyevd failed with info = " + std::to_string(info));
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  w = es.eigenvalues();
#endif
  return w;
}

FractionalOperator::FractionalOperator(
    std::shared_ptr<const SpectralFactorization> fact, double exponent,
    double cell_measure)
    : fact_(std::move(fact)), exponent_(exponent), cell_measure_(cell_measure) {
  if (!(exponent_ > 0.0 && exponent_ < 1.0))
    throw ValidationError("fractional exponent must lie in (0,1), got " +
                          std::to_string(exponent_));
  if (!(cell_measure_ > 0.0))
    throw ValidationError("cell measure must be positive");
  // L^s = W W^T with W = V diag(lambda^{s/2}); one symmetric product, then an
  // explicit symmetrization so downstream exact-symmetry invariants hold.
  Eigen::MatrixXd w = fact_->vectors;
  const Eigen::VectorXd half = fact_->values.array().pow(0.5 * exponent_);
  w = w * half.asDiagonal();
  power_.noalias() = w * w.transpose();
  power_ = 0.5 * (power_ + power_.transpose()).eval();
}

Eigen::VectorXd FractionalOperator::apply(const Eigen::VectorXd& v) const {
  if (v.size() != size()) throw ValidationError("vector size mismatch");
  // One consistent route everywhere: solver blocks, traces, and bilinear
  // forms all read the same dense matrix, so discrete identities between
  // them cancel to solver backward error rather than factorization error.
  return power_ * v;
}

FractionalOperator spectral_fractional_power(const LocalOperator& op, double s,
                                             double cell_measure) {
  auto fact = std::make_shared<SpectralFactorization>(factorize(op));
  return FractionalOperator(std::move(fact), s, cell_measure);
}

FractionalOperator spectral_fractional_power(const LocalOperator& op, double s,
                                             const Grid& grid) {
  return spectral_fractional_power(op, s, grid.cell_measure());
}

FractionalOperator spectral_fractional_power(
    std::shared_ptr<const SpectralFactorization> fact, double s,
    double cell_measure) {
  return FractionalOperator(std::move(fact), s, cell_measure);
}

Eigen::VectorXd heat_semigroup_apply(const SpectralFactorization& fact, double t,
                                     const Eigen::VectorXd& v) {
  if (t < 0.0) throw ValidationError("heat semigroup requires t >= 0");
  if (v.size() != fact.size()) throw ValidationError("vector size mismatch");
  if (t == 0.0) return v;  // identity, exactly
  const Eigen::VectorXd c = fact.vectors.transpose() * v;
  const Eigen::VectorXd scaled = (-t * fact.values.array()).exp() * c.array();
  return fact.vectors * scaled;
}

Eigen::VectorXd heat_semigroup_apply(const LocalOperator& op, double t,
                                     const Eigen::VectorXd& v) {
  return heat_semigroup_apply(factorize(op), t, v);
}

namespace {

// Spectral accumulation of the heat integral for one trapezoid resolution.
// integrand f(tau) = (e^{-lambda e^tau} - 1) e^{-s tau}, corrected at the
// endpoints by the first Euler-Maclaurin term and at the truncated tails by
//   left:  int_0^{tmin} ~ -lambda tmin^{1-s} / (1-s)
//   right: int_{tmax}^inf ~ -tmax^{-s} / s.
Eigen::ArrayXd quadrature_coefficients(const Eigen::ArrayXd& values, double s,
                                       int nodes, double tau_min, double tau_max) {
  const double dt = (tau_max - tau_min) / (nodes - 1);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(values.size());
  for (int k = 0; k < nodes; ++k) {
    const double tau = tau_min + k * dt;
    const double t = std::exp(tau);
    const double weight = (k == 0 || k == nodes - 1) ? 0.5 * dt : dt;
    acc += weight * ((-t * values).exp() - 1.0) * std::exp(-s * tau);
  }
  const auto fprime = [&](double tau) -> Eigen::ArrayXd {
    const double t = std::exp(tau);
    const Eigen::ArrayXd e = (-t * values).exp();
    return -std::exp(-s * tau) * (values * t * e + s * (e - 1.0));
  };
  acc -= dt * dt / 12.0 * (fprime(tau_max) - fprime(tau_min));
  const double tmin = std::exp(tau_min);
  const double tmax = std::exp(tau_max);
  acc += -values * std::pow(tmin, 1.0 - s) / (1.0 - s);
  // Zero eigenvalues have a vanishing integrand, so no right tail there.
  const double right_tail = -std::pow(tmax, -s) / s;
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (values[k] > 0.0) acc[k] += right_tail;
  // 1/Gamma(-s) = -s / Gamma(1-s) < 0 for s in (0,1)
  return acc * (-s / std::tgamma(1.0 - s));
}

}  // namespace

Eigen::VectorXd heat_quadrature_fractional_apply(const SpectralFactorization& fact,
                                                 double s,
                                                 const Eigen::VectorXd& v,
                                                 int quadrature_nodes) {
  if (!(s > 0.0 && s < 1.0))
    throw ValidationError("fractional exponent must lie in (0,1)");
  if (quadrature_nodes < 16)
    throw ValidationError("heat quadrature needs at least 16 nodes");
  if (v.size() != fact.size()) throw ValidationError("vector size mismatch");

  const double lmax = fact.values.maxCoeff();
  double lmin = lmax;
  for (Eigen::Index i = 0; i < fact.values.size(); ++i)
    if (fact.values[i] > 0.0) lmin = std::min(lmin, fact.values[i]);
  if (!(lmax > 0.0))
    throw NumericalError("heat quadrature needs a nonzero spectrum");
  const double tau_min = std::log(1e-6 / lmax);
  const double tau_max = std::log(40.0 / lmin);

  const Eigen::ArrayXd lam = fact.values.array();
  const Eigen::VectorXd c = fact.vectors.transpose() * v;

  const Eigen::ArrayXd full =
      quadrature_coefficients(lam, s, quadrature_nodes, tau_min, tau_max);
  if (quadrature_nodes >= 64) {
    // Divergence guard: refining the rule must contract the update.
    const Eigen::ArrayXd half =
        quadrature_coefficients(lam, s, quadrature_nodes / 2, tau_min, tau_max);
    const Eigen::ArrayXd quarter =
        quadrature_coefficients(lam, s, quadrature_nodes / 4, tau_min, tau_max);
    const double d_coarse = ((half - quarter) * c.array()).matrix().norm();
    const double d_fine = ((full - half) * c.array()).matrix().norm();
    const double scale = (full * c.array()).matrix().norm();
    if (d_fine > d_coarse && d_fine > 1e-10 * scale)
      throw NumericalError("heat quadrature diverges under refinement");
  }
  return fact.vectors * (full * c.array()).matrix();
}

Eigen::VectorXd heat_quadrature_fractional_apply(const LocalOperator& op, double s,
                                                 const Eigen::VectorXd& v,
                                                 int quadrature_nodes) {
  return heat_quadrature_fractional_apply(factorize(op), s, v, quadrature_nodes);
}

double bilinear_form(const FractionalOperator& op, const Eigen::VectorXd& potential,
                     const DomainPartition& part, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& w) {
  if (v.size() != op.size() || w.size() != op.size() ||
      potential.size() != op.size())
    throw ValidationError("bilinear form: vector size mismatch");
  const double hn = op.cell_measure();
  double value = v.dot(op.matrix() * w) * hn;
  for (int i : part.annulus) value += potential[i] * v[i] * w[i] * hn;
  return value;
}

double hs_norm(const FractionalOperator& op, const Eigen::VectorXd& v) {
  if (v.size() != op.size()) throw ValidationError("hs_norm: vector size mismatch");
  const double hn = op.cell_measure();
  const Eigen::VectorXd c = op.factorization().vectors.transpose() * v;
  const double quad =
      (op.factorization().values.array().pow(op.exponent()) * c.array().square())
          .sum();
  const double l2sq = hn * v.squaredNorm();
  const double scale = std::max(1.0, l2sq);
  if (quad < -1e-10 * scale)
    throw NumericalError("H^s quadratic form came out negative; broken spectrum");
  return std::sqrt(l2sq + hn * std::max(quad, 0.0));
}

double l2h_norm(const Eigen::VectorXd& v, double cell_measure) {
  return std::sqrt(cell_measure) * v.norm();
}

double l2h_norm(const Eigen::VectorXd& v, const std::vector<int>& subset,
                double cell_measure) {
  double sq = 0.0;
  for (int i : subset) sq += v[i] * v[i];
  return std::sqrt(cell_measure * sq);
}

}  // namespace fracdtn
