#pragma once

#include <Eigen/Core>

#include "fracdtn/fractional_operator.hpp"
#include "fracdtn/geometry.hpp"

namespace fracdtn {

/// Nonlocal interaction kernel read off the fractional operator:
/// K(x_i, x_j) = -(L^s)_{ij} / h^{2n} for i != j, symmetric by construction.
class KernelMatrix {
 public:
  KernelMatrix(Eigen::MatrixXd values, double spacing);

  double operator()(int i, int j) const { return values_(i, j); }
  const Eigen::MatrixXd& values() const { return values_; }
  double spacing() const { return spacing_; }

 private:
  Eigen::MatrixXd values_;
  double spacing_;
};

KernelMatrix extract_kernel(const FractionalOperator& op, const Grid& grid);

struct KernelPairWindow {
  double min_separation_factor = 4.0;   // pairs with |x - z| > factor * h
  double max_separation_factor = 12.0;  // and |x - z| <= factor * h
  double boundary_margin_factor = 8.0;  // both nodes this many h from the box
};

struct KernelPowerLawFit {
  double slope = 0.0;        // of log K vs log |x-z|
  double prefactor = 0.0;    // exp(intercept)
  double min_scaled = 0.0;   // min K * |x-z|^{n+2s}  (fitted c1)
  double max_scaled = 0.0;
  long pair_count = 0;
};

/// Least-squares line through (log r, log K) over all node pairs in the
/// window. Deterministic full enumeration. Throws NumericalError if a
/// nonpositive kernel value shows up inside the window.
KernelPowerLawFit fit_kernel_power_law(const KernelMatrix& kernel,
                                       const Grid& grid, double s,
                                       const KernelPairWindow& window = {});

struct KernelPositivityScan {
  double min_value = 0.0;
  double min_scaled = 0.0;  // min K * r^{n+2s} over the scanned window
  long pair_count = 0;
};

/// Positivity sweep over separated pairs (default window: r > 4h, both nodes
/// more than 4h from the box boundary, r capped at 16h).
KernelPositivityScan scan_kernel_positivity(
    const KernelMatrix& kernel, const Grid& grid, double s,
    const KernelPairWindow& window = {4.0, 16.0, 4.0});

/// (log r, log K) samples over the window, for plot files.
Eigen::MatrixXd kernel_loglog_points(const KernelMatrix& kernel, const Grid& grid,
                                     const KernelPairWindow& window = {});

/// The constant c_{n,s} of the standard fractional Laplacian kernel,
/// Gamma(n/2 + s) 4^s / (|Gamma(-s)| pi^{n/2}).
double fractional_laplacian_constant(int dimension, double s);

}  // namespace fracdtn
