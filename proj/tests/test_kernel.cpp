#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fracdtn/elliptic_tensor.hpp"
#include "fracdtn/errors.hpp"
#include "fracdtn/kernel.hpp"
#include "fracdtn/local_operator.hpp"
#include "test_helpers.hpp"

using namespace fracdtn;
using namespace fracdtn::testing;

namespace {

FractionalOperator make_op(const Grid& grid, const SmallMatrix& a, double s) {
  return spectral_fractional_power(
      assemble_local_operator(grid, EllipticTensorField::constant(a)), s, grid);
}

}  // namespace

TEST_CASE("kernel constant formula") {
  // Gamma(3/2) * 4^{1/2} / (|Gamma(-1/2)| * pi) evaluated independently:
  // (sqrt(pi)/2) * 2 / (2 sqrt(pi) * pi) = 1 / (2 pi)
  const double by_parts = (std::sqrt(std::numbers::pi) / 2.0) * 2.0 /
                          (2.0 * std::sqrt(std::numbers::pi) * std::numbers::pi);
  CHECK(rel_diff(by_parts, 1.0 / (2.0 * std::numbers::pi)) < 1e-14);
  CHECK(rel_diff(fractional_laplacian_constant(2, 0.5), by_parts) < 1e-12);
}

TEST_CASE("kernel symmetry is exact and the diagonal is zeroed") {
  const Grid grid = build_grid(2, 8.0, 17);  // h = 1
  const auto op = make_op(grid, SmallMatrix::Identity(2, 2), 0.5);
  const KernelMatrix kernel = extract_kernel(op, grid);
  CHECK((kernel.values() - kernel.values().transpose()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(kernel.values().diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("isotropic kernel follows the expected power law at desk scale") {
  // Unit spacing grid; at 33x33 the truncation bias is larger than on the
  // production 65x65 run, so the windows here are checked with slack.
  const Grid grid = build_grid(2, 16.0, 33);
  const double s = 0.5;
  const auto op = make_op(grid, SmallMatrix::Identity(2, 2), s);
  const KernelMatrix kernel = extract_kernel(op, grid);

  const KernelPowerLawFit fit = fit_kernel_power_law(kernel, grid, s);
  CHECK(fit.pair_count > 100);
  CHECK(fit.slope == doctest::Approx(-3.0).epsilon(0.1));
  CHECK(rel_diff(fit.prefactor, fractional_laplacian_constant(2, s)) < 0.25);

  const KernelPositivityScan scan = scan_kernel_positivity(kernel, grid, s);
  CHECK(scan.min_value > 0.0);
  CHECK(scan.min_scaled > 0.0);
}

TEST_CASE("anisotropic kernel stays positive on separated pairs") {
  const Grid grid = build_grid(2, 8.0, 17);
  const double s = 0.4;
  SmallMatrix a(2, 2);
  a << 1.6, 0.35, 0.35, 1.1;
  const auto op = make_op(grid, a, s);
  const KernelMatrix kernel = extract_kernel(op, grid);
  const KernelPositivityScan scan =
      scan_kernel_positivity(kernel, grid, s, {2.0, 6.0, 2.0});
  CHECK(scan.pair_count > 50);
  CHECK(scan.min_scaled > 0.0);  // fitted c1 > 0
}

TEST_CASE("loglog sample table matches the fit window") {
  const Grid grid = build_grid(2, 8.0, 17);
  const auto op = make_op(grid, SmallMatrix::Identity(2, 2), 0.5);
  const KernelMatrix kernel = extract_kernel(op, grid);
  const KernelPairWindow window{2.0, 6.0, 2.0};
  const Eigen::MatrixXd pts = kernel_loglog_points(kernel, grid, window);
  const KernelPowerLawFit fit = fit_kernel_power_law(kernel, grid, 0.5, window);
  CHECK(pts.rows() == fit.pair_count);
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    const double radius = std::exp(pts(r, 0));
    CHECK(radius > 2.0 * grid.spacing());
    CHECK(radius <= 6.0 * grid.spacing() * (1 + 1e-12));
  }
}

TEST_CASE("mismatched grid is rejected") {
  const Grid grid = build_grid(2, 8.0, 17);
  const Grid other = build_grid(2, 8.0, 9);
  const auto op = make_op(grid, SmallMatrix::Identity(2, 2), 0.5);
  CHECK_THROWS_AS(extract_kernel(op, other), ValidationError);
}
