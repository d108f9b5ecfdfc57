#include "fracdtn/kernel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fracdtn/errors.hpp"

namespace fracdtn {

KernelMatrix::KernelMatrix(Eigen::MatrixXd values, double spacing)
    : values_(std::move(values)), spacing_(spacing) {
  values_.diagonal().setZero();
}

KernelMatrix extract_kernel(const FractionalOperator& op, const Grid& grid) {
  if (op.size() != grid.node_count())
    throw ValidationError("fractional operator does not match the grid");
  const double scale =
      1.0 / std::pow(grid.cell_measure(), 2);  // h^{2n}
  Eigen::MatrixXd k = -scale * op.matrix();
  return KernelMatrix(std::move(k), grid.spacing());
}

namespace {

template <typename Visit>
void for_each_window_pair(const Grid& grid, const KernelPairWindow& w,
                          Visit&& visit) {
  const double h = grid.spacing();
  const double rmin = w.min_separation_factor * h;
  const double rmax = w.max_separation_factor * h;
  const double margin = grid.half_width() - w.boundary_margin_factor * h;
  const int N = grid.node_count();

  std::vector<char> central(static_cast<std::size_t>(N), 0);
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const Point x = grid.node(i);
    nodes.push_back(x);
    central[static_cast<std::size_t>(i)] =
        x.cwiseAbs().maxCoeff() <= margin + 1e-12 ? 1 : 0;
  }
  for (int i = 0; i < N; ++i) {
    if (!central[static_cast<std::size_t>(i)]) continue;
    for (int j = i + 1; j < N; ++j) {
      if (!central[static_cast<std::size_t>(j)]) continue;
      const double r = (nodes[static_cast<std::size_t>(i)] -
                        nodes[static_cast<std::size_t>(j)])
                           .norm();
      if (r > rmin && r <= rmax) visit(i, j, r);
    }
  }
}

}  // namespace

KernelPowerLawFit fit_kernel_power_law(const KernelMatrix& kernel,
                                       const Grid& grid, double s,
                                       const KernelPairWindow& window) {
  const double exponent = grid.dimension() + 2.0 * s;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  KernelPowerLawFit fit;
  fit.min_scaled = std::numeric_limits<double>::infinity();
  fit.max_scaled = 0.0;
  for_each_window_pair(grid, window, [&](int i, int j, double r) {
    const double k = kernel(i, j);
    if (!(k > 0.0))
      throw NumericalError("kernel is nonpositive inside the fit window at pair (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
    const double lx = std::log(r);
    const double ly = std::log(k);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    const double scaled = k * std::pow(r, exponent);
    fit.min_scaled = std::min(fit.min_scaled, scaled);
    fit.max_scaled = std::max(fit.max_scaled, scaled);
    ++fit.pair_count;
  });
  if (fit.pair_count < 8)
    throw ValidationError("kernel fit window selects too few pairs (" +
                          std::to_string(fit.pair_count) + ")");
  const double n = static_cast<double>(fit.pair_count);
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.prefactor = std::exp((sy - fit.slope * sx) / n);
  return fit;
}

Eigen::MatrixXd kernel_loglog_points(const KernelMatrix& kernel, const Grid& grid,
                                     const KernelPairWindow& window) {
  std::vector<std::array<double, 2>> pts;
  for_each_window_pair(grid, window, [&](int i, int j, double r) {
    const double k = kernel(i, j);
    if (k > 0.0) pts.push_back({std::log(r), std::log(k)});
  });
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    out(static_cast<Eigen::Index>(p), 0) = pts[p][0];
    out(static_cast<Eigen::Index>(p), 1) = pts[p][1];
  }
  return out;
}

double fractional_laplacian_constant(int dimension, double s) {
  return std::tgamma(0.5 * dimension + s) * std::pow(4.0, s) /
         (std::abs(std::tgamma(-s)) * std::pow(M_PI, 0.5 * dimension));
}

KernelPositivityScan scan_kernel_positivity(const KernelMatrix& kernel,
                                            const Grid& grid, double s,
                                            const KernelPairWindow& window) {
  const double exponent = grid.dimension() + 2.0 * s;
  KernelPositivityScan scan;
  scan.min_value = std::numeric_limits<double>::infinity();
  scan.min_scaled = std::numeric_limits<double>::infinity();
  for_each_window_pair(grid, window, [&](int i, int j, double r) {
    const double k = kernel(i, j);
    scan.min_value = std::min(scan.min_value, k);
    scan.min_scaled = std::min(scan.min_scaled, k * std::pow(r, exponent));
    ++scan.pair_count;
  });
  if (scan.pair_count == 0)
    throw ValidationError("kernel positivity window selects no pairs");
  return scan;
}

}  // namespace fracdtn
