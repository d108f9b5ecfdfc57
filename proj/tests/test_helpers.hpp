#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>

#include "fracdtn/geometry.hpp"
#include "fracdtn/rng.hpp"

namespace fracdtn::testing {

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

inline double max_rel_entry_diff(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Random symmetric positive definite matrix with spectrum in [lo, hi].
inline Eigen::MatrixXd random_spd(Eigen::Index n, double lo, double hi, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = rng.uniform(lo, hi);
  lambda[0] = lo;
  lambda[n - 1] = hi;
  return q * lambda.asDiagonal() * q.transpose();
}

inline ShapeSpec ball_spec(std::initializer_list<double> center, double radius) {
  Point c(static_cast<Eigen::Index>(center.size()));
  Eigen::Index k = 0;
  for (double v : center) c[k++] = v;
  ShapeSpec spec;
  spec.add(Shape::ball(c, radius));
  return spec;
}

inline ShapeSpec box_spec(std::initializer_list<double> lo,
                          std::initializer_list<double> hi) {
  Point a(static_cast<Eigen::Index>(lo.size())), b(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index k = 0;
  for (double v : lo) a[k++] = v;
  k = 0;
  for (double v : hi) b[k++] = v;
  ShapeSpec spec;
  spec.add(Shape::box(a, b));
  return spec;
}

}  // namespace fracdtn::testing
