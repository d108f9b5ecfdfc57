#include "fracdtn/local_operator.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fracdtn/errors.hpp"

namespace fracdtn {

LocalOperator::LocalOperator(Eigen::MatrixXd matrix, double spacing)
    : matrix_(std::move(matrix)), spacing_(spacing) {
  if (matrix_.rows() != matrix_.cols())
    throw ValidationError("local operator matrix must be square");
  if (!(spacing_ > 0.0)) throw ValidationError("spacing must be positive");
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw ValidationError("local operator matrix is not symmetric");
  matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
}

namespace {

struct StencilDirection {
  std::array<int, 3> step{0, 0, 0};
  int axis_k = -1, axis_l = -1;  // contributing tensor entries
  int sign = 0;                  // 0: axis direction, +-1: lattice diagonal
};

// Weight of one face: axis directions carry a_kk - sum_{l != k} |a_kl|,
// diagonal directions carry the matching sign part of a_kl.
double face_weight(const SmallMatrix& a, const StencilDirection& d) {
  if (d.sign == 0) {
    double w = a(d.axis_k, d.axis_k);
    for (Eigen::Index l = 0; l < a.rows(); ++l)
      if (l != d.axis_k) w -= std::abs(a(d.axis_k, l));
    return w;
  }
  const double c = a(d.axis_k, d.axis_l);
  return d.sign > 0 ? std::max(c, 0.0) : std::max(-c, 0.0);
}

}  // namespace

LocalOperator assemble_local_operator(const Grid& grid,
                                      const EllipticTensorField& field) {
  field.validate_on(grid);
  const int n = grid.dimension();
  const int N = grid.node_count();
  const double h = grid.spacing();
  const double inv_h2 = 1.0 / (h * h);

  // Signed stencil directions: +-e_k plus both orientations of each lattice
  // diagonal e_k +- e_l. Every interior face is visited from both of its end
  // nodes with a midpoint formula symmetric in the pair, so the assembled
  // matrix is symmetric exactly.
  std::vector<StencilDirection> dirs;
  for (int k = 0; k < n; ++k) {
    for (int sgn : {+1, -1}) {
      StencilDirection d;
      d.step[k] = sgn;
      d.axis_k = k;
      dirs.push_back(d);
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = k + 1; l < n; ++l) {
      for (int sk : {+1, -1}) {
        for (int sl : {+1, -1}) {
          StencilDirection d;
          d.step[k] = sk;
          d.step[l] = sl;
          d.axis_k = k;
          d.axis_l = l;
          d.sign = sk * sl;
          dirs.push_back(d);
        }
      }
    }
  }

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    const auto multi = grid.multi_index(i);
    const Point xi = grid.node(i);
    for (const auto& d : dirs) {
      std::array<int, 3> nb = multi;
      for (int k = 0; k < n; ++k) nb[k] += d.step[k];
      const bool inside = grid.in_lattice(nb);

      Point mid(n);
      if (inside) {
        const Point xj = grid.node(grid.index_of(nb));
        mid = 0.5 * (xi + xj);
      } else {
        for (int k = 0; k < n; ++k) mid[k] = xi[k] + 0.5 * h * d.step[k];
      }

      const double w = face_weight(field.at(mid), d);
      if (d.sign == 0 && w < 0.0)
        throw ValidationError(
            "anisotropy too strong for the lattice stencil: requires "
            "a_kk >= sum_{l != k} |a_kl| at face midpoints (axis " +
            std::to_string(d.axis_k) + ", node " + std::to_string(i) + ")");
      const double c = w * inv_h2;
      L(i, i) += c;
      if (inside) L(i, grid.index_of(nb)) -= c;
    }
  }

  const double asym = (L - L.transpose()).cwiseAbs().maxCoeff();
  if (asym != 0.0)
    throw NumericalError("assembled operator lost exact symmetry");
  return LocalOperator(std::move(L), h);
}

}  // namespace fracdtn
