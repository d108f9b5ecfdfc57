#pragma once

#include <Eigen/Core>
#include <vector>

#include "fracdtn/forward.hpp"

namespace fracdtn {

/// Discrete exterior measurement map restricted to the patches: column j
/// holds (L^s u)|_{O2} for the nodal excitation at the j-th control node.
struct DtnMatrix {
  Eigen::MatrixXd values;        // |O2| x |O1|
  std::vector<int> observation;  // row node indices (O2)
  std::vector<int> control;      // column node indices (O1)
  double cell_measure = 1.0;
};

/// Lambda g = (L^s u_g)|_exterior as a vector over the exterior index set.
Eigen::VectorXd apply_dtn(const ForwardSolver& solver,
                          const Eigen::VectorXd& exterior_data);

/// h^n-weighted pairing of two exterior traces, the discrete realization of
/// the duality product on the exterior.
double exterior_pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        double cell_measure);

/// One forward solve per control node; columns are observation-patch traces.
/// Column solves are independent and run on up to `threads` workers.
DtnMatrix assemble_dtn_matrix(const ForwardSolver& solver, int threads = 1);

/// Residual of the exact discrete integral identity
///   sum_E (Lambda_1 g1 - Lambda_2 g1) g2 h^n = sum_N (q1 - q2) u1 u2 h^n
/// for two scenarios sharing grid, operator, partition, and obstacle kind,
/// differing only in the potential. Returns |LHS-RHS| / (|LHS|+|RHS|+eps).
double integral_identity_check(const Scenario& first, const Scenario& second,
                               const Eigen::VectorXd& g1,
                               const Eigen::VectorXd& g2);

}  // namespace fracdtn
