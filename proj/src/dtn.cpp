#include "fracdtn/dtn.hpp"

#include <algorithm>
#include <cmath>

#include "fracdtn/errors.hpp"
#include "fracdtn/parallel.hpp"

namespace fracdtn {

Eigen::VectorXd apply_dtn(const ForwardSolver& solver,
                          const Eigen::VectorXd& exterior_data) {
  const Solution sol = solver.solve(exterior_data);
  const Eigen::VectorXd image = solver.scenario().op->apply(sol.values);
  const auto& ext = solver.scenario().partition.exterior;
  Eigen::VectorXd trace(static_cast<Eigen::Index>(ext.size()));
  for (std::size_t k = 0; k < ext.size(); ++k)
    trace[static_cast<Eigen::Index>(k)] = image[ext[k]];
  return trace;
}

double exterior_pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        double cell_measure) {
  if (a.size() != b.size())
    throw ValidationError("exterior pairing: size mismatch");
  return cell_measure * a.dot(b);
}

DtnMatrix assemble_dtn_matrix(const ForwardSolver& solver, int threads) {
  const auto& part = solver.scenario().partition;
  const Eigen::Index n = solver.scenario().op->size();

  DtnMatrix dtn;
  dtn.observation = part.observation;
  dtn.control = part.control;
  dtn.cell_measure = solver.scenario().op->cell_measure();
  dtn.values.resize(static_cast<Eigen::Index>(part.observation.size()),
                    static_cast<Eigen::Index>(part.control.size()));

  // Map exterior-vector positions of the observation nodes once.
  std::vector<Eigen::Index> obs_pos;
  obs_pos.reserve(part.observation.size());
  for (int node : part.observation) {
    const auto it =
        std::lower_bound(part.exterior.begin(), part.exterior.end(), node);
    obs_pos.push_back(static_cast<Eigen::Index>(it - part.exterior.begin()));
  }

  parallel_for(static_cast<int>(part.control.size()), threads, [&](int j) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g[part.control[static_cast<std::size_t>(j)]] = 1.0;
    const Eigen::VectorXd trace = apply_dtn(solver, g);
    for (std::size_t r = 0; r < obs_pos.size(); ++r)
      dtn.values(static_cast<Eigen::Index>(r), j) = trace[obs_pos[r]];
  });
  return dtn;
}

double integral_identity_check(const Scenario& first, const Scenario& second,
                               const Eigen::VectorXd& g1,
                               const Eigen::VectorXd& g2) {
  if (first.partition.obstacle != second.partition.obstacle ||
      first.partition.annulus != second.partition.annulus ||
      first.partition.exterior != second.partition.exterior)
    throw ValidationError(
        "integral identity requires scenarios sharing the same partition");
  if (first.kind != second.kind)
    throw ValidationError(
        "integral identity requires scenarios with the same obstacle condition");
  if (first.op != second.op && first.op->matrix() != second.op->matrix())
    throw ValidationError("integral identity requires a shared operator");

  const double hn = first.op->cell_measure();
  ForwardSolver solver1(first);
  ForwardSolver solver2(second);

  const Eigen::VectorXd lambda1_g1 = apply_dtn(solver1, g1);
  const Eigen::VectorXd lambda2_g1 = apply_dtn(solver2, g1);

  const auto& ext = first.partition.exterior;
  Eigen::VectorXd g2_ext(static_cast<Eigen::Index>(ext.size()));
  for (std::size_t k = 0; k < ext.size(); ++k)
    g2_ext[static_cast<Eigen::Index>(k)] = g2[ext[k]];
  const double lhs = exterior_pairing(lambda1_g1 - lambda2_g1, g2_ext, hn);

  const Solution u1 = solver1.solve(g1);
  const Solution u2 = solver2.solve(g2);
  double rhs = 0.0;
  for (int i : first.partition.annulus)
    rhs += (first.potential[i] - second.potential[i]) * u1.values[i] *
           u2.values[i] * hn;

  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-30);
}

}  // namespace fracdtn
