#include "fracdtn/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracdtn/errors.hpp"

namespace fracdtn {

std::string to_string(ObstacleKind kind) {
  switch (kind) {
    case ObstacleKind::none: return "none";
    case ObstacleKind::soft: return "soft";
    case ObstacleKind::hard: return "hard";
  }
  return "unknown";
}

ObstacleKind obstacle_kind_from_string(const std::string& name) {
  if (name == "none") return ObstacleKind::none;
  if (name == "soft") return ObstacleKind::soft;
  if (name == "hard") return ObstacleKind::hard;
  throw ValidationError("unknown obstacle kind '" + name + "'");
}

void Scenario::validate() const {
  if (!op) throw ValidationError("scenario has no fractional operator");
  const Eigen::Index n = op->size();
  if (potential.size() != n || source.size() != n)
    throw ValidationError("potential/source must be full-grid vectors");
  if (kind != ObstacleKind::none && partition.obstacle.empty())
    throw ValidationError("obstacle kind set but the obstacle index set is empty");
  if (kind == ObstacleKind::none && !partition.obstacle.empty())
    throw ValidationError("obstacle nodes present but kind is 'none'");
  for (int i : partition.annulus)
    if (!std::isfinite(potential[i]))
      throw ValidationError("potential is not finite on the annulus");
  if (require_nonvanishing_potential && kind == ObstacleKind::hard &&
      min_abs_potential() == 0.0)
    throw ValidationError(
        "hard-obstacle scenario requires a nonvanishing potential on Omega");
}

double Scenario::min_abs_potential() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i : partition.annulus) m = std::min(m, std::abs(potential[i]));
  return m;
}

ForwardSolver::ForwardSolver(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  const auto& part = scenario_.partition;

  unknowns_ = part.annulus;
  if (scenario_.kind == ObstacleKind::hard)
    unknowns_.insert(unknowns_.end(), part.obstacle.begin(), part.obstacle.end());

  const Eigen::MatrixXd& ls = scenario_.op->matrix();
  const Eigen::Index nu = static_cast<Eigen::Index>(unknowns_.size());
  Eigen::MatrixXd system(nu, nu);
  for (Eigen::Index r = 0; r < nu; ++r)
    for (Eigen::Index c = 0; c < nu; ++c)
      system(r, c) = ls(unknowns_[r], unknowns_[c]);
  const Eigen::Index na = static_cast<Eigen::Index>(part.annulus.size());
  for (Eigen::Index r = 0; r < na; ++r)
    system(r, r) += scenario_.potential[part.annulus[r]];

  // The interior system is symmetric (L^s blocks plus a diagonal), so its
  // singular values are the absolute eigenvalues.
  const Eigen::VectorXd eig = symmetric_eigenvalues(system);
  report_.sigma_min = eig.cwiseAbs().minCoeff();
  report_.sigma_max = eig.cwiseAbs().maxCoeff();
  report_.well_posed =
      report_.sigma_max > 0.0 &&
      report_.sigma_min > kWellPosedThreshold * report_.sigma_max;

  const Eigen::Index ne = static_cast<Eigen::Index>(part.exterior.size());
  coupling_.resize(nu, ne);
  for (Eigen::Index r = 0; r < nu; ++r)
    for (Eigen::Index c = 0; c < ne; ++c)
      coupling_(r, c) = ls(unknowns_[r], part.exterior[c]);

  if (report_.well_posed) lu_.compute(system);
}

Solution ForwardSolver::solve(const Eigen::VectorXd& exterior_data) const {
  return solve(exterior_data, scenario_.source);
}

Solution ForwardSolver::solve(const Eigen::VectorXd& exterior_data,
                              const Eigen::VectorXd& source) const {
  if (!report_.well_posed)
    throw IllPosedError("scenario fails the eigenvalue condition (sigma_min/max = " +
                        std::to_string(report_.ratio()) + "); refusing to solve");
  if (exterior_data.size() != scenario_.op->size() ||
      source.size() != scenario_.op->size())
    throw ValidationError("exterior data and source must be full-grid vectors");

  const auto& part = scenario_.partition;
  const Eigen::Index ne = static_cast<Eigen::Index>(part.exterior.size());

  // Only exterior entries of the data are read; values inside Omega are
  // ignored, which realizes the exterior-data locality of the problem.
  Eigen::VectorXd g(ne);
  for (Eigen::Index c = 0; c < ne; ++c) g[c] = exterior_data[part.exterior[c]];

  Eigen::VectorXd rhs = -(coupling_ * g);
  const Eigen::Index na = static_cast<Eigen::Index>(part.annulus.size());
  for (Eigen::Index r = 0; r < na; ++r) rhs[r] += source[part.annulus[r]];

  const Eigen::VectorXd x = lu_.solve(rhs);

  Solution sol;
  sol.values = Eigen::VectorXd::Zero(scenario_.op->size());
  for (Eigen::Index c = 0; c < ne; ++c) sol.values[part.exterior[c]] = g[c];
  for (std::size_t r = 0; r < unknowns_.size(); ++r)
    sol.values[unknowns_[r]] = x[static_cast<Eigen::Index>(r)];
  sol.exterior_trace = g;

  const Eigen::VectorXd image = scenario_.op->apply(sol.values);
  double acc = 0.0;
  for (int i : part.annulus) {
    const double r = image[i] + scenario_.potential[i] * sol.values[i] - source[i];
    acc += r * r;
  }
  sol.annulus_residual = std::sqrt(acc);
  acc = 0.0;
  if (scenario_.kind == ObstacleKind::soft) {
    for (int i : part.obstacle) acc += sol.values[i] * sol.values[i];
  } else if (scenario_.kind == ObstacleKind::hard) {
    for (int i : part.obstacle) acc += image[i] * image[i];
  }
  sol.obstacle_residual = std::sqrt(acc);
  sol.exterior_residual = 0.0;  // imposed, not solved
  return sol;
}

EigenvalueConditionReport check_eigenvalue_condition(const Scenario& scenario) {
  return ForwardSolver(scenario).report();
}

Solution solve_exterior_problem(const Scenario& scenario,
                                const Eigen::VectorXd& exterior_data) {
  return ForwardSolver(scenario).solve(exterior_data);
}

StabilityReport stability_ratio(const Scenario& scenario, int trials, Rng& rng) {
  ForwardSolver solver(scenario);
  const auto& part = scenario.partition;
  const Eigen::Index n = scenario.op->size();
  const double hn = scenario.op->cell_measure();

  StabilityReport report;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    for (int i : part.annulus) f[i] = rng.normal();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (int i : part.exterior) g[i] = rng.normal();

    const double denom = l2h_norm(f, part.annulus, hn) + hs_norm(*scenario.op, g);
    if (denom == 0.0) {
      ++report.skipped;
      continue;
    }
    const Solution sol = solver.solve(g, f);
    const double ratio = hs_norm(*scenario.op, sol.values) / denom;
    report.max_ratio = std::max(report.max_ratio, ratio);
    ++report.trials;
  }
  return report;
}

}  // namespace fracdtn
