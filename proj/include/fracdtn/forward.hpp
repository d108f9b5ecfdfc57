#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <memory>
#include <string>
#include <vector>

#include "fracdtn/fractional_operator.hpp"
#include "fracdtn/geometry.hpp"
#include "fracdtn/rng.hpp"

namespace fracdtn {

enum class ObstacleKind { none, soft, hard };

std::string to_string(ObstacleKind kind);
ObstacleKind obstacle_kind_from_string(const std::string& name);

/// One exterior-value problem: (L^s + q) u = f on the annulus, obstacle
/// condition on D (u = 0 for soft, L^s u = 0 for hard), u = g on the exterior.
/// `potential` and `source` are full-grid vectors read on the annulus only.
struct Scenario {
  DomainPartition partition;
  std::shared_ptr<const FractionalOperator> op;
  Eigen::VectorXd potential;
  ObstacleKind kind = ObstacleKind::none;
  Eigen::VectorXd source;
  /// Set for hard-obstacle scenarios that invoke the nonvanishing-potential
  /// hypothesis; validation then rejects any q_i == 0 on the annulus.
  bool require_nonvanishing_potential = false;

  void validate() const;
  /// Smallest |q_i| over the annulus (diagnostic, reported not asserted).
  double min_abs_potential() const;
};

struct EigenvalueConditionReport {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool well_posed = false;
  double ratio() const { return sigma_max > 0.0 ? sigma_min / sigma_max : 0.0; }
};

struct Solution {
  Eigen::VectorXd values;          // u on every grid node
  Eigen::VectorXd exterior_trace;  // u restricted to the exterior index set
  double annulus_residual = 0.0;   // ||(L^s u + q u - f)|_annulus||
  double obstacle_residual = 0.0;  // ||B u|_obstacle||, 0 by construction (soft)
  double exterior_residual = 0.0;  // ||u - g|_exterior||, 0 by construction
};

/// Assembles the square interior system once (rows over the annulus plus,
/// for hard obstacles, pure L^s rows over the obstacle), measures its
/// conditioning, and factorizes for repeated exterior data. The solver is
/// immutable after construction; solve() is safe to call concurrently.
class ForwardSolver {
 public:
  explicit ForwardSolver(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const EigenvalueConditionReport& report() const { return report_; }

  /// Solves for the given exterior data (full-grid vector; only entries on
  /// the exterior index set are read). Throws IllPosedError if the scenario
  /// fails the eigenvalue condition.
  Solution solve(const Eigen::VectorXd& exterior_data) const;

  /// Same, with the scenario source replaced by `source` for this solve.
  Solution solve(const Eigen::VectorXd& exterior_data,
                 const Eigen::VectorXd& source) const;

 private:
  Scenario scenario_;
  std::vector<int> unknowns_;
  EigenvalueConditionReport report_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd coupling_;  // L^s restricted to (unknowns, exterior)
};

/// Threshold for the eigenvalue condition: sigma_min / sigma_max > 1e-8.
inline constexpr double kWellPosedThreshold = 1e-8;

EigenvalueConditionReport check_eigenvalue_condition(const Scenario& scenario);

Solution solve_exterior_problem(const Scenario& scenario,
                                const Eigen::VectorXd& exterior_data);

struct StabilityReport {
  double max_ratio = 0.0;
  int trials = 0;
  int skipped = 0;  // degenerate zero-data draws
};

/// Empirical constant of the stability estimate: over random (f, g) draws,
/// max of ||u||_{H^s} / (||f||_{L2,annulus} + ||g||_{H^s}).
StabilityReport stability_ratio(const Scenario& scenario, int trials, Rng& rng);

}  // namespace fracdtn
