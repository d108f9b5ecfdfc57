#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <vector>

#include "fracdtn/dtn.hpp"
#include "fracdtn/forward.hpp"

namespace fracdtn {

/// Shared context for candidate sweeps: the operator and the fixed geometry
/// are reused across candidate obstacles (only the partition changes).
struct InversionContext {
  Grid grid;
  std::shared_ptr<const FractionalOperator> op;
  ShapeSpec omega;
  ShapeSpec control_patch;      // O1
  ShapeSpec observation_patch;  // O2
};

struct ObstacleCandidate {
  ShapeSpec shape;
  ObstacleKind kind = ObstacleKind::soft;
};

/// Finite search family. Validation builds every candidate partition and
/// rejects duplicates (identical obstacle index sets).
struct ObstacleCandidateFamily {
  std::vector<ObstacleCandidate> candidates;

  /// Partitions per candidate, validated. Throws on invalid or duplicate
  /// candidates.
  std::vector<DomainPartition> build_partitions(const InversionContext& ctx) const;
};

struct DistinguishReport {
  double discrepancy = 0.0;     // ||(Lambda_1 g - Lambda_2 g)|_{O2}||_{L2,h}
  double reference_norm = 0.0;  // ||Lambda_1 g|_{O2}||_{L2,h}
  double threshold = 0.0;
  bool distinct = false;
  double min_abs_potential_1 = 0.0;  // diagnostics for the q != 0 hypothesis
  double min_abs_potential_2 = 0.0;
};

inline constexpr double kDistinctnessThreshold = 1e-6;

/// Single-measurement obstacle discrimination: compares the two observation
/// traces for one probe datum g (nonzero, supported on the control patch).
DistinguishReport distinguish_obstacles(const Scenario& first,
                                        const Scenario& second,
                                        const Eigen::VectorXd& probe,
                                        double threshold = kDistinctnessThreshold);

struct ObstacleSearchResult {
  int best_index = -1;
  std::vector<double> misfits;     // per candidate, L2,h on O2
  std::vector<bool> solvable;      // candidates failing the eigenvalue condition
  bool exact_match = false;        // best misfit below the noiseless tolerance
  double exact_match_threshold = 0.0;
};

/// Exhaustive search over the candidate family: per candidate one forward
/// solve with the probe, misfit against the measured observation trace.
/// Ties break to the smallest obstacle index set, then the lowest index.
ObstacleSearchResult recover_obstacle(const InversionContext& ctx,
                                      const Eigen::VectorXd& measurement,
                                      const Eigen::VectorXd& probe,
                                      const ObstacleCandidateFamily& family,
                                      const Eigen::VectorXd& potential,
                                      int threads = 1);

struct RungeResult {
  Eigen::VectorXd control;  // data on the control nodes (ordered as O1)
  double residual = 0.0;    // ||u_g|_annulus - phi||_{L2,h} at best alpha
  double alpha = 0.0;
  std::vector<std::pair<double, double>> path;  // (alpha, residual), alpha desc
};

/// Regularized exterior control: minimizes ||S g - phi||^2_{L2,h} +
/// alpha ||g||^2_{L2,h} over data on the control patch, where S maps control
/// data to the annulus restriction of the solution. The sweep is evaluated
/// through one SVD of S; residuals are nonincreasing as alpha decreases.
RungeResult runge_approximate(const ForwardSolver& solver,
                              const Eigen::VectorXd& target_on_annulus,
                              const std::vector<double>& alphas,
                              int threads = 1);

struct PotentialRecoveryOptions {
  /// Relative singular value cutoff in the noiseless case.
  double rank_tolerance = 1e-12;
  /// Euclidean norm of the data noise; 0 means exact data.
  double noise_level = 0.0;
  /// Discrepancy principle factor: smallest rank with residual <= eta * noise.
  double discrepancy_eta = 1.05;
};

struct PotentialRecovery {
  Eigen::VectorXd delta_q;     // recovered q1 - q2 on the annulus (ordered as I_N)
  double data_residual = 0.0;  // ||M delta_q - d||_2
  int rank_used = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

/// Multi-measurement potential recovery through the integral identity: rows
/// pair control excitations (solved under scenario 1) with observation
/// excitations (solved under scenario 2); the right-hand side pairs the DtN
/// difference with the excitations. Solved by truncated SVD.
/// `data` overrides the clean right-hand side (e.g. a noisy measurement);
/// pass std::nullopt to use the assembled DtN difference.
PotentialRecovery recover_potential(const Scenario& first, const Scenario& second,
                                    const DtnMatrix& dtn1, const DtnMatrix& dtn2,
                                    const PotentialRecoveryOptions& options = {},
                                    std::optional<Eigen::VectorXd> data = {},
                                    int threads = 1);

/// The clean right-hand side of the recovery system in canonical row order
/// (control index major): d[i * |O2| + j] = h^n (dtn1 - dtn2)(j, i).
Eigen::VectorXd stack_dtn_difference(const DtnMatrix& dtn1, const DtnMatrix& dtn2);

}  // namespace fracdtn
