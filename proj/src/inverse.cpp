#include "fracdtn/inverse.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fracdtn/errors.hpp"
#include "fracdtn/parallel.hpp"

namespace fracdtn {

namespace {

Eigen::VectorXd restrict_to(const Eigen::VectorXd& full,
                            const std::vector<int>& subset) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = full[subset[k]];
  return out;
}

// Positions of `nodes` within the sorted exterior index list.
std::vector<Eigen::Index> exterior_positions(const std::vector<int>& exterior,
                                             const std::vector<int>& nodes) {
  std::vector<Eigen::Index> pos;
  pos.reserve(nodes.size());
  for (int node : nodes) {
    const auto it = std::lower_bound(exterior.begin(), exterior.end(), node);
    pos.push_back(static_cast<Eigen::Index>(it - exterior.begin()));
  }
  return pos;
}

}  // namespace

std::vector<DomainPartition> ObstacleCandidateFamily::build_partitions(
    const InversionContext& ctx) const {
  if (candidates.empty())
    throw ValidationError("obstacle candidate family is empty");
  std::vector<DomainPartition> parts;
  parts.reserve(candidates.size());
  for (const auto& cand : candidates)
    parts.push_back(partition(ctx.grid, ctx.omega, cand.shape, ctx.control_patch,
                              ctx.observation_patch));
  for (std::size_t a = 0; a < parts.size(); ++a)
    for (std::size_t b = a + 1; b < parts.size(); ++b)
      if (parts[a].obstacle == parts[b].obstacle &&
          candidates[a].kind == candidates[b].kind)
        throw ValidationError("candidates " + std::to_string(a) + " and " +
                              std::to_string(b) +
                              " have identical obstacle index sets");
  return parts;
}

DistinguishReport distinguish_obstacles(const Scenario& first,
                                        const Scenario& second,
                                        const Eigen::VectorXd& probe,
                                        double threshold) {
  const auto& control = first.partition.control;
  double probe_norm = 0.0;
  for (int i : control) probe_norm += probe[i] * probe[i];
  if (probe_norm == 0.0)
    throw ValidationError("distinguishing obstacles requires a nonzero probe");

  for (const Scenario* scn : {&first, &second}) {
    if (scn->kind == ObstacleKind::hard && scn->min_abs_potential() == 0.0)
      throw ValidationError(
          "hard-obstacle distinguishability requires a nonvanishing potential");
  }

  ForwardSolver solver1(first);
  ForwardSolver solver2(second);
  const Eigen::VectorXd t1 = apply_dtn(solver1, probe);
  const Eigen::VectorXd t2 = apply_dtn(solver2, probe);

  const double hn = first.op->cell_measure();
  const auto pos = exterior_positions(first.partition.exterior,
                                      first.partition.observation);
  double disc = 0.0, ref = 0.0;
  for (const auto p : pos) {
    const double d = t1[p] - t2[p];
    disc += d * d;
    ref += t1[p] * t1[p];
  }

  DistinguishReport report;
  report.discrepancy = std::sqrt(hn * disc);
  report.reference_norm = std::sqrt(hn * ref);
  report.threshold = threshold;
  report.distinct = report.discrepancy > threshold * report.reference_norm;
  report.min_abs_potential_1 = first.min_abs_potential();
  report.min_abs_potential_2 = second.min_abs_potential();
  return report;
}

ObstacleSearchResult recover_obstacle(const InversionContext& ctx,
                                      const Eigen::VectorXd& measurement,
                                      const Eigen::VectorXd& probe,
                                      const ObstacleCandidateFamily& family,
                                      const Eigen::VectorXd& potential,
                                      int threads) {
  const auto parts = family.build_partitions(ctx);
  const int count = static_cast<int>(parts.size());
  if (probe.cwiseAbs().maxCoeff() == 0.0)
    throw ValidationError("obstacle search requires a nonzero probe");

  ObstacleSearchResult result;
  result.misfits.assign(static_cast<std::size_t>(count),
                        std::numeric_limits<double>::infinity());
  result.solvable.assign(static_cast<std::size_t>(count), false);

  const double hn = ctx.op->cell_measure();
  parallel_for(count, threads, [&](int c) {
    const auto& part = parts[static_cast<std::size_t>(c)];
    Scenario scn;
    scn.partition = part;
    scn.op = ctx.op;
    scn.potential = potential;
    scn.kind = family.candidates[static_cast<std::size_t>(c)].kind;
    scn.source = Eigen::VectorXd::Zero(ctx.op->size());
    ForwardSolver solver(std::move(scn));
    if (!solver.report().well_posed) return;  // leave candidate marked unsolvable
    const Eigen::VectorXd trace = apply_dtn(solver, probe);
    const auto pos = exterior_positions(part.exterior, part.observation);
    double acc = 0.0;
    for (std::size_t r = 0; r < pos.size(); ++r) {
      const double d = trace[pos[r]] - measurement[static_cast<Eigen::Index>(r)];
      acc += d * d;
    }
    result.misfits[static_cast<std::size_t>(c)] = std::sqrt(hn * acc);
    result.solvable[static_cast<std::size_t>(c)] = true;
  });

  std::vector<std::size_t> obstacle_size(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c)
    obstacle_size[static_cast<std::size_t>(c)] =
        parts[static_cast<std::size_t>(c)].obstacle.size();

  int best = -1;
  for (int c = 0; c < count; ++c) {
    if (!result.solvable[static_cast<std::size_t>(c)]) continue;
    if (best < 0) {
      best = c;
      continue;
    }
    const double mc = result.misfits[static_cast<std::size_t>(c)];
    const double mb = result.misfits[static_cast<std::size_t>(best)];
    if (mc < mb || (mc == mb && obstacle_size[static_cast<std::size_t>(c)] <
                                    obstacle_size[static_cast<std::size_t>(best)]))
      best = c;
  }
  if (best < 0)
    throw IllPosedError("every candidate in the family fails the eigenvalue condition");

  result.best_index = best;
  double meas_norm = 0.0;
  for (Eigen::Index k = 0; k < measurement.size(); ++k)
    meas_norm += measurement[k] * measurement[k];
  result.exact_match_threshold = 1e-8 * std::max(std::sqrt(hn * meas_norm), 1e-30);
  result.exact_match =
      result.misfits[static_cast<std::size_t>(best)] < result.exact_match_threshold;
  return result;
}

RungeResult runge_approximate(const ForwardSolver& solver,
                              const Eigen::VectorXd& target_on_annulus,
                              const std::vector<double>& alphas,
                              int threads) {
  if (alphas.empty()) throw ValidationError("alpha sweep must be nonempty");
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0))
      throw ValidationError("regularization parameters must be positive");
    if (k > 0 && !(alphas[k] < alphas[k - 1]))
      throw ValidationError("alpha sweep must be strictly decreasing");
  }

  const auto& part = solver.scenario().partition;
  const Eigen::Index na = static_cast<Eigen::Index>(part.annulus.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(part.control.size());
  if (target_on_annulus.size() != na)
    throw ValidationError("target must live on the annulus index set");

  const Eigen::Index n = solver.scenario().op->size();
  Eigen::MatrixXd s_matrix(na, nc);
  parallel_for(static_cast<int>(nc), threads, [&](int j) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g[part.control[static_cast<std::size_t>(j)]] = 1.0;
    const Solution sol = solver.solve(g);
    for (Eigen::Index r = 0; r < na; ++r)
      s_matrix(r, j) = sol.values[part.annulus[r]];
  });

  // One SVD serves the whole sweep; the filtered residual formula is monotone
  // in alpha, which is the property the regularization path must satisfy.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s_matrix,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::VectorXd coeff = svd.matrixU().transpose() * target_on_annulus;
  const double target_sq = target_on_annulus.squaredNorm();
  const double hn = solver.scenario().op->cell_measure();
  const double out_of_range_sq = std::max(target_sq - coeff.squaredNorm(), 0.0);

  RungeResult result;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const double alpha : alphas) {
    double res_sq = out_of_range_sq;
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
      const double filt = alpha / (sigma[k] * sigma[k] + alpha);
      res_sq += filt * filt * coeff[k] * coeff[k];
    }
    const double residual = std::sqrt(hn * res_sq);
    result.path.emplace_back(alpha, residual);
    if (residual < best_residual) {
      best_residual = residual;
      result.alpha = alpha;
    }
  }

  for (std::size_t k = 1; k < result.path.size(); ++k)
    if (result.path[k].second >
        result.path[k - 1].second + 1e-12 * (1.0 + result.path[k - 1].second))
      throw NumericalError("regularization path is not monotone");

  const Eigen::VectorXd filtered =
      (sigma.array() / (sigma.array().square() + result.alpha)) * coeff.array();
  result.control = svd.matrixV() * filtered;
  result.residual = best_residual;
  return result;
}

Eigen::VectorXd stack_dtn_difference(const DtnMatrix& dtn1, const DtnMatrix& dtn2) {
  if (dtn1.control != dtn2.control || dtn1.observation != dtn2.observation)
    throw ValidationError("DtN difference requires matrices on identical patches");
  const Eigen::Index n1 = dtn1.values.cols();
  const Eigen::Index n2 = dtn1.values.rows();
  Eigen::VectorXd d(n1 * n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      d[i * n2 + j] = dtn1.cell_measure * (dtn1.values(j, i) - dtn2.values(j, i));
  return d;
}

PotentialRecovery recover_potential(const Scenario& first, const Scenario& second,
                                    const DtnMatrix& dtn1, const DtnMatrix& dtn2,
                                    const PotentialRecoveryOptions& options,
                                    std::optional<Eigen::VectorXd> data,
                                    int threads) {
  if (dtn1.control != dtn2.control || dtn1.observation != dtn2.observation)
    throw ValidationError("potential recovery requires DtN matrices on identical patches");
  if (first.partition.obstacle != second.partition.obstacle ||
      first.partition.annulus != second.partition.annulus)
    throw ValidationError("potential recovery requires a shared obstacle and annulus");
  if (first.partition.control != dtn1.control ||
      first.partition.observation != dtn1.observation)
    throw ValidationError("DtN patches do not match the scenario partition");

  const auto& annulus = first.partition.annulus;
  const Eigen::Index na = static_cast<Eigen::Index>(annulus.size());
  const Eigen::Index n1 = static_cast<Eigen::Index>(dtn1.control.size());
  const Eigen::Index n2 = static_cast<Eigen::Index>(dtn1.observation.size());
  const double hn = first.op->cell_measure();
  const Eigen::Index n = first.op->size();

  ForwardSolver solver1(first);
  ForwardSolver solver2(second);

  // u1 fields under scenario 1 for control excitations, u2 fields under
  // scenario 2 for observation excitations; this matches the hypothesis of
  // the integral identity exactly, so M delta_q = d holds algebraically.
  Eigen::MatrixXd u1(na, n1), u2(na, n2);
  parallel_for(static_cast<int>(n1), threads, [&](int j) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g[dtn1.control[static_cast<std::size_t>(j)]] = 1.0;
    const Solution sol = solver1.solve(g);
    for (Eigen::Index r = 0; r < na; ++r) u1(r, j) = sol.values[annulus[r]];
  });
  parallel_for(static_cast<int>(n2), threads, [&](int j) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g[dtn1.observation[static_cast<std::size_t>(j)]] = 1.0;
    const Solution sol = solver2.solve(g);
    for (Eigen::Index r = 0; r < na; ++r) u2(r, j) = sol.values[annulus[r]];
  });

  Eigen::MatrixXd m(n1 * n2, na);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      m.row(i * n2 + j) = (u1.col(i).array() * u2.col(j).array()).matrix() * hn;
  Eigen::VectorXd d = stack_dtn_difference(dtn1, dtn2);
  if (data) {
    if (data->size() != d.size())
      throw ValidationError("override data has the wrong number of rows");
    d = *data;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::VectorXd coeff = svd.matrixU().transpose() * d;
  const double d_sq = d.squaredNorm();

  PotentialRecovery rec;
  rec.sigma_max = sigma.size() ? sigma[0] : 0.0;
  rec.sigma_min = sigma.size() ? sigma[sigma.size() - 1] : 0.0;

  Eigen::Index rank = 0;
  if (options.noise_level > 0.0) {
    // Discrepancy principle: smallest rank whose residual drops to the noise.
    double res_sq = d_sq;
    Eigen::Index k = 0;
    const double goal = options.discrepancy_eta * options.noise_level;
    while (k < sigma.size() && sigma[k] > 0.0) {
      res_sq -= coeff[k] * coeff[k];
      ++k;
      if (std::sqrt(std::max(res_sq, 0.0)) <= goal) break;
    }
    rank = k;
  } else {
    while (rank < sigma.size() &&
           sigma[rank] > options.rank_tolerance * rec.sigma_max)
      ++rank;
  }
  if (rank == 0)
    throw ValidationError(
        "product system is rank deficient at the requested truncation; "
        "refusing an unregularized underdetermined solve");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(na);
  double res_sq = d_sq;
  for (Eigen::Index k = 0; k < rank; ++k) {
    x += (coeff[k] / sigma[k]) * svd.matrixV().col(k);
    res_sq -= coeff[k] * coeff[k];
  }
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (!std::isfinite(x[k]))
      throw NumericalError("recovered potential is not finite");

  rec.delta_q = std::move(x);
  rec.data_residual = std::sqrt(std::max(res_sq, 0.0));
  rec.rank_used = static_cast<int>(rank);
  return rec;
}

}  // namespace fracdtn
