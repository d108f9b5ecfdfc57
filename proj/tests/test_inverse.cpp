#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fracdtn/elliptic_tensor.hpp"
#include "fracdtn/errors.hpp"
#include "fracdtn/inverse.hpp"
#include "fracdtn/local_operator.hpp"
#include "test_helpers.hpp"

using namespace fracdtn;
using namespace fracdtn::testing;

namespace {

struct SceneFixture {
  Grid grid;
  std::shared_ptr<const FractionalOperator> op;
};

const SceneFixture& fixture() {
  static const SceneFixture fx = [] {
    Grid grid = build_grid(2, 1.5, 33);
    const auto field = EllipticTensorField::constant(SmallMatrix::Identity(2, 2));
    auto op = std::make_shared<FractionalOperator>(
        std::make_shared<SpectralFactorization>(
            factorize(assemble_local_operator(grid, field))),
        0.5, grid.cell_measure());
    return SceneFixture{grid, op};
  }();
  return fx;
}

InversionContext make_context() {
  const auto& fx = fixture();
  return InversionContext{fx.grid, fx.op, ball_spec({0, 0}, 0.5),
                          ball_spec({0.85, 0.35}, 0.3),
                          ball_spec({-0.85, -0.25}, 0.3)};
}

Scenario make_scenario(const InversionContext& ctx, const ShapeSpec& obstacle,
                       ObstacleKind kind, double q_value) {
  Scenario scn;
  scn.partition = partition(ctx.grid, ctx.omega, obstacle, ctx.control_patch,
                            ctx.observation_patch);
  scn.op = ctx.op;
  scn.potential = Eigen::VectorXd::Constant(ctx.op->size(), q_value);
  scn.kind = kind;
  scn.source = Eigen::VectorXd::Zero(ctx.op->size());
  return scn;
}

Eigen::VectorXd probe_bump(const InversionContext& ctx,
                           const DomainPartition& part) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ctx.op->size());
  const Point c = (Point(2) << 0.8, 0.3).finished();
  for (int i : part.control)
    g[i] = std::exp(-2.0 * (ctx.grid.node(i) - c).squaredNorm());
  return g;
}

Eigen::VectorXd observation_trace(const InversionContext& ctx,
                                  const Scenario& scn,
                                  const Eigen::VectorXd& probe) {
  ForwardSolver solver(scn);
  const Eigen::VectorXd trace = apply_dtn(solver, probe);
  Eigen::VectorXd out(static_cast<Eigen::Index>(scn.partition.observation.size()));
  std::size_t r = 0;
  for (int node : scn.partition.observation) {
    const auto it = std::lower_bound(scn.partition.exterior.begin(),
                                     scn.partition.exterior.end(), node);
    out[static_cast<Eigen::Index>(r++)] = trace[it - scn.partition.exterior.begin()];
  }
  return out;
}

}  // namespace

TEST_CASE("identical scenarios are indistinguishable, different obstacles are not") {
  const InversionContext ctx = make_context();
  const Scenario small = make_scenario(ctx, ball_spec({0, 0}, 0.10),
                                       ObstacleKind::soft, 1.0);
  const Scenario large = make_scenario(ctx, ball_spec({0, 0}, 0.18),
                                       ObstacleKind::soft, 1.0);
  const Eigen::VectorXd g = probe_bump(ctx, small.partition);

  const DistinguishReport same = distinguish_obstacles(small, small, g);
  CHECK(same.discrepancy == 0.0);
  CHECK_FALSE(same.distinct);

  const DistinguishReport diff = distinguish_obstacles(small, large, g);
  CHECK(diff.distinct);
  CHECK(diff.discrepancy > 1e-6 * diff.reference_norm);
}

TEST_CASE("mixed soft/hard pair with nonvanishing potentials is distinct") {
  const InversionContext ctx = make_context();
  const Scenario soft = make_scenario(ctx, ball_spec({0.12, 0}, 0.13),
                                      ObstacleKind::soft, 0.9);
  const Scenario hard = make_scenario(ctx, ball_spec({-0.1, 0.05}, 0.15),
                                      ObstacleKind::hard, -0.6);
  const Eigen::VectorXd g = probe_bump(ctx, soft.partition);
  const DistinguishReport report = distinguish_obstacles(soft, hard, g);
  CHECK(report.distinct);
  CHECK(report.min_abs_potential_1 > 0.0);
  CHECK(report.min_abs_potential_2 > 0.0);
}

TEST_CASE("distinguishing requires a nonzero probe and nonvanishing hard potentials") {
  const InversionContext ctx = make_context();
  const Scenario a = make_scenario(ctx, ball_spec({0, 0}, 0.1), ObstacleKind::soft, 1.0);
  CHECK_THROWS_AS(
      distinguish_obstacles(a, a, Eigen::VectorXd::Zero(ctx.op->size())),
      ValidationError);

  const Scenario bad_hard =
      make_scenario(ctx, ball_spec({0, 0}, 0.1), ObstacleKind::hard, 0.0);
  CHECK_THROWS_AS(distinguish_obstacles(bad_hard, a, probe_bump(ctx, a.partition)),
                  ValidationError);
}

TEST_CASE("noiseless obstacle search returns every generating candidate") {
  const InversionContext ctx = make_context();
  ObstacleCandidateFamily family;
  for (double x : {-0.2, 0.0, 0.2})
    for (double y : {-0.15, 0.15})
      family.candidates.push_back({ball_spec({x, y}, 0.11), ObstacleKind::soft});

  const Eigen::VectorXd q = Eigen::VectorXd::Constant(ctx.op->size(), 1.0);
  for (std::size_t truth = 0; truth < family.candidates.size(); ++truth) {
    Scenario scn = make_scenario(ctx, family.candidates[truth].shape,
                                 ObstacleKind::soft, 1.0);
    const Eigen::VectorXd probe = probe_bump(ctx, scn.partition);
    const Eigen::VectorXd measurement = observation_trace(ctx, scn, probe);
    const auto result = recover_obstacle(ctx, measurement, probe, family, q, 2);
    CHECK(result.best_index == static_cast<int>(truth));
    CHECK(result.exact_match);
    CHECK(result.misfits[truth] < result.exact_match_threshold);
  }
}

TEST_CASE("measurement from outside the family is flagged") {
  const InversionContext ctx = make_context();
  ObstacleCandidateFamily family;
  family.candidates.push_back({ball_spec({0.15, 0}, 0.11), ObstacleKind::soft});
  family.candidates.push_back({ball_spec({-0.15, 0}, 0.11), ObstacleKind::soft});

  const Scenario outside =
      make_scenario(ctx, ball_spec({0, 0.18}, 0.14), ObstacleKind::soft, 1.0);
  const Eigen::VectorXd probe = probe_bump(ctx, outside.partition);
  const Eigen::VectorXd measurement = observation_trace(ctx, outside, probe);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(ctx.op->size(), 1.0);
  const auto result = recover_obstacle(ctx, measurement, probe, family, q);
  CHECK(result.best_index >= 0);
  CHECK_FALSE(result.exact_match);
}

TEST_CASE("duplicate candidates are rejected") {
  const InversionContext ctx = make_context();
  ObstacleCandidateFamily family;
  family.candidates.push_back({ball_spec({0, 0}, 0.11), ObstacleKind::soft});
  // different radius but same node set on this grid resolution
  family.candidates.push_back({ball_spec({0, 0}, 0.115), ObstacleKind::soft});
  CHECK_THROWS_AS(family.build_partitions(ctx), ValidationError);
}

TEST_CASE("runge control reaches targets in the range of the solution operator") {
  const InversionContext ctx = make_context();
  const Scenario scn = make_scenario(ctx, ball_spec({0, 0}, 0.15),
                                     ObstacleKind::soft, 1.0);
  ForwardSolver solver(scn);

  const Eigen::VectorXd gstar = probe_bump(ctx, scn.partition);
  const Solution sol = solver.solve(gstar);
  Eigen::VectorXd target(static_cast<Eigen::Index>(scn.partition.annulus.size()));
  for (std::size_t k = 0; k < scn.partition.annulus.size(); ++k)
    target[static_cast<Eigen::Index>(k)] = sol.values[scn.partition.annulus[k]];

  std::vector<double> alphas;
  for (int k = 0; k <= 16; k += 2) alphas.push_back(std::pow(10.0, -k));
  const RungeResult result = runge_approximate(solver, target, alphas);
  CHECK(result.residual < 1e-8);
  for (std::size_t k = 1; k < result.path.size(); ++k)
    CHECK(result.path[k].second <=
          result.path[k - 1].second + 1e-12 * (1 + result.path[k - 1].second));
}

TEST_CASE("runge residuals strictly decrease for a target outside the range") {
  const InversionContext ctx = make_context();
  const Scenario scn = make_scenario(ctx, ball_spec({0, 0}, 0.15),
                                     ObstacleKind::soft, 1.0);
  ForwardSolver solver(scn);
  const Eigen::VectorXd target = Eigen::VectorXd::Ones(
      static_cast<Eigen::Index>(scn.partition.annulus.size()));
  std::vector<double> alphas;
  for (int k = 0; k <= 12; k += 2) alphas.push_back(std::pow(10.0, -k));
  const RungeResult result = runge_approximate(solver, target, alphas);
  for (std::size_t k = 1; k < result.path.size(); ++k)
    CHECK(result.path[k].second < result.path[k - 1].second);
  CHECK(result.alpha == alphas.back());
}

TEST_CASE("runge validates the alpha sweep") {
  const InversionContext ctx = make_context();
  const Scenario scn = make_scenario(ctx, ShapeSpec::empty(), ObstacleKind::none, 1.0);
  ForwardSolver solver(scn);
  const Eigen::VectorXd target = Eigen::VectorXd::Ones(
      static_cast<Eigen::Index>(scn.partition.annulus.size()));
  CHECK_THROWS_AS(runge_approximate(solver, target, {}), ValidationError);
  CHECK_THROWS_AS(runge_approximate(solver, target, {1e-2, 1e-1}), ValidationError);
  CHECK_THROWS_AS(runge_approximate(solver, target, {1e-2, -1.0}), ValidationError);
}

TEST_CASE("potential recovery: zero difference and bump difference") {
  const InversionContext ctx = make_context();
  Scenario scn1 = make_scenario(ctx, ball_spec({0, 0}, 0.15), ObstacleKind::soft, 1.0);
  Scenario scn2 = scn1;

  ForwardSolver solver1(scn1);
  const DtnMatrix dtn_same = assemble_dtn_matrix(solver1, 2);
  const auto zero = recover_potential(scn1, scn2, dtn_same, dtn_same);
  CHECK(zero.delta_q.cwiseAbs().maxCoeff() == 0.0);

  // 3x3 pixel bump of height 1 inside the annulus
  const auto& fx = fixture();
  Eigen::VectorXd q1 = scn1.potential;
  const double h = fx.grid.spacing();
  for (int i : scn1.partition.annulus) {
    const Point x = fx.grid.node(i);
    if (std::abs(x[0] - 0.25) < 1.6 * h && std::abs(x[1] - 0.1) < 1.6 * h)
      q1[i] += 1.0;
  }
  scn1.potential = q1;
  ForwardSolver bumped(scn1);
  const DtnMatrix dtn1 = assemble_dtn_matrix(bumped, 2);
  const DtnMatrix dtn2 = dtn_same;

  const auto rec = recover_potential(scn1, scn2, dtn1, dtn2, {}, {}, 2);
  Eigen::VectorXd truth(static_cast<Eigen::Index>(scn1.partition.annulus.size()));
  for (std::size_t k = 0; k < scn1.partition.annulus.size(); ++k)
    truth[static_cast<Eigen::Index>(k)] =
        q1[scn1.partition.annulus[k]] - scn2.potential[scn1.partition.annulus[k]];
  CHECK((rec.delta_q - truth).norm() / truth.norm() < 1e-6);
  CHECK(rec.sigma_max > rec.sigma_min);
  CHECK(rec.rank_used > 0);
}

TEST_CASE("random potential difference is recovered from full patch bases") {
  // half-ring patches give |O1| |O2| >> |I_N| and a full-rank product basis
  const auto& fx = fixture();
  auto box = [](double x0, double y0, double x1, double y1) {
    return Shape::box((Point(2) << x0, y0).finished(),
                      (Point(2) << x1, y1).finished());
  };
  ShapeSpec ring_r, ring_l;
  ring_r.add(box(0.55, -0.95, 0.95, 0.95));
  ring_r.add(box(-0.2, 0.55, 0.95, 0.95));
  ring_r.add(box(-0.2, -0.95, 0.95, -0.55));
  ring_l.add(box(-0.95, -0.95, -0.55, 0.95));
  ring_l.add(box(-0.95, 0.55, -0.2, 0.95));
  ring_l.add(box(-0.95, -0.95, -0.2, -0.55));

  Scenario scn2;
  scn2.partition = partition(fx.grid, ball_spec({0, 0}, 0.5),
                             ball_spec({0, 0}, 0.15), ring_r, ring_l);
  scn2.op = fx.op;
  scn2.potential = Eigen::VectorXd::Constant(fx.op->size(), 1.0);
  scn2.kind = ObstacleKind::soft;
  scn2.source = Eigen::VectorXd::Zero(fx.op->size());

  Scenario scn1 = scn2;
  Rng rng(23);
  for (int i : scn1.partition.annulus) scn1.potential[i] += 0.3 * rng.normal();

  ForwardSolver solver1(scn1);
  ForwardSolver solver2(scn2);
  const DtnMatrix dtn1 = assemble_dtn_matrix(solver1, 2);
  const DtnMatrix dtn2 = assemble_dtn_matrix(solver2, 2);
  const auto rec = recover_potential(scn1, scn2, dtn1, dtn2, {}, {}, 2);

  Eigen::VectorXd truth(static_cast<Eigen::Index>(scn1.partition.annulus.size()));
  for (std::size_t k = 0; k < scn1.partition.annulus.size(); ++k)
    truth[static_cast<Eigen::Index>(k)] =
        scn1.potential[scn1.partition.annulus[k]] -
        scn2.potential[scn1.partition.annulus[k]];
  CHECK((rec.delta_q - truth).norm() / truth.norm() < 1e-6);
}

TEST_CASE("potential recovery rejects mismatched patches") {
  const InversionContext ctx = make_context();
  const Scenario scn = make_scenario(ctx, ball_spec({0, 0}, 0.15),
                                     ObstacleKind::soft, 1.0);
  ForwardSolver solver(scn);
  const DtnMatrix dtn = assemble_dtn_matrix(solver, 1);
  DtnMatrix other = dtn;
  other.control.pop_back();
  CHECK_THROWS_AS(recover_potential(scn, scn, dtn, other), ValidationError);
}
