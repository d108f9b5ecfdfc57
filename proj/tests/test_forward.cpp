#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "fracdtn/elliptic_tensor.hpp"
#include "fracdtn/errors.hpp"
#include "fracdtn/forward.hpp"
#include "fracdtn/local_operator.hpp"
#include "test_helpers.hpp"

using namespace fracdtn;
using namespace fracdtn::testing;

namespace {

struct SceneFixture {
  Grid grid;
  std::shared_ptr<const FractionalOperator> op;
};

// One shared 33x33 operator for the whole binary; factorization is the
// expensive part and every test only varies partitions and potentials.
const SceneFixture& fixture() {
  static const SceneFixture fx = [] {
    Grid grid = build_grid(2, 1.5, 33);
    const auto field =
        EllipticTensorField::constant(SmallMatrix::Identity(2, 2));
    const LocalOperator local = assemble_local_operator(grid, field);
    auto op = std::make_shared<FractionalOperator>(
        std::make_shared<SpectralFactorization>(factorize(local)), 0.5,
        grid.cell_measure());
    return SceneFixture{grid, op};
  }();
  return fx;
}

Scenario make_scenario(ObstacleKind kind, double q_value,
                       double obstacle_radius = 0.15) {
  const auto& fx = fixture();
  Scenario scn;
  scn.partition = partition(
      fx.grid, ball_spec({0, 0}, 0.5),
      kind == ObstacleKind::none ? ShapeSpec::empty()
                                 : ball_spec({0, 0}, obstacle_radius),
      ball_spec({0.85, 0.35}, 0.3), ball_spec({-0.85, -0.25}, 0.3));
  scn.op = fx.op;
  scn.potential = Eigen::VectorXd::Constant(fx.op->size(), q_value);
  scn.kind = kind;
  scn.source = Eigen::VectorXd::Zero(fx.op->size());
  return scn;
}

Eigen::VectorXd probe_bump(const DomainPartition& part) {
  const auto& fx = fixture();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(fx.op->size());
  const Point c = (Point(2) << 0.85, 0.35).finished();
  for (int i : part.control)
    g[i] = std::exp(-3.0 * (fx.grid.node(i) - c).squaredNorm());
  return g;
}

}  // namespace

TEST_CASE("well-posedness of the baseline scenarios") {
  CHECK(check_eigenvalue_condition(make_scenario(ObstacleKind::soft, 0.0)).well_posed);
  CHECK(check_eigenvalue_condition(make_scenario(ObstacleKind::none, 1.0)).well_posed);
  CHECK(check_eigenvalue_condition(make_scenario(ObstacleKind::hard, 0.7)).well_posed);
}

TEST_CASE("resonant potential collapses sigma_min and the solver refuses") {
  const Scenario base = make_scenario(ObstacleKind::soft, 0.0);
  const auto baseline = check_eigenvalue_condition(base);

  // Tune q to an eigenvalue of the interior block: the shifted system is
  // exactly singular.
  const auto& ls = base.op->matrix();
  const auto& annulus = base.partition.annulus;
  const Eigen::Index na = static_cast<Eigen::Index>(annulus.size());
  Eigen::MatrixXd block(na, na);
  for (Eigen::Index r = 0; r < na; ++r)
    for (Eigen::Index c = 0; c < na; ++c) block(r, c) = ls(annulus[r], annulus[c]);
  const Eigen::VectorXd eig = symmetric_eigenvalues(block);
  const double lambda_star = eig[eig.size() / 2];

  Scenario resonant = base;
  resonant.potential = Eigen::VectorXd::Constant(base.op->size(), -lambda_star);
  const auto report = check_eigenvalue_condition(resonant);
  CHECK_FALSE(report.well_posed);
  CHECK(report.ratio() < 1e-6 * baseline.ratio());

  ForwardSolver solver(resonant);
  CHECK_THROWS_AS(solver.solve(probe_bump(base.partition)), IllPosedError);
}

TEST_CASE("zero data gives the zero solution") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 1.0);
  const Solution sol =
      solve_exterior_problem(scn, Eigen::VectorXd::Zero(scn.op->size()));
  CHECK(sol.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("no obstacle, zero potential matches the dense oracle") {
  const Scenario scn = make_scenario(ObstacleKind::none, 0.0);
  const Eigen::VectorXd g = probe_bump(scn.partition);
  const Solution sol = solve_exterior_problem(scn, g);

  // independent oracle: u_Omega = -(L^s_OO)^{-1} L^s_OE g
  const auto& ls = scn.op->matrix();
  const auto& interior = scn.partition.interior;
  const auto& exterior = scn.partition.exterior;
  const Eigen::Index ni = static_cast<Eigen::Index>(interior.size());
  const Eigen::Index ne = static_cast<Eigen::Index>(exterior.size());
  Eigen::MatrixXd loo(ni, ni);
  Eigen::MatrixXd loe(ni, ne);
  Eigen::VectorXd ge(ne);
  for (Eigen::Index r = 0; r < ni; ++r) {
    for (Eigen::Index c = 0; c < ni; ++c) loo(r, c) = ls(interior[r], interior[c]);
    for (Eigen::Index c = 0; c < ne; ++c) loe(r, c) = ls(interior[r], exterior[c]);
  }
  for (Eigen::Index c = 0; c < ne; ++c) ge[c] = g[exterior[c]];
  const Eigen::VectorXd oracle = loo.fullPivLu().solve(-loe * ge);

  for (Eigen::Index r = 0; r < ni; ++r)
    CHECK(rel_diff(sol.values[interior[r]], oracle[r]) < 1e-10);
}

TEST_CASE("obstacle conditions hold as stated") {
  const Eigen::VectorXd g_soft = probe_bump(make_scenario(ObstacleKind::soft, 1.0).partition);

  const Scenario soft = make_scenario(ObstacleKind::soft, 1.0);
  const Solution sol_soft = solve_exterior_problem(soft, g_soft);
  for (int i : soft.partition.obstacle) CHECK(sol_soft.values[i] == 0.0);

  const Scenario hard = make_scenario(ObstacleKind::hard, 0.8);
  const Solution sol_hard = solve_exterior_problem(hard, g_soft);
  const Eigen::VectorXd image = hard.op->apply(sol_hard.values);
  double obstacle_sq = 0.0;
  for (int i : hard.partition.obstacle) obstacle_sq += image[i] * image[i];
  CHECK(std::sqrt(obstacle_sq) <= 1e-8 * image.norm());
}

TEST_CASE("solve is linear in the exterior data") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 0.6);
  ForwardSolver solver(scn);
  Rng rng(3);
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(scn.op->size());
  Eigen::VectorXd g2 = Eigen::VectorXd::Zero(scn.op->size());
  for (int i : scn.partition.exterior) {
    g1[i] = rng.normal();
    g2[i] = rng.normal();
  }
  const double a = 1.7, b = -0.4;
  const Eigen::VectorXd combined = solver.solve(a * g1 + b * g2).values;
  const Eigen::VectorXd split =
      a * solver.solve(g1).values + b * solver.solve(g2).values;
  CHECK((combined - split).norm() <= 1e-10 * split.norm());
}

TEST_CASE("exterior-data locality is exact") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 1.0);
  ForwardSolver solver(scn);
  const Eigen::VectorXd g = probe_bump(scn.partition);
  Eigen::VectorXd corrupted = g;
  Rng rng(9);
  for (int i : scn.partition.interior) corrupted[i] = 1e6 * rng.normal();
  const Solution a = solver.solve(g);
  const Solution b = solver.solve(corrupted);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weak-form consistency against the bilinear form") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 0.9);
  ForwardSolver solver(scn);
  Rng rng(21);
  const Eigen::Index n = scn.op->size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int i : scn.partition.annulus) f[i] = rng.normal();
  const Solution sol = solver.solve(probe_bump(scn.partition), f);

  const double hn = scn.op->cell_measure();
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    for (int i : scn.partition.annulus) phi[i] = rng.normal();
    const double lhs = bilinear_form(*scn.op, scn.potential, scn.partition,
                                     sol.values, phi);
    double rhs = 0.0;
    for (int i : scn.partition.annulus) rhs += f[i] * phi[i] * hn;
    CHECK(rel_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("bilinear form and hs_norm spectral actions") {
  const auto& fx = fixture();
  const Scenario scn = make_scenario(ObstacleKind::none, 0.0);
  const auto& fact = fx.op->factorization();
  const Eigen::Index k = 7;
  const Eigen::VectorXd phi = fact.vectors.col(k);
  const double lambda_s = std::pow(fact.values[k], 0.5);
  const double hn = fx.grid.cell_measure();

  CHECK(rel_diff(bilinear_form(*fx.op, scn.potential, scn.partition, phi, phi),
                 lambda_s * hn) < 1e-11);
  CHECK(rel_diff(hs_norm(*fx.op, phi),
                 std::sqrt(1.0 + lambda_s) * std::sqrt(hn)) < 1e-11);

  CHECK(hs_norm(*fx.op, Eigen::VectorXd::Zero(fx.op->size())) == 0.0);

  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd v = rng.normal_vector(fx.op->size());
    CHECK(hs_norm(*fx.op, v) >= l2h_norm(v, hn) * (1.0 - 1e-12));
  }

  // symmetry and additivity of the potential term
  Rng rng2(4);
  const Eigen::VectorXd v = rng2.normal_vector(fx.op->size());
  const Eigen::VectorXd w = rng2.normal_vector(fx.op->size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(fx.op->size());
  for (int i : scn.partition.annulus) q[i] = rng2.normal();
  CHECK(rel_diff(bilinear_form(*fx.op, q, scn.partition, v, w),
                 bilinear_form(*fx.op, q, scn.partition, w, v)) < 1e-12);

  Eigen::VectorXd vn = Eigen::VectorXd::Zero(fx.op->size());
  for (int i : scn.partition.annulus) vn[i] = rng2.normal();
  const double c = 1.3;
  const Eigen::VectorXd qc = Eigen::VectorXd::Constant(fx.op->size(), c);
  double vn_sq = 0.0;
  for (int i : scn.partition.annulus) vn_sq += vn[i] * vn[i];
  const double with_q = bilinear_form(*fx.op, qc, scn.partition, vn, vn);
  const double without_q =
      bilinear_form(*fx.op, Eigen::VectorXd::Zero(fx.op->size()), scn.partition,
                    vn, vn);
  CHECK(rel_diff(with_q - without_q, c * vn_sq * fx.grid.cell_measure()) < 1e-10);
}

TEST_CASE("stability ratio is stable under more sampling") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 0.5);
  Rng rng_small(42);
  Rng rng_large(42);
  const auto small = stability_ratio(scn, 100, rng_small);
  const auto large = stability_ratio(scn, 1000, rng_large);
  CHECK(small.max_ratio > 0.0);
  CHECK(large.max_ratio >= small.max_ratio);  // same seed, nested draws
  CHECK(large.max_ratio < 2.0 * small.max_ratio);
}

TEST_CASE("stability ratio is invariant under joint scaling of the data") {
  const Scenario scn = make_scenario(ObstacleKind::soft, 0.5);
  ForwardSolver solver(scn);
  Rng rng(6);
  const Eigen::Index n = scn.op->size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int i : scn.partition.annulus) f[i] = rng.normal();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i : scn.partition.exterior) g[i] = rng.normal();

  const double hn = scn.op->cell_measure();
  const auto ratio_for = [&](const Eigen::VectorXd& ff, const Eigen::VectorXd& gg) {
    const Solution sol = solver.solve(gg, ff);
    return hs_norm(*scn.op, sol.values) /
           (l2h_norm(ff, scn.partition.annulus, hn) + hs_norm(*scn.op, gg));
  };
  CHECK(rel_diff(ratio_for(f, g), ratio_for(2.0 * f, 2.0 * g)) < 1e-12);
}

TEST_CASE("bilinear form rejects mismatched dimensions") {
  const auto& fx = fixture();
  const Scenario scn = make_scenario(ObstacleKind::none, 0.0);
  const Eigen::VectorXd ok = Eigen::VectorXd::Zero(fx.op->size());
  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(fx.op->size() - 1);
  CHECK_THROWS_AS(bilinear_form(*fx.op, scn.potential, scn.partition, ok, bad),
                  ValidationError);
  CHECK_THROWS_AS(hs_norm(*fx.op, bad), ValidationError);
}

TEST_CASE("scenario validation rejects inconsistent inputs") {
  Scenario scn = make_scenario(ObstacleKind::soft, 1.0);
  scn.kind = ObstacleKind::none;  // obstacle nodes present but kind none
  CHECK_THROWS_AS(scn.validate(), ValidationError);

  Scenario hard = make_scenario(ObstacleKind::hard, 0.0);
  hard.require_nonvanishing_potential = true;
  CHECK_THROWS_AS(hard.validate(), ValidationError);

  Scenario nan_q = make_scenario(ObstacleKind::soft, 1.0);
  nan_q.potential[nan_q.partition.annulus[0]] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nan_q.validate(), ValidationError);
}
