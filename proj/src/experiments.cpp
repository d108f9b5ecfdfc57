#include "fracdtn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fracdtn/dtn.hpp"
#include "fracdtn/errors.hpp"
#include "fracdtn/inverse.hpp"
#include "fracdtn/io.hpp"
#include "fracdtn/kernel.hpp"
#include "fracdtn/rng.hpp"
#include "fracdtn/version.hpp"

namespace fracdtn {

using nlohmann::json;

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Eigen::MatrixXd node_table(const Grid& grid, const std::vector<int>& nodes,
                           const Eigen::VectorXd& values_by_position) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(nodes.size()),
                       2 + grid.dimension());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k);
    rows(r, 0) = nodes[k];
    const Point x = grid.node(nodes[k]);
    for (int d = 0; d < grid.dimension(); ++d) rows(r, 1 + d) = x[d];
    rows(r, 1 + grid.dimension()) = values_by_position[r];
  }
  return rows;
}

std::vector<std::string> node_table_columns(const Grid& grid,
                                            const std::string& value_name) {
  std::vector<std::string> cols{"node"};
  const char* axes[] = {"x", "y", "z"};
  for (int d = 0; d < grid.dimension(); ++d) cols.emplace_back(axes[d]);
  cols.push_back(value_name);
  return cols;
}

Eigen::VectorXd restrict_full(const Eigen::VectorXd& full,
                              const std::vector<int>& subset) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = full[subset[k]];
  return out;
}

std::vector<double> parse_alphas(const json& spec) {
  std::vector<double> alphas;
  if (spec.is_array()) {
    for (const auto& a : spec) alphas.push_back(a.get<double>());
  } else {
    const double first = spec.value("first", 1.0);
    const double ratio = spec.value("ratio", 100.0);
    const int count = spec.value("count", 9);
    double a = first;
    for (int k = 0; k < count; ++k, a /= ratio) alphas.push_back(a);
  }
  return alphas;
}

Eigen::VectorXd noisy(const Eigen::VectorXd& clean, double noise_rel, Rng& rng,
                      double* noise_level = nullptr) {
  if (noise_rel <= 0.0) {
    if (noise_level) *noise_level = 0.0;
    return clean;
  }
  Eigen::VectorXd xi = rng.normal_vector(clean.size());
  xi *= (noise_rel * clean.norm()) / xi.norm();
  if (noise_level) *noise_level = xi.norm();
  return clean + xi;
}

// ---- per-experiment drivers ----

json run_forward(const ScenarioConfig& cfg, const Scene& scene,
                 const RunOptions& opt, const std::filesystem::path& out) {
  Scenario scn = build_scenario(cfg, scene);
  if (cfg.experiment.contains("source"))
    scn.source = evaluate_field(cfg.experiment["source"], scene.grid);
  ForwardSolver solver(scn);
  const Eigen::VectorXd g = evaluate_exterior_data(
      cfg.experiment.value("data", json{{"type", "constant"}, {"value", 1.0}}),
      scene.grid, scene.partition.control);
  const Solution sol = solver.solve(g);

  write_csv(out / "fields" / "solution.csv", node_table_columns(scene.grid, "u"),
            node_table(scene.grid,
                       [&] {
                         std::vector<int> all(static_cast<std::size_t>(
                             scene.grid.node_count()));
                         for (int i = 0; i < scene.grid.node_count(); ++i)
                           all[static_cast<std::size_t>(i)] = i;
                         return all;
                       }(),
                       sol.values));

  json metrics;
  metrics["sigma_min"] = solver.report().sigma_min;
  metrics["sigma_max"] = solver.report().sigma_max;
  metrics["well_posed"] = solver.report().well_posed;
  metrics["annulus_residual"] = sol.annulus_residual;
  metrics["obstacle_residual"] = sol.obstacle_residual;
  metrics["solution_hs_norm"] = hs_norm(*scene.op, sol.values);
  metrics["min_abs_potential"] = scn.min_abs_potential();
  return metrics;
}

json run_dtn(const ScenarioConfig& cfg, const Scene& scene, const RunOptions& opt,
             const std::filesystem::path& out) {
  Scenario scn = build_scenario(cfg, scene);
  ForwardSolver solver(scn);
  const DtnMatrix dtn = assemble_dtn_matrix(solver, opt.threads);
  write_dtn_matrix(out / "dtn.bin", dtn);
  if (dtn.values.size() <= 10000) write_dtn_csv(out / "dtn.csv", dtn);

  json metrics;
  metrics["rows"] = dtn.values.rows();
  metrics["cols"] = dtn.values.cols();
  metrics["sigma_min"] = solver.report().sigma_min;
  metrics["sigma_max"] = solver.report().sigma_max;
  return metrics;
}

json run_identity_check(const ScenarioConfig& cfg, const Scene& scene,
                        const RunOptions& opt, const std::filesystem::path& out,
                        Rng& rng) {
  Scenario scn1 = build_scenario(cfg, scene);
  Scenario scn2 = scn1;
  scn2.potential =
      evaluate_field(cfg.experiment.at("potential2"), scene.grid);
  const int draws = cfg.experiment.value("draws", 20);

  const Eigen::Index n = scene.op->size();
  Eigen::MatrixXd path(draws, 2);
  double max_residual = 0.0;
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(n);
    for (int i : scene.partition.control) g1[i] = rng.normal();
    Eigen::VectorXd g2 = Eigen::VectorXd::Zero(n);
    for (int i : scene.partition.observation) g2[i] = rng.normal();
    const double r = integral_identity_check(scn1, scn2, g1, g2);
    path(k, 0) = k;
    path(k, 1) = r;
    max_residual = std::max(max_residual, r);
  }
  write_csv(out / "plotdata" / "identity_residuals.csv", {"draw", "residual"}, path);

  json metrics;
  metrics["draws"] = draws;
  metrics["max_residual"] = max_residual;
  metrics["obstacle_kind"] = to_string(cfg.obstacle_kind);
  return metrics;
}

json run_kernel_bounds(const ScenarioConfig& cfg, const Scene& scene,
                       const RunOptions& opt, const std::filesystem::path& out) {
  const KernelMatrix kernel = extract_kernel(*scene.op, scene.grid);
  KernelPairWindow fit_window;
  if (cfg.experiment.contains("fit_window")) {
    const auto& w = cfg.experiment["fit_window"];
    fit_window.min_separation_factor =
        w.value("min_separation", fit_window.min_separation_factor);
    fit_window.max_separation_factor =
        w.value("max_separation", fit_window.max_separation_factor);
    fit_window.boundary_margin_factor =
        w.value("boundary_margin", fit_window.boundary_margin_factor);
  }
  const double s = cfg.exponent;
  const KernelPowerLawFit fit =
      fit_kernel_power_law(kernel, scene.grid, s, fit_window);
  const KernelPositivityScan scan = scan_kernel_positivity(kernel, scene.grid, s);
  write_csv(out / "plotdata" / "kernel_loglog.csv", {"log_r", "log_k"},
            kernel_loglog_points(kernel, scene.grid, fit_window));

  const int n = scene.grid.dimension();
  json metrics;
  metrics["slope"] = fit.slope;
  metrics["slope_target"] = -(n + 2.0 * s);
  metrics["prefactor"] = fit.prefactor;
  metrics["reference_constant"] = fractional_laplacian_constant(n, s);
  metrics["prefactor_rel_error"] =
      std::abs(fit.prefactor - fractional_laplacian_constant(n, s)) /
      fractional_laplacian_constant(n, s);
  metrics["fit_pairs"] = fit.pair_count;
  metrics["fitted_c1"] = scan.min_scaled;
  metrics["positivity_min_value"] = scan.min_value;
  metrics["positivity_pairs"] = scan.pair_count;
  return metrics;
}

json run_runge(const ScenarioConfig& cfg, const Scene& scene,
               const RunOptions& opt, const std::filesystem::path& out) {
  Scenario scn = build_scenario(cfg, scene);
  ForwardSolver solver(scn);
  const auto& annulus = scene.partition.annulus;
  const Eigen::Index na = static_cast<Eigen::Index>(annulus.size());

  const json& target_spec = cfg.experiment.at("target");
  Eigen::VectorXd target(na);
  const std::string target_type = target_spec.value("type", "ones");
  if (target_type == "ones") {
    target.setOnes();
  } else if (target_type == "indicator") {
    const ShapeSpec shape =
        parse_shape(target_spec.at("shape"), scene.grid.dimension());
    for (Eigen::Index k = 0; k < na; ++k)
      target[k] = shape.contains_strict(scene.grid.node(annulus[k])) ? 1.0 : 0.0;
  } else if (target_type == "from_control") {
    const Eigen::VectorXd g = evaluate_exterior_data(
        target_spec.at("data"), scene.grid, scene.partition.control);
    target = restrict_full(solver.solve(g).values, annulus);
  } else if (target_type == "field") {
    target = restrict_full(
        evaluate_field(target_spec.at("field"), scene.grid), annulus);
  } else {
    throw ValidationError("unknown runge target type '" + target_type + "'");
  }

  const std::vector<double> alphas =
      parse_alphas(cfg.experiment.value("alphas", json()));
  const RungeResult result =
      runge_approximate(solver, target, alphas, opt.threads);

  Eigen::MatrixXd path(static_cast<Eigen::Index>(result.path.size()), 2);
  for (std::size_t k = 0; k < result.path.size(); ++k) {
    path(static_cast<Eigen::Index>(k), 0) = result.path[k].first;
    path(static_cast<Eigen::Index>(k), 1) = result.path[k].second;
  }
  write_csv(out / "plotdata" / "regularization_path.csv", {"alpha", "residual"},
            path);
  write_csv(out / "fields" / "control.csv", node_table_columns(scene.grid, "g"),
            node_table(scene.grid, scene.partition.control, result.control));

  const double target_norm = l2h_norm(target, scene.op->cell_measure());
  json metrics;
  metrics["best_alpha"] = result.alpha;
  metrics["residual"] = result.residual;
  metrics["target_norm"] = target_norm;
  metrics["relative_residual"] =
      target_norm > 0.0 ? result.residual / target_norm : 0.0;
  metrics["control_nodes"] = scene.partition.control.size();
  metrics["annulus_nodes"] = annulus.size();
  metrics["path_monotone"] = true;  // enforced inside runge_approximate
  return metrics;
}

json run_recover_obstacle(const ScenarioConfig& cfg, const Scene& scene,
                          const RunOptions& opt, const std::filesystem::path& out,
                          Rng& rng) {
  InversionContext ctx{scene.grid, scene.op, cfg.omega, cfg.control_patch,
                       cfg.observation_patch};
  ObstacleCandidateFamily family;
  for (const auto& cand : cfg.experiment.at("family")) {
    ObstacleCandidate c;
    c.shape = parse_shape(cand.at("shape"), scene.grid.dimension());
    c.kind = obstacle_kind_from_string(cand.value("kind", "soft"));
    family.candidates.push_back(std::move(c));
  }
  const Eigen::VectorXd potential = evaluate_field(cfg.potential, scene.grid);
  const Eigen::VectorXd probe = evaluate_exterior_data(
      cfg.experiment.at("probe"), scene.grid, scene.partition.control);

  // Truth scenario: a family member by index, or an explicit shape.
  ShapeSpec truth_shape;
  ObstacleKind truth_kind = ObstacleKind::soft;
  int truth_index = -1;
  if (cfg.experiment.contains("truth_index")) {
    truth_index = cfg.experiment["truth_index"].get<int>();
    if (truth_index < 0 ||
        truth_index >= static_cast<int>(family.candidates.size()))
      throw ValidationError("truth_index outside the family");
    truth_shape = family.candidates[static_cast<std::size_t>(truth_index)].shape;
    truth_kind = family.candidates[static_cast<std::size_t>(truth_index)].kind;
  } else {
    const auto& t = cfg.experiment.at("truth");
    truth_shape = parse_shape(t.at("shape"), scene.grid.dimension());
    truth_kind = obstacle_kind_from_string(t.value("kind", "soft"));
  }

  Scenario truth;
  truth.partition = partition(scene.grid, cfg.omega, truth_shape,
                              cfg.control_patch, cfg.observation_patch);
  truth.op = scene.op;
  truth.potential = potential;
  truth.kind = truth_kind;
  truth.source = Eigen::VectorXd::Zero(scene.op->size());
  ForwardSolver truth_solver(truth);
  const Eigen::VectorXd trace = apply_dtn(truth_solver, probe);
  Eigen::VectorXd measurement(
      static_cast<Eigen::Index>(truth.partition.observation.size()));
  {
    std::size_t r = 0;
    for (int node : truth.partition.observation) {
      const auto it = std::lower_bound(truth.partition.exterior.begin(),
                                       truth.partition.exterior.end(), node);
      measurement[static_cast<Eigen::Index>(r++)] =
          trace[it - truth.partition.exterior.begin()];
    }
  }
  const double noise_rel = cfg.experiment.value("noise_rel", 0.0);
  measurement = noisy(measurement, noise_rel, rng);

  const ObstacleSearchResult result = recover_obstacle(
      ctx, measurement, probe, family, potential, opt.threads);

  Eigen::MatrixXd misfit_rows(static_cast<Eigen::Index>(result.misfits.size()), 3);
  for (std::size_t c = 0; c < result.misfits.size(); ++c) {
    misfit_rows(static_cast<Eigen::Index>(c), 0) = static_cast<double>(c);
    misfit_rows(static_cast<Eigen::Index>(c), 1) = result.misfits[c];
    misfit_rows(static_cast<Eigen::Index>(c), 2) = result.solvable[c] ? 1.0 : 0.0;
  }
  write_csv(out / "plotdata" / "misfits.csv", {"candidate", "misfit", "solvable"},
            misfit_rows);

  json metrics;
  metrics["best_candidate"] = result.best_index;
  if (truth_index >= 0) metrics["truth_index"] = truth_index;
  metrics["exact_match"] = result.exact_match;
  metrics["noise_rel"] = noise_rel;
  metrics["best_misfit"] = result.misfits[static_cast<std::size_t>(result.best_index)];
  return metrics;
}

json run_recover_potential(const ScenarioConfig& cfg, const Scene& scene,
                           const RunOptions& opt, const std::filesystem::path& out,
                           Rng& rng) {
  Scenario scn1 = build_scenario(cfg, scene);
  Scenario scn2 = scn1;
  scn2.potential = evaluate_field(cfg.experiment.at("potential2"), scene.grid);

  ForwardSolver solver1(scn1);
  ForwardSolver solver2(scn2);
  const DtnMatrix dtn1 = assemble_dtn_matrix(solver1, opt.threads);
  const DtnMatrix dtn2 = assemble_dtn_matrix(solver2, opt.threads);

  const double noise_rel = cfg.experiment.value("noise_rel", 0.0);
  PotentialRecoveryOptions options;
  options.rank_tolerance = cfg.tolerances.rank_tolerance;
  options.discrepancy_eta = cfg.tolerances.discrepancy_eta;
  std::optional<Eigen::VectorXd> data;
  if (noise_rel > 0.0) {
    const Eigen::VectorXd clean = stack_dtn_difference(dtn1, dtn2);
    double level = 0.0;
    data = noisy(clean, noise_rel, rng, &level);
    options.noise_level = level;
  }

  const PotentialRecovery rec = recover_potential(scn1, scn2, dtn1, dtn2, options,
                                                  data, opt.threads);

  const auto& annulus = scene.partition.annulus;
  const Eigen::VectorXd truth =
      restrict_full(scn1.potential - scn2.potential, annulus);
  const double truth_norm = truth.norm();
  const double rel_error =
      truth_norm > 0.0 ? (rec.delta_q - truth).norm() / truth_norm
                       : rec.delta_q.norm();

  Eigen::MatrixXd table(static_cast<Eigen::Index>(annulus.size()),
                        2 + scene.grid.dimension() + 1);
  for (std::size_t k = 0; k < annulus.size(); ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k);
    table(r, 0) = annulus[k];
    const Point x = scene.grid.node(annulus[k]);
    for (int d = 0; d < scene.grid.dimension(); ++d) table(r, 1 + d) = x[d];
    table(r, 1 + scene.grid.dimension()) = rec.delta_q[r];
    table(r, 2 + scene.grid.dimension()) = truth[r];
  }
  std::vector<std::string> cols = node_table_columns(scene.grid, "delta_q");
  cols.push_back("delta_q_true");
  write_csv(out / "fields" / "delta_q.csv", cols, table);

  json metrics;
  metrics["rank_used"] = rec.rank_used;
  metrics["sigma_max"] = rec.sigma_max;
  metrics["sigma_min"] = rec.sigma_min;
  metrics["data_residual"] = rec.data_residual;
  metrics["relative_error"] = rel_error;
  metrics["noise_level"] = options.noise_level;
  metrics["noise_rel"] = noise_rel;
  metrics["rows"] = dtn1.values.rows() * dtn1.values.cols();
  metrics["pixels"] = annulus.size();
  return metrics;
}

json run_distinguish(const ScenarioConfig& cfg, const Scene& scene,
                     const RunOptions& opt) {
  Scenario scn1 = build_scenario(cfg, scene);
  scn1.require_nonvanishing_potential = scn1.kind == ObstacleKind::hard;

  const auto& second_spec = cfg.experiment.at("second");
  ShapeSpec obstacle2 = second_spec.contains("obstacle")
                            ? parse_shape(second_spec["obstacle"],
                                          scene.grid.dimension())
                            : cfg.obstacle;
  Scenario scn2;
  scn2.partition = partition(scene.grid, cfg.omega, obstacle2, cfg.control_patch,
                             cfg.observation_patch);
  scn2.op = scene.op;
  scn2.potential = second_spec.contains("potential")
                       ? evaluate_field(second_spec["potential"], scene.grid)
                       : scn1.potential;
  scn2.kind = second_spec.contains("obstacle_kind")
                  ? obstacle_kind_from_string(
                        second_spec["obstacle_kind"].get<std::string>())
                  : cfg.obstacle_kind;
  scn2.source = Eigen::VectorXd::Zero(scene.op->size());
  scn2.require_nonvanishing_potential = scn2.kind == ObstacleKind::hard;

  const Eigen::VectorXd probe = evaluate_exterior_data(
      cfg.experiment.at("probe"), scene.grid, scene.partition.control);
  const DistinguishReport report =
      distinguish_obstacles(scn1, scn2, probe, cfg.tolerances.distinctness);

  json metrics;
  metrics["discrepancy"] = report.discrepancy;
  metrics["reference_norm"] = report.reference_norm;
  metrics["threshold"] = report.threshold;
  metrics["distinct"] = report.distinct;
  metrics["min_abs_potential_1"] = report.min_abs_potential_1;
  metrics["min_abs_potential_2"] = report.min_abs_potential_2;
  return metrics;
}

}  // namespace

json run_experiment(const ScenarioConfig& config, const RunOptions& options) {
  const std::filesystem::path out = options.out_dir;
  std::filesystem::create_directories(out / "fields");
  std::filesystem::create_directories(out / "plotdata");

  std::optional<FactorizationCache> cache;
  if (options.use_cache)
    cache = FactorizationCache::resolve(out, options.cache_dir);

  const Scene scene = build_scene(config, cache ? &*cache : nullptr);
  const std::uint64_t seed = options.seed_override.value_or(config.seed);
  Rng rng(seed);

  const std::string type = config.experiment.at("type").get<std::string>();
  json metrics;
  if (type == "forward") {
    metrics = run_forward(config, scene, options, out);
  } else if (type == "dtn") {
    metrics = run_dtn(config, scene, options, out);
  } else if (type == "identity-check") {
    metrics = run_identity_check(config, scene, options, out, rng);
  } else if (type == "kernel-bounds") {
    metrics = run_kernel_bounds(config, scene, options, out);
  } else if (type == "runge") {
    metrics = run_runge(config, scene, options, out);
  } else if (type == "recover-obstacle") {
    metrics = run_recover_obstacle(config, scene, options, out, rng);
  } else if (type == "recover-potential") {
    metrics = run_recover_potential(config, scene, options, out, rng);
  } else if (type == "distinguish") {
    metrics = run_distinguish(config, scene, options);
  } else {
    throw ValidationError("unknown experiment type '" + type + "'");
  }

  json result;
  result["experiment"] = type;
  result["metrics"] = metrics;
  result["tolerances"] = config.tolerances.to_json();
  result["provenance"] = {
      {"config_hash", config.config_hash},
      {"seed", seed},
      {"threads", options.threads},
      {"tool", "fracdtn"},
      {"version", kVersion},
      {"cache", options.use_cache ? "enabled" : "disabled"},
  };
  result["generated_at"] = timestamp_utc();

  std::ofstream result_out(out / "result.json");
  if (!result_out)
    throw ValidationError("cannot write result.json under " + out.string());
  result_out << result.dump(2) << "\n";
  return result;
}

}  // namespace fracdtn
