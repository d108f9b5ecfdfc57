#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracdtn/cache.hpp"
#include "fracdtn/elliptic_tensor.hpp"
#include "fracdtn/forward.hpp"
#include "fracdtn/geometry.hpp"

namespace fracdtn {

/// Effective tolerances; config values override the defaults and every
/// result.json embeds the effective set.
struct Tolerances {
  double well_posed_ratio = 1e-8;
  double distinctness = 1e-6;
  double rank_tolerance = 1e-12;
  double discrepancy_eta = 1.05;

  nlohmann::json to_json() const;
};

/// Parsed scenario configuration (see docs/schema.md for the format).
struct ScenarioConfig {
  int grid_dimension = 2;
  double grid_half_width = 1.0;
  int grid_nodes = 33;

  nlohmann::json tensor;  // tensor field spec
  double exponent = 0.5;

  ShapeSpec omega;
  ShapeSpec obstacle;  // may be empty
  ObstacleKind obstacle_kind = ObstacleKind::none;
  ShapeSpec control_patch;
  ShapeSpec observation_patch;

  nlohmann::json potential;   // field spec
  nlohmann::json experiment;  // experiment block, dispatched by "type"
  Tolerances tolerances;
  std::uint64_t seed = 1;

  std::string config_hash;  // FNV-1a of the raw config bytes
  nlohmann::json raw;
};

ScenarioConfig parse_config(const nlohmann::json& j, const std::string& raw_bytes);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Schema, geometry, and ellipticity diagnostics without any solve.
std::vector<std::string> validate_config(const nlohmann::json& j);

ShapeSpec parse_shape(const nlohmann::json& j, int dimension);
EllipticTensorField parse_tensor_field(const nlohmann::json& j, int dimension);

/// Evaluates a node-field spec ("constant", "gaussian", "pixels") to a
/// full-grid vector.
Eigen::VectorXd evaluate_field(const nlohmann::json& j, const Grid& grid);

/// Evaluates an exterior-data spec on the given support nodes; zero elsewhere.
Eigen::VectorXd evaluate_exterior_data(const nlohmann::json& j, const Grid& grid,
                                       const std::vector<int>& support);

/// Grid, operator, and partition assembled from a config. The factorization
/// optionally round-trips through the on-disk cache.
struct Scene {
  Grid grid;
  std::shared_ptr<const FractionalOperator> op;
  DomainPartition partition;
  std::string field_description;
  bool factorization_from_cache = false;
};

Scene build_scene(const ScenarioConfig& config, const FactorizationCache* cache);

/// Scenario with the config's potential, obstacle kind, and zero source.
Scenario build_scenario(const ScenarioConfig& config, const Scene& scene);

}  // namespace fracdtn
