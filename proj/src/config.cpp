#include "fracdtn/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fracdtn/errors.hpp"
#include "fracdtn/io.hpp"
#include "fracdtn/local_operator.hpp"

namespace fracdtn {

using nlohmann::json;

nlohmann::json Tolerances::to_json() const {
  return json{{"well_posed_ratio", well_posed_ratio},
              {"distinctness", distinctness},
              {"rank_tolerance", rank_tolerance},
              {"discrepancy_eta", discrepancy_eta}};
}

namespace {

Point parse_point(const json& j, int dimension, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dimension)
    throw ValidationError(std::string(what) + " must be an array of length " +
                          std::to_string(dimension));
  Point p(dimension);
  for (int k = 0; k < dimension; ++k) p[k] = j[static_cast<std::size_t>(k)].get<double>();
  return p;
}

Shape parse_primitive(const json& j, int dimension) {
  const std::string type = j.value("type", "");
  if (type == "ball")
    return Shape::ball(parse_point(j.at("center"), dimension, "ball center"),
                       j.at("radius").get<double>());
  if (type == "box")
    return Shape::box(parse_point(j.at("min"), dimension, "box min"),
                      parse_point(j.at("max"), dimension, "box max"));
  throw ValidationError("unknown shape type '" + type + "'");
}

}  // namespace

ShapeSpec parse_shape(const json& j, int dimension) {
  if (j.is_null()) return ShapeSpec::empty();
  if (j.value("type", "") == "union") {
    ShapeSpec spec;
    for (const auto& part : j.at("parts")) spec.add(parse_primitive(part, dimension));
    if (spec.is_empty()) throw ValidationError("union shape has no parts");
    return spec;
  }
  ShapeSpec spec;
  spec.add(parse_primitive(j, dimension));
  return spec;
}

EllipticTensorField parse_tensor_field(const json& j, int dimension) {
  const std::string type = j.value("type", "constant");
  if (type == "constant") {
    const auto& rows = j.at("matrix");
    if (static_cast<int>(rows.size()) != dimension)
      throw ValidationError("tensor matrix must be " + std::to_string(dimension) +
                            " rows");
    SmallMatrix a(dimension, dimension);
    for (int r = 0; r < dimension; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != dimension)
        throw ValidationError("tensor matrix rows must have length " +
                              std::to_string(dimension));
      for (int c = 0; c < dimension; ++c)
        a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return EllipticTensorField::constant(a);
  }
  if (type == "named") {
    const std::string name = j.value("name", "");
    if (name == "identity")
      return EllipticTensorField::constant(
          SmallMatrix::Identity(dimension, dimension));
    if (name == "mild_anisotropy") {
      const double eps = j.value("epsilon", 0.3);
      if (!(eps >= 0.0 && eps <= 0.8))
        throw ValidationError("mild_anisotropy epsilon must lie in [0, 0.8]");
      const double gamma = std::min(1.0 - 0.3 * eps, 1.0 / (1.0 + 1.3 * eps));
      std::ostringstream desc;
      desc << "named:mild_anisotropy(eps=" << eps << ",n=" << dimension << ")";
      auto eval = [eps, dimension](const Point& x) {
        SmallMatrix a = SmallMatrix::Identity(dimension, dimension);
        const double s0 = std::sin(x[0]);
        const double c1 = std::cos(x[1]);
        a(0, 0) += eps * 0.5 * (1.0 + s0 * s0);
        a(1, 1) += eps * 0.5 * (1.0 + c1 * c1);
        const double cross = eps * 0.25 * s0 * c1;
        a(0, 1) = a(1, 0) = cross;
        return a;
      };
      return EllipticTensorField::from_function(dimension, eval, gamma, desc.str());
    }
    throw ValidationError("unknown named tensor field '" + name + "'");
  }
  throw ValidationError("unknown tensor spec type '" + type + "'");
}

Eigen::VectorXd evaluate_field(const json& j, const Grid& grid) {
  const int n = grid.node_count();
  Eigen::VectorXd field = Eigen::VectorXd::Zero(n);
  const std::string type = j.value("type", "constant");
  if (type == "constant") {
    field.setConstant(j.value("value", 0.0));
    return field;
  }
  if (type == "gaussian") {
    const Point center = parse_point(j.at("center"), grid.dimension(), "gaussian center");
    const double width = j.value("width", 1.0);
    const double amplitude = j.value("amplitude", 1.0);
    const double offset = j.value("offset", 0.0);
    for (int i = 0; i < n; ++i) {
      const double r2 = (grid.node(i) - center).squaredNorm();
      field[i] = offset + amplitude * std::exp(-width * r2);
    }
    return field;
  }
  if (type == "pixels") {
    field.setConstant(j.value("default", 0.0));
    const auto& indices = j.at("indices");
    const auto& values = j.at("values");
    if (indices.size() != values.size())
      throw ValidationError("pixels spec: indices and values differ in length");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const int idx = indices[k].get<int>();
      if (idx < 0 || idx >= n)
        throw ValidationError("pixels spec: node index out of range");
      field[idx] = values[k].get<double>();
    }
    return field;
  }
  throw ValidationError("unknown field spec type '" + type + "'");
}

Eigen::VectorXd evaluate_exterior_data(const json& j, const Grid& grid,
                                       const std::vector<int>& support) {
  Eigen::VectorXd data = Eigen::VectorXd::Zero(grid.node_count());
  const std::string type = j.value("type", "gaussian");
  if (type == "nodal") {
    const int offset = j.value("offset", 0);
    if (offset < 0 || offset >= static_cast<int>(support.size()))
      throw ValidationError("nodal data offset outside the patch");
    data[support[static_cast<std::size_t>(offset)]] = j.value("value", 1.0);
    return data;
  }
  if (type == "constant") {
    for (int i : support) data[i] = j.value("value", 1.0);
    return data;
  }
  if (type == "gaussian") {
    const Point center = parse_point(j.at("center"), grid.dimension(), "data center");
    const double width = j.value("width", 1.0);
    const double amplitude = j.value("amplitude", 1.0);
    for (int i : support) {
      const double r2 = (grid.node(i) - center).squaredNorm();
      data[i] = amplitude * std::exp(-width * r2);
    }
    return data;
  }
  throw ValidationError("unknown exterior data type '" + type + "'");
}

ScenarioConfig parse_config(const json& j, const std::string& raw_bytes) {
  ScenarioConfig cfg;
  cfg.raw = j;
  cfg.config_hash = fnv1a_hex(raw_bytes);

  const auto& grid = j.at("grid");
  cfg.grid_dimension = grid.at("n").get<int>();
  cfg.grid_half_width = grid.at("R").get<double>();
  cfg.grid_nodes = grid.at("m").get<int>();

  cfg.tensor = j.value("tensor", json{{"type", "named"}, {"name", "identity"}});
  cfg.exponent = j.at("s").get<double>();
  if (!(cfg.exponent > 0.0 && cfg.exponent < 1.0))
    throw ValidationError("exponent s must lie in (0,1)");

  cfg.omega = parse_shape(j.at("omega"), cfg.grid_dimension);
  cfg.obstacle = parse_shape(j.value("obstacle", json()), cfg.grid_dimension);
  cfg.obstacle_kind = obstacle_kind_from_string(j.value("obstacle_kind", "none"));
  if (cfg.obstacle_kind != ObstacleKind::none && cfg.obstacle.is_empty())
    throw ValidationError("obstacle_kind set but no obstacle shape given");
  if (cfg.obstacle_kind == ObstacleKind::none && !cfg.obstacle.is_empty())
    throw ValidationError("obstacle shape given but obstacle_kind is 'none'");

  const auto& patches = j.at("patches");
  cfg.control_patch = parse_shape(patches.at("o1"), cfg.grid_dimension);
  cfg.observation_patch = parse_shape(patches.at("o2"), cfg.grid_dimension);

  cfg.potential = j.value("potential", json{{"type", "constant"}, {"value", 0.0}});
  cfg.experiment = j.at("experiment");
  if (!cfg.experiment.contains("type"))
    throw ValidationError("experiment block needs a 'type'");
  cfg.seed = j.value("seed", 1ull);

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    cfg.tolerances.well_posed_ratio =
        t.value("well_posed_ratio", cfg.tolerances.well_posed_ratio);
    cfg.tolerances.distinctness = t.value("distinctness", cfg.tolerances.distinctness);
    cfg.tolerances.rank_tolerance =
        t.value("rank_tolerance", cfg.tolerances.rank_tolerance);
    cfg.tolerances.discrepancy_eta =
        t.value("discrepancy_eta", cfg.tolerances.discrepancy_eta);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw ValidationError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j, raw);
}

std::vector<std::string> validate_config(const json& j) {
  std::vector<std::string> diagnostics;
  ScenarioConfig cfg;
  try {
    cfg = parse_config(j, j.dump());
  } catch (const std::exception& e) {
    diagnostics.emplace_back(e.what());
    return diagnostics;
  }
  Grid grid(2, 1.0, 3);
  bool have_grid = false;
  try {
    grid = build_grid(cfg.grid_dimension, cfg.grid_half_width, cfg.grid_nodes);
    have_grid = true;
  } catch (const std::exception& e) {
    diagnostics.emplace_back(e.what());
  }
  try {
    const EllipticTensorField field = parse_tensor_field(cfg.tensor, cfg.grid_dimension);
    if (have_grid) field.validate_on(grid);
  } catch (const std::exception& e) {
    diagnostics.emplace_back(e.what());
  }
  if (have_grid) {
    try {
      partition(grid, cfg.omega, cfg.obstacle, cfg.control_patch,
                cfg.observation_patch);
    } catch (const std::exception& e) {
      diagnostics.emplace_back(e.what());
    }
  }
  return diagnostics;
}

Scene build_scene(const ScenarioConfig& config, const FactorizationCache* cache) {
  Grid grid = build_grid(config.grid_dimension, config.grid_half_width,
                         config.grid_nodes);
  const EllipticTensorField field =
      parse_tensor_field(config.tensor, config.grid_dimension);

  std::shared_ptr<const SpectralFactorization> fact;
  bool from_cache = false;
  const std::string key = FactorizationCache::key_for(grid, field.description());
  if (cache) {
    if (auto loaded = cache->load(key)) {
      fact = std::make_shared<SpectralFactorization>(std::move(*loaded));
      from_cache = true;
    }
  }
  if (!fact) {
    const LocalOperator local = assemble_local_operator(grid, field);
    auto computed = std::make_shared<SpectralFactorization>(factorize(local));
    if (cache) cache->store(key, grid, field.description(), *computed);
    fact = std::move(computed);
  }

  Scene scene{grid,
              std::make_shared<FractionalOperator>(fact, config.exponent,
                                                   grid.cell_measure()),
              partition(grid, config.omega, config.obstacle, config.control_patch,
                        config.observation_patch),
              field.description(), from_cache};
  return scene;
}

Scenario build_scenario(const ScenarioConfig& config, const Scene& scene) {
  Scenario scn;
  scn.partition = scene.partition;
  scn.op = scene.op;
  scn.potential = evaluate_field(config.potential, scene.grid);
  scn.kind = config.obstacle_kind;
  scn.source = Eigen::VectorXd::Zero(scene.grid.node_count());
  return scn;
}

}  // namespace fracdtn
