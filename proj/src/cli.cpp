#include "fracdtn/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracdtn/cache.hpp"
#include "fracdtn/errors.hpp"
#include "fracdtn/experiments.hpp"
#include "fracdtn/version.hpp"

#ifdef FRACDTN_HAVE_LAPACK
extern "C" void openblas_set_num_threads(int);
#endif

namespace fracdtn {

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIllPosed = 3;
constexpr int kExitNumerical = 4;

int run_command(const std::string& config_path, const RunOptions& options) {
  const ScenarioConfig config = load_config(config_path);
  const nlohmann::json result = run_experiment(config, options);
  std::cout << "wrote " << (options.out_dir / "result.json").string() << "\n";
  std::cout << result["metrics"].dump(2) << "\n";
  return 0;
}

int validate_command(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot read config file " << config_path << "\n";
    return kExitValidation;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config is not valid JSON: " << e.what() << "\n";
    return kExitValidation;
  }
  const auto diagnostics = validate_config(j);
  for (const auto& d : diagnostics) std::cout << d << "\n";
  return diagnostics.empty() ? 0 : kExitValidation;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"fracdtn: anisotropic fractional Schrodinger operators, exterior "
               "DtN maps, and inverse obstacle/potential experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  RunOptions options;
  std::uint64_t seed_value = 0;
  bool no_cache = false;

  auto* run = app.add_subcommand("run", "execute the experiment in a config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", options.out_dir, "output directory")
      ->default_str("out");
  run->add_option("--threads", options.threads, "worker threads for solves")
      ->default_val(1);
  auto* seed_opt =
      run->add_option("--seed", seed_value, "override the config seed");
  run->add_flag("--no-cache", no_cache, "disable the factorization cache");
  run->add_option("--cache-dir", options.cache_dir,
                  "factorization cache directory (default: FRACDTN_CACHE_DIR "
                  "or <out>/cache)");

  auto* validate = app.add_subcommand("validate", "check a config without solving");
  validate->add_option("config", config_path, "JSON config file")->required();

  std::string cache_dir_arg;
  auto* cache = app.add_subcommand("cache", "factorization cache management");
  cache->add_option("--cache-dir", cache_dir_arg,
                    "cache directory (default: FRACDTN_CACHE_DIR or ./cache)");
  auto* list_cmd = cache->add_subcommand("list", "list cached factorizations");
  auto* clear_cmd = cache->add_subcommand("clear", "remove cached factorizations");
  cache->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (run->parsed()) {
      if (*seed_opt) options.seed_override = seed_value;
      options.use_cache = !no_cache;
      if (options.threads < 1) {
        std::cerr << "--threads must be at least 1\n";
        return kExitValidation;
      }
#ifdef FRACDTN_HAVE_LAPACK
      openblas_set_num_threads(options.threads);
#endif
      return run_command(config_path, options);
    }
    if (validate->parsed()) return validate_command(config_path);
    if (cache->parsed()) {
      const FactorizationCache store =
          FactorizationCache::resolve(".", cache_dir_arg);
      if (list_cmd->parsed()) {
        const auto entries = store.list();
        for (const auto& entry : entries)
          std::cout << entry.key << "  nodes=" << entry.nodes << "  field="
                    << entry.field << "\n";
        if (entries.empty()) std::cout << "(cache empty)\n";
      }
      if (clear_cmd->parsed())
        std::cout << "removed " << store.clear() << " entries\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IllPosedError& e) {
    std::cerr << "ill-posed scenario: " << e.what() << "\n";
    return kExitIllPosed;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace fracdtn
