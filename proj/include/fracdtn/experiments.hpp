#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fracdtn/config.hpp"

namespace fracdtn {

struct RunOptions {
  std::filesystem::path out_dir = "out";
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  bool use_cache = true;
  std::string cache_dir;  // empty: FRACDTN_CACHE_DIR or <out>/cache
};

/// Executes the experiment declared in the config and writes result.json
/// (plus fields/*.csv and plotdata/*.csv) under options.out_dir. Returns the
/// result document. Throws the usual error types on failure.
nlohmann::json run_experiment(const ScenarioConfig& config,
                              const RunOptions& options);

}  // namespace fracdtn
