#include "fracdtn/cache.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracdtn/errors.hpp"
#include "fracdtn/io.hpp"

namespace fracdtn {

FactorizationCache::FactorizationCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

FactorizationCache FactorizationCache::resolve(const std::filesystem::path& base_dir,
                                               const std::string& override_dir) {
  if (!override_dir.empty()) return FactorizationCache(override_dir);
  if (const char* env = std::getenv("FRACDTN_CACHE_DIR"); env && *env)
    return FactorizationCache(env);
  return FactorizationCache(base_dir / "cache");
}

std::string FactorizationCache::key_for(const Grid& grid,
                                        const std::string& field_description) {
  std::ostringstream os;
  os << "n=" << grid.dimension() << ";R=" << std::hexfloat << grid.half_width()
     << ";m=" << grid.nodes_per_axis() << ";field=" << field_description
     << ";boundary=zero-extension;scheme=face-split-v1";
  return fnv1a_hex(os.str());
}

std::optional<SpectralFactorization> FactorizationCache::load(
    const std::string& key) const {
  const auto sidecar = directory_ / (key + ".json");
  const auto payload = directory_ / (key + ".bin");
  std::ifstream meta_in(sidecar);
  if (!meta_in) return std::nullopt;
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (meta.value("format", "") != "fracdtn-factorization") return std::nullopt;

  const Eigen::Index n = meta.value("nodes", 0);
  if (n <= 0) return std::nullopt;
  SpectralFactorization fact;
  fact.spacing = meta.value("spacing", 1.0);
  fact.values.resize(n);
  fact.vectors.resize(n, n);
  Eigen::MatrixXd values_block(n, 1);
  if (!read_doubles(payload, {&values_block, &fact.vectors})) return std::nullopt;
  fact.values = values_block.col(0);
  return fact;
}

void FactorizationCache::store(const std::string& key, const Grid& grid,
                               const std::string& field_description,
                               const SpectralFactorization& fact) const {
  nlohmann::json meta;
  meta["format"] = "fracdtn-factorization";
  meta["version"] = 1;
  meta["key"] = key;
  meta["nodes"] = fact.size();
  meta["spacing"] = fact.spacing;
  meta["grid"] = {{"n", grid.dimension()},
                  {"R", grid.half_width()},
                  {"m", grid.nodes_per_axis()}};
  meta["field"] = field_description;
  meta["byte_order"] = "little";

  const Eigen::MatrixXd values_block = fact.values;
  write_doubles(directory_ / (key + ".bin"), {&values_block, &fact.vectors});
  std::ofstream meta_out(directory_ / (key + ".json"));
  if (!meta_out)
    throw ValidationError("cannot write cache sidecar in " + directory_.string());
  meta_out << meta.dump(2) << "\n";
}

std::vector<FactorizationCache::Entry> FactorizationCache::list() const {
  std::vector<Entry> entries;
  if (!std::filesystem::exists(directory_)) return entries;
  for (const auto& item : std::filesystem::directory_iterator(directory_)) {
    if (item.path().extension() != ".json") continue;
    std::ifstream in(item.path());
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (meta.value("format", "") != "fracdtn-factorization") continue;
    Entry e;
    e.key = meta.value("key", item.path().stem().string());
    e.nodes = meta.value("nodes", 0);
    e.field = meta.value("field", "");
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });
  return entries;
}

int FactorizationCache::clear() const {
  int removed = 0;
  for (const auto& entry : list()) {
    std::filesystem::remove(directory_ / (entry.key + ".json"));
    std::filesystem::remove(directory_ / (entry.key + ".bin"));
    ++removed;
  }
  return removed;
}

}  // namespace fracdtn
