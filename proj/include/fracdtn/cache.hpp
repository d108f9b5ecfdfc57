#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracdtn/fractional_operator.hpp"

namespace fracdtn {

/// On-disk cache of spectral factorizations, keyed by a hash of the grid, the
/// tensor field description, and the boundary handling. Each entry is a JSON
/// sidecar (<key>.json) plus a little-endian float64 payload (<key>.bin)
/// holding the eigenvalues followed by the column-major eigenvector matrix.
class FactorizationCache {
 public:
  explicit FactorizationCache(std::filesystem::path directory);

  /// Resolution order: explicit override, FRACDTN_CACHE_DIR, <base>/cache.
  static FactorizationCache resolve(const std::filesystem::path& base_dir,
                                    const std::string& override_dir = "");

  const std::filesystem::path& directory() const { return directory_; }

  static std::string key_for(const Grid& grid, const std::string& field_description);

  std::optional<SpectralFactorization> load(const std::string& key) const;
  void store(const std::string& key, const Grid& grid,
             const std::string& field_description,
             const SpectralFactorization& fact) const;

  struct Entry {
    std::string key;
    int nodes = 0;
    std::string field;
  };
  std::vector<Entry> list() const;
  int clear() const;  // returns the number of removed entries

 private:
  std::filesystem::path directory_;
};

}  // namespace fracdtn
