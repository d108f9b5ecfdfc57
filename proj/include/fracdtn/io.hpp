#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "fracdtn/dtn.hpp"

namespace fracdtn {

/// Writes a numeric table as CSV: one header line, then one row per matrix
/// row, 17 significant digits (round-trip exact for float64).
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows);

/// DtN container format: one JSON header line terminated by '\n', followed by
/// the row-major little-endian float64 payload. Field names are documented in
/// docs/schema.md.
void write_dtn_matrix(const std::filesystem::path& path, const DtnMatrix& dtn);
DtnMatrix read_dtn_matrix(const std::filesystem::path& path);

/// CSV export of a DtN matrix (row node, column node, value).
void write_dtn_csv(const std::filesystem::path& path, const DtnMatrix& dtn);

void write_doubles(const std::filesystem::path& path,
                   const std::vector<const Eigen::MatrixXd*>& blocks);
bool read_doubles(const std::filesystem::path& path,
                  const std::vector<Eigen::MatrixXd*>& blocks);

/// FNV-1a hash of a byte string, hex encoded; keys caches and configs.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace fracdtn
