#include "fracdtn/io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fracdtn/errors.hpp"

namespace fracdtn {

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << "\n";
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      out << (c ? "," : "") << rows(r, c);
    out << "\n";
  }
}

void write_dtn_matrix(const std::filesystem::path& path, const DtnMatrix& dtn) {
  nlohmann::json header;
  header["format"] = "fracdtn-dtn";
  header["version"] = 1;
  header["rows"] = dtn.values.rows();
  header["cols"] = dtn.values.cols();
  header["cell_measure"] = dtn.cell_measure;
  header["observation"] = dtn.observation;
  header["control"] = dtn.control;
  header["byte_order"] = "little";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << header.dump() << "\n";
  for (Eigen::Index r = 0; r < dtn.values.rows(); ++r)
    for (Eigen::Index c = 0; c < dtn.values.cols(); ++c) {
      const double v = dtn.values(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

DtnMatrix read_dtn_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("missing header in " + path.string());
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "fracdtn-dtn")
    throw ValidationError(path.string() + " is not a DtN matrix file");

  DtnMatrix dtn;
  const Eigen::Index rows = header.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = header.at("cols").get<Eigen::Index>();
  dtn.cell_measure = header.at("cell_measure").get<double>();
  dtn.observation = header.at("observation").get<std::vector<int>>();
  dtn.control = header.at("control").get<std::vector<int>>();
  dtn.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!in) throw ValidationError("truncated payload in " + path.string());
      dtn.values(r, c) = v;
    }
  return dtn;
}

void write_dtn_csv(const std::filesystem::path& path, const DtnMatrix& dtn) {
  Eigen::MatrixXd rows(dtn.values.rows() * dtn.values.cols(), 3);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < dtn.values.rows(); ++r)
    for (Eigen::Index c = 0; c < dtn.values.cols(); ++c) {
      rows(k, 0) = dtn.observation[static_cast<std::size_t>(r)];
      rows(k, 1) = dtn.control[static_cast<std::size_t>(c)];
      rows(k, 2) = dtn.values(r, c);
      ++k;
    }
  write_csv(path, {"observation_node", "control_node", "value"}, rows);
}

void write_doubles(const std::filesystem::path& path,
                   const std::vector<const Eigen::MatrixXd*>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  for (const auto* block : blocks)
    out.write(reinterpret_cast<const char*>(block->data()),
              static_cast<std::streamsize>(sizeof(double)) * block->size());
}

bool read_doubles(const std::filesystem::path& path,
                  const std::vector<Eigen::MatrixXd*>& blocks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  for (auto* block : blocks) {
    in.read(reinterpret_cast<char*>(block->data()),
            static_cast<std::streamsize>(sizeof(double)) * block->size());
    if (!in) return false;
  }
  return true;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << hash;
  return os.str();
}

}  // namespace fracdtn
