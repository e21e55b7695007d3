#pragma once

// Matrix and partition file formats.
//
//  * CSV: n lines of n comma-separated decimals.
//  * Binary: 8-byte little-endian unsigned n, then n*n little-endian IEEE-754
//    doubles in row-major order.
//  * Partition JSON: {"clusters": [[...], ...], "outliers": [...]} with
//    1-based node indices.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kdc/errors.hpp"
#include "kdc/graph_model.hpp"
#include "kdc/linalg.hpp"

namespace kdc::io {

/// Raised when an output file cannot be written.
class WriteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { csv, binary };

/// ".bin" selects binary, anything else CSV.
inline MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? MatrixFormat::binary : MatrixFormat::csv;
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

inline Matrix matrix_from_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      if (first == std::string::npos) {
        throw ParseError("empty cell on line " + std::to_string(line_no));
      }
      cell = cell.substr(first, last - first + 1);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size()) {
        throw ParseError("bad number '" + cell + "' on line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  Matrix m(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ParseError("matrix row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " entries, expected " +
                       std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

namespace detail {

inline void put_le(std::string& out, std::uint64_t bits) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline std::uint64_t get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return bits;
}

}  // namespace detail

inline std::string matrix_to_binary(const Matrix& m) {
  std::string out;
  out.reserve(8 + 8 * static_cast<std::size_t>(m.size()));
  detail::put_le(out, static_cast<std::uint64_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      detail::put_le(out, std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  return out;
}

inline Matrix matrix_from_binary(const std::string& bytes) {
  if (bytes.size() < 8) throw ParseError("binary matrix: missing header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = detail::get_le(p);
  if (n > (1u << 20) || bytes.size() != 8 + 8 * n * n) {
    throw ParseError("binary matrix: size " + std::to_string(bytes.size()) +
                     " bytes does not match header n = " + std::to_string(n));
  }
  const auto dim = static_cast<Index>(n);
  Matrix m(dim, dim);
  p += 8;
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j, p += 8) {
      m(i, j) = std::bit_cast<double>(detail::get_le(p));
    }
  }
  return m;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw WriteError("failed writing " + path.string());
}

inline Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  if (format == MatrixFormat::binary) return matrix_from_binary(bytes);
  std::istringstream in(bytes);
  return matrix_from_csv(in);
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  return read_matrix(path, format_from_path(path));
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m,
                         MatrixFormat format) {
  write_file(path, format == MatrixFormat::binary ? matrix_to_binary(m) : matrix_to_csv(m));
}

inline WeightMatrix read_weight_matrix(const std::filesystem::path& path) {
  return WeightMatrix(read_matrix(path));
}

inline nlohmann::json partition_to_json(const Partition& p) {
  auto one_based = [](const std::vector<Index>& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (Index v : set) arr.push_back(v + 1);
    return arr;
  };
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : p.clusters()) clusters.push_back(one_based(c));
  return {{"clusters", clusters}, {"outliers", one_based(p.outliers())}};
}

/// Node count is the number of listed indices unless "n" is given.
inline Partition partition_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::vector<Index>> clusters;
    std::vector<Index> outliers;
    Index total = 0;
    for (const auto& c : j.at("clusters")) {
      std::vector<Index> set;
      for (const auto& v : c) set.push_back(v.get<Index>() - 1);
      total += static_cast<Index>(set.size());
      clusters.push_back(std::move(set));
    }
    if (j.contains("outliers")) {
      for (const auto& v : j.at("outliers")) outliers.push_back(v.get<Index>() - 1);
    }
    total += static_cast<Index>(outliers.size());
    const Index n = j.contains("n") ? j.at("n").get<Index>() : total;
    return Partition(std::move(clusters), std::move(outliers), n);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition JSON: ") + e.what());
  }
}

inline Partition read_partition(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return partition_from_json(j);
}

inline void write_partition(const std::filesystem::path& path, const Partition& p) {
  write_file(path, partition_to_json(p).dump(2) + "\n");
}

}  // namespace kdc::io
