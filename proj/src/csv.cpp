#include "rcl/csv.hpp"

#include "rcl/error.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace rcl {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

namespace {

template <typename Matrix, typename Fmt>
void write_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header,
               Fmt fmt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols()) {
      throw StructuralError("CSV header has " + std::to_string(header.size()) + " labels for " +
                            std::to_string(m.cols()) + " columns");
    }
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt(m(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw SchemaError("non-numeric field '" + s + "' in " + path.string());
  }
  return v;
}

RealMatrix read_numeric(const std::filesystem::path& path, std::optional<Eigen::Index> expected_cols,
                        bool has_header) {
  auto rows = read_csv_rows(path);
  if (has_header) {
    if (rows.empty()) throw SchemaError("missing header in " + path.string());
    rows.erase(rows.begin());
  }
  if (rows.empty()) return RealMatrix(0, expected_cols.value_or(0));
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  RealMatrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(rows[i].size());
    if (n != cols || (expected_cols && n != *expected_cols)) {
      throw SchemaError(path.string() + ": row " + std::to_string(i) + " has " + std::to_string(n) +
                        " columns, expected " + std::to_string(expected_cols.value_or(cols)));
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = parse_double(rows[i][j], path);
  }
  return m;
}

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const RealMatrix& m,
                      const std::vector<std::string>& header) {
  write_csv(path, m, header, [](double v) { return format_double(v); });
}

void write_matrix_csv(const std::filesystem::path& path, const BinaryMatrix& m,
                      const std::vector<std::string>& header) {
  write_csv(path, m, header, [](int v) { return std::to_string(v); });
}

RealMatrix read_real_csv(const std::filesystem::path& path, std::optional<Eigen::Index> expected_cols,
                         bool has_header) {
  return read_numeric(path, expected_cols, has_header);
}

BinaryMatrix read_binary_csv(const std::filesystem::path& path, std::optional<Eigen::Index> expected_cols,
                             bool has_header) {
  const RealMatrix m = read_numeric(path, expected_cols, has_header);
  if (!((m.array() == 0.0) || (m.array() == 1.0)).all()) {
    throw SchemaError(path.string() + " contains non-binary entries");
  }
  return m.cast<int>();
}

}  // namespace rcl
