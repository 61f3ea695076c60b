#pragma once

// Plain CSV I/O for dense matrices. Floats are printed with 17 significant
// digits so that a write/read cycle reproduces every double bit-exactly.

#include "rcl/graph_core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rcl {

std::string format_double(double v);

/// Splits one CSV line on commas. No quoting support; fields never contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const RealMatrix& m,
                      const std::vector<std::string>& header = {});
void write_matrix_csv(const std::filesystem::path& path, const BinaryMatrix& m,
                      const std::vector<std::string>& header = {});

/// Reads a headerless numeric CSV. `expected_cols`, when given, is enforced on every
/// row (SchemaError otherwise); ragged rows are always a SchemaError.
RealMatrix read_real_csv(const std::filesystem::path& path, std::optional<Eigen::Index> expected_cols = {},
                         bool has_header = false);
BinaryMatrix read_binary_csv(const std::filesystem::path& path, std::optional<Eigen::Index> expected_cols = {},
                             bool has_header = false);

}  // namespace rcl
