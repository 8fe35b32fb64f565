#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erobot/core.hpp"

namespace erobot::cli {

/// Point-cloud CSV: no header, one point per row, '.' decimals. Blank lines
/// and lines starting with '#' are skipped. With `weighted` the last column
/// holds the atom weight, optionally written as "w:0.25".
struct CloudCsv {
  Matrix points;
  std::optional<Vector> weights;
};

CloudCsv read_cloud_csv(const std::string& path, bool weighted);

/// Numeric table with a fixed column count (same comment rules).
Matrix read_matrix_csv(const std::string& path);

using Meta = std::vector<std::pair<std::string, std::string>>;

/// Writes "# key: value" lines, an optional header row, then the rows.
void write_csv(std::ostream& out, const Meta& meta, const std::vector<std::string>& header,
               const Matrix& rows);
void write_csv_file(const std::string& path, const Meta& meta,
                    const std::vector<std::string>& header, const Matrix& rows);

std::string format_double(double v);

}  // namespace erobot::cli
