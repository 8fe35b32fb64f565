#include "cli/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace erobot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string field, const std::string& path, int line_no, bool allow_weight_tag) {
  field = trim(field);
  if (allow_weight_tag && field.rfind("w:", 0) == 0) field = trim(field.substr(2));
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": cannot parse '" + field +
                                "' as a number");
  }
  return v;
}

std::vector<std::vector<double>> read_rows(const std::string& path, bool weighted) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!t.empty() && t.back() == ',') fields.emplace_back();
    std::vector<double> row;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      row.push_back(parse_number(fields[k], path, line_no, weighted && k + 1 == fields.size()));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(rows.front().size()) + " columns, found " +
                                  std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("'" + path + "' contains no data rows");
  return rows;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

CloudCsv read_cloud_csv(const std::string& path, bool weighted) {
  const Matrix m = to_matrix(read_rows(path, weighted));
  CloudCsv out;
  if (!weighted) {
    out.points = m;
    return out;
  }
  if (m.cols() < 2) {
    throw std::invalid_argument("'" + path + "': weighted CSV needs coordinates plus a weight column");
  }
  out.points = m.leftCols(m.cols() - 1);
  out.weights = m.col(m.cols() - 1);
  return out;
}

Matrix read_matrix_csv(const std::string& path) { return to_matrix(read_rows(path, false)); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

void write_csv(std::ostream& out, const Meta& meta, const std::vector<std::string>& header,
               const Matrix& rows) {
  for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  if (!header.empty()) out << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_double(rows(i, j));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Meta& meta,
                    const std::vector<std::string>& header, const Matrix& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, meta, header, rows);
}

}  // namespace erobot::cli
