#include "gilevel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gilevel {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double* out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' ||
                         end[-1] == '\r')) --end;
  if (begin == end) return false;
  const auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

Eigen::MatrixXd parse_series(std::istream& in, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  int ncols = -1;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> fields = split_csv(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], &row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_content) {  // header row
        first_content = false;
        continue;
      }
      throw ParseError(origin + ": line " + std::to_string(lineno) +
                       ": non-numeric value");
    }
    first_content = false;
    if (ncols < 0) {
      ncols = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != ncols) {
      throw ParseError(origin + ": line " + std::to_string(lineno) +
                       ": expected " + std::to_string(ncols) +
                       " fields, got " + std::to_string(row.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!std::isfinite(row[i])) {
        throw DataError(origin + ": non-finite value at row " +
                        std::to_string(rows.size() + 1) + ", col " +
                        std::to_string(i + 1));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(origin + ": no data rows");
  Eigen::MatrixXd data(rows.size(), ncols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < ncols; ++c) data(r, c) = rows[r][c];
  }
  return data;
}

Eigen::MatrixXd read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_series: cannot open " + path);
  return parse_series(in, path);
}

void write_series(std::ostream& out, const Eigen::MatrixXd& data) {
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(data(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  return read_series(path);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_series(out, m);
}

void write_vech_rows(std::ostream& out, const std::vector<SpdMatrix>& path) {
  for (const auto& m : path) {
    const Eigen::VectorXd v = vech(m.mat());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(v(i));
    }
    out << '\n';
  }
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_report_csv(std::ostream& out, const Report& report) {
  out << "# schema=" << report.schema << '\n';
  for (const auto& [key, value] : report.config) {
    out << "# " << key << '=' << value << '\n';
  }
  for (const auto& [key, value] : report.summary) {
    out << "# summary." << key << '=' << value << '\n';
  }
  if (report.columns.empty()) return;
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    if (i > 0) out << ',';
    out << report.columns[i];
  }
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

void write_report_json(std::ostream& out, const Report& report) {
  nlohmann::ordered_json j;
  j["schema"] = report.schema;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.config) config[key] = value;
  j["config"] = config;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.summary) summary[key] = value;
  j["summary"] = summary;
  j["columns"] = report.columns;
  j["rows"] = report.rows;
  out << j.dump(2) << '\n';
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_config_file: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       ": expected key=value");
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

}  // namespace gilevel
