#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gilevel/matrix_ops.hpp"

namespace gilevel {

// Parse error with the offending line recorded in the message.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV series: one row per time point, comma-separated reals, an optional
// single header row (detected by a non-numeric first row). Ragged rows and
// non-finite values are rejected.
Eigen::MatrixXd read_series(const std::string& path);
Eigen::MatrixXd parse_series(std::istream& in, const std::string& origin);
void write_series(std::ostream& out, const Eigen::MatrixXd& data);

// Dense CSV matrix block (no header).
Eigen::MatrixXd read_matrix(const std::string& path);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);

// Covariance sequence as one vech(Sigma_t) row per time point.
void write_vech_rows(std::ostream& out, const std::vector<SpdMatrix>& path);

// Round-trip-safe float formatting (17 significant digits).
std::string format_double(double x);

// Tabular report carrying its fully resolved configuration. The CSV form
// echoes config and summary as leading "# key=value" comment lines; the JSON
// form nests them as objects.
struct Report {
  std::string schema = "gilevel/1";
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_report_csv(std::ostream& out, const Report& report);
void write_report_json(std::ostream& out, const Report& report);

// Flat key=value configuration file; '#' starts a comment, blank lines are
// ignored. Later keys override earlier ones.
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path);

}  // namespace gilevel
