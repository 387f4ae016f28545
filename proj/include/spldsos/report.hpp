#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spldsos/bsos.hpp"

namespace spldsos {

// One row of a ladder / compare table. Unused integer columns are -1.
struct ReportRow {
  std::string label;
  std::string mode;  // spld | bsos | exact
  int d0 = -1, r = -1, d = -1, k = -1;
  double opt = 0, opt_primal = 0;
  std::string status;
  double time_build_ms = 0, time_solve_ms = 0;
  int max_ms = 0, max_rnk = -1;
  std::vector<double> point;

  bool operator==(const ReportRow& o) const = default;
  nlohmann::json json() const;
};

ReportRow report_row(const std::string& label, const RelaxConfig& cfg, const RelaxationResult& r);
ReportRow report_row_from_json(const nlohmann::json& j);

std::string csv_header();
std::string to_csv(const ReportRow& row);
std::string to_csv(const std::vector<ReportRow>& rows);  // header + rows
std::vector<ReportRow> rows_from_csv(const std::string& text);

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace spldsos
