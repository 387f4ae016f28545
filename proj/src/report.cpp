#include "spldsos/report.hpp"

#include <charconv>
#include <sstream>

namespace spldsos {

namespace {

std::string clean(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == ';') ch = '_';
  return s;
}

std::string opt_int(int v) { return v < 0 ? "" : std::to_string(v); }

int parse_int(const std::string& s) { return s.empty() ? -1 : std::stoi(s); }

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("report csv: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else
      cur += ch;
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json ReportRow::json() const {
  return {{"label", label}, {"mode", mode}, {"d0", d0}, {"r", r}, {"d", d}, {"k", k}, {"opt", opt}, {"opt_primal", opt_primal},
          {"status", status}, {"time_build_ms", time_build_ms}, {"time_solve_ms", time_solve_ms}, {"max_ms", max_ms},
          {"max_rnk", max_rnk}, {"point", point}};
}

ReportRow report_row_from_json(const nlohmann::json& j) {
  ReportRow r;
  r.label = j.at("label").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.d0 = j.at("d0").get<int>();
  r.r = j.at("r").get<int>();
  r.d = j.at("d").get<int>();
  r.k = j.at("k").get<int>();
  r.opt = j.at("opt").get<double>();
  r.opt_primal = j.at("opt_primal").get<double>();
  r.status = j.at("status").get<std::string>();
  r.time_build_ms = j.at("time_build_ms").get<double>();
  r.time_solve_ms = j.at("time_solve_ms").get<double>();
  r.max_ms = j.at("max_ms").get<int>();
  r.max_rnk = j.at("max_rnk").get<int>();
  r.point = j.at("point").get<std::vector<double>>();
  return r;
}

ReportRow report_row(const std::string& label, const RelaxConfig& cfg, const RelaxationResult& res) {
  ReportRow row;
  row.label = clean(label);
  if (cfg.mode == RelaxMode::Spld) {
    row.mode = "spld";
    row.d0 = cfg.plan.d0();
    row.r = cfg.plan.r;
  } else {
    row.mode = "bsos";
    row.d = cfg.bsos_d;
  }
  row.k = res.k;
  row.opt = res.value;
  row.opt_primal = res.value_primal;
  row.status = to_string(res.dual_status);
  row.time_build_ms = res.build_ms;
  row.time_solve_ms = res.solve_ms;
  row.max_ms = res.max_ms;
  row.max_rnk = res.cert.max_rnk;
  if (res.cert.extracted_point) row.point.assign(res.cert.extracted_point->data(), res.cert.extracted_point->data() + res.cert.extracted_point->size());
  return row;
}

std::string csv_header() { return "label,mode,d0,r,d,k,opt,opt_primal,status,time_build_ms,time_solve_ms,max_ms,max_rnk,point"; }

std::string to_csv(const ReportRow& r) {
  std::ostringstream os;
  os << clean(r.label) << ',' << clean(r.mode) << ',' << opt_int(r.d0) << ',' << opt_int(r.r) << ',' << opt_int(r.d) << ','
     << opt_int(r.k) << ',' << format_double(r.opt) << ',' << format_double(r.opt_primal) << ',' << clean(r.status) << ','
     << format_double(r.time_build_ms) << ',' << format_double(r.time_solve_ms) << ',' << r.max_ms << ',' << opt_int(r.max_rnk)
     << ',';
  for (size_t i = 0; i < r.point.size(); ++i) os << (i ? ";" : "") << format_double(r.point[i]);
  return os.str();
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string s = csv_header() + "\n";
  for (const auto& r : rows) s += to_csv(r) + "\n";
  return s;
}

std::vector<ReportRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw std::invalid_argument("report csv: missing or unexpected header");
  std::vector<ReportRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 14) throw std::invalid_argument("report csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    ReportRow r;
    r.label = f[0];
    r.mode = f[1];
    r.d0 = parse_int(f[2]);
    r.r = parse_int(f[3]);
    r.d = parse_int(f[4]);
    r.k = parse_int(f[5]);
    r.opt = parse_double(f[6]);
    r.opt_primal = parse_double(f[7]);
    r.status = f[8];
    r.time_build_ms = parse_double(f[9]);
    r.time_solve_ms = parse_double(f[10]);
    r.max_ms = std::stoi(f[11]);
    r.max_rnk = parse_int(f[12]);
    if (!f[13].empty())
      for (const auto& v : split(f[13], ';')) r.point.push_back(parse_double(v));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace spldsos
