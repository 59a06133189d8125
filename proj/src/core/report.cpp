#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace qcl {

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::ReportOnly:
      return "report-only";
  }
  return "?";
}

int Report::exit_code() const {
  for (const auto& c : checks)
    if (c.status == CheckStatus::Fail) return 1;
  return 0;
}

ojson report_json(const Report& r, bool timing) {
  ojson j;
  j["version"] = kVersion;
  j["command"] = r.command;
  j["config"] = r.config;
  int pass = 0, fail = 0, info = 0;
  ojson checks = ojson::array();
  for (const auto& c : r.checks) {
    ojson o;
    o["id"] = c.id;
    o["suite"] = c.suite;
    o["status"] = status_name(c.status);
    o["measured"] = c.measured;
    o["tolerance"] = c.tolerance;
    if (!c.note.empty()) o["note"] = c.note;
    if (timing) o["runtime_s"] = c.runtime_s;
    checks.push_back(o);
    pass += c.status == CheckStatus::Pass;
    fail += c.status == CheckStatus::Fail;
    info += c.status == CheckStatus::ReportOnly;
  }
  if (!r.checks.empty()) j["checks"] = checks;
  if (!r.result.empty()) j["result"] = r.result;
  j["summary"] = {{"pass", pass}, {"fail", fail}, {"report_only", info}};
  j["status"] = r.exit_code() == 0 ? "pass" : "fail";
  j["exit_code"] = r.exit_code();
  return j;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0.0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep the value recognizably floating point.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::string json_string(const std::string& s) { return ojson(s).dump(); }

void dump_rec(const ojson& j, int indent, std::ostringstream& out) {
  const std::string pad(indent, ' '), pad2(indent + 2, ' ');
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out << pad2 << json_string(it.key()) << ": ";
        dump_rec(it.value(), indent + 2, out);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << pad << "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      if (scalar) {
        out << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          dump_rec(j[i], indent, out);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out << pad2;
        dump_rec(j[i], indent + 2, out);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << pad << "]";
      return;
    }
    case ojson::value_t::number_float: {
      const double v = j.get<double>();
      // Non-finite values are not JSON numbers; they are written as strings.
      if (!std::isfinite(v))
        out << json_string(format_number(v));
      else
        out << format_number(v);
      return;
    }
    default:
      out << j.dump();
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string scalar_text(const ojson& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

// Leaves of a JSON value as (path, scalar) pairs.
void flatten(const ojson& v, const std::string& path, std::vector<std::pair<std::string, const ojson*>>& out) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it)
      flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out.push_back({path, &v});
  }
}

}  // namespace

std::string dump_json(const ojson& j) {
  std::ostringstream out;
  dump_rec(j, 0, out);
  out << "\n";
  return out.str();
}

std::string emit_csv(const ojson& report) {
  std::ostringstream out;
  const ojson* rows = nullptr;
  if (report.contains("result") && report["result"].contains("rows")) rows = &report["result"]["rows"];
  if (rows && !rows->empty()) {
    std::vector<std::string> cols;
    for (auto it = (*rows)[0].begin(); it != (*rows)[0].end(); ++it) cols.push_back(it.key());
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(cols[i]);
    out << "\n";
    for (const auto& r : *rows) {
      for (std::size_t i = 0; i < cols.size(); ++i)
        out << (i ? "," : "") << csv_field(r.contains(cols[i]) ? scalar_text(r[cols[i]]) : "");
      out << "\n";
    }
    return out.str();
  }
  out << "check,suite,status,field,value\n";
  if (report.contains("checks"))
    for (const auto& c : report["checks"]) {
      std::vector<std::pair<std::string, const ojson*>> leaves;
      flatten(c["measured"], "", leaves);
      for (const auto& [path, v] : leaves)
        out << csv_field(c["id"].get<std::string>()) << "," << csv_field(c["suite"].get<std::string>()) << ","
            << c["status"].get<std::string>() << "," << csv_field(path) << "," << csv_field(scalar_text(*v)) << "\n";
    }
  if (report.contains("result")) {
    std::vector<std::pair<std::string, const ojson*>> leaves;
    flatten(report["result"], "", leaves);
    for (const auto& [path, v] : leaves)
      out << "result,," << report["status"].get<std::string>() << "," << csv_field(path) << ","
          << csv_field(scalar_text(*v)) << "\n";
  }
  return out.str();
}

std::string emit_text(const ojson& report) {
  std::ostringstream out;
  out << "qcl " << report["version"].get<std::string>() << "  " << report["command"].get<std::string>() << "  "
      << report["status"].get<std::string>() << "\n";
  if (report.contains("checks")) {
    for (const char* want : {"fail", "pass", "report-only"})
      for (const auto& c : report["checks"]) {
        if (c["status"] != want) continue;
        std::string st = want;
        for (auto& ch : st) ch = char(std::toupper(ch));
        out << st << "  " << c["id"].get<std::string>();
        std::vector<std::pair<std::string, const ojson*>> leaves;
        flatten(c["measured"], "", leaves);
        for (const auto& [path, v] : leaves) out << "  " << path << "=" << scalar_text(*v);
        if (c.contains("note")) out << "  (" << c["note"].get<std::string>() << ")";
        out << "\n";
      }
  }
  if (report.contains("result")) {
    std::vector<std::pair<std::string, const ojson*>> leaves;
    flatten(report["result"], "", leaves);
    for (const auto& [path, v] : leaves) out << path << " = " << scalar_text(*v) << "\n";
  }
  const auto& s = report["summary"];
  out << s["pass"].get<int>() << " passed, " << s["fail"].get<int>() << " failed, " << s["report_only"].get<int>()
      << " report-only\n";
  return out.str();
}

std::string emit(const ojson& report, const std::string& format) {
  if (format == "json") return dump_json(report);
  if (format == "csv") return emit_csv(report);
  if (format == "text") return emit_text(report);
  throw ConfigError("unsupported format '" + format + "' (expected json, csv or text)");
}

}  // namespace qcl
