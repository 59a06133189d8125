#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace qcl {

constexpr const char* kVersion = "1.0.0";

enum class CheckStatus { Pass, Fail, ReportOnly };
const char* status_name(CheckStatus s);

struct Check {
  std::string id;
  std::string suite;
  CheckStatus status = CheckStatus::ReportOnly;
  ojson measured = ojson::object();
  ojson tolerance = ojson::object();
  std::string note;
  double runtime_s = 0;
};

struct Report {
  std::string command;
  ojson config = ojson::object();
  std::vector<Check> checks;
  // Command-specific payload (scan rows and summary, solver results, ...).
  ojson result = ojson::object();
  // 0 when every asserted check passes, 1 otherwise.
  int exit_code() const;
};

// Canonical JSON form. Runtimes are included only when requested so that reports are reproducible.
ojson report_json(const Report& r, bool timing = false);

// JSON with numbers written to 17 significant digits and two-space indentation.
std::string dump_json(const ojson& j);
// Flat projection: scan reports give their rows, other reports one line per numeric measured value.
std::string emit_csv(const ojson& report);
// Human-readable summary with failing checks first.
std::string emit_text(const ojson& report);
// Dispatch on "json", "csv" or "text"; other names raise ConfigError.
std::string emit(const ojson& report, const std::string& format);

// 17-significant-digit representation used by every emitter.
std::string format_number(double v);

}  // namespace qcl
