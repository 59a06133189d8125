#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qcl/qcl.h"

namespace {

constexpr int kExitPass = 0, kExitFail = 1, kExitUsage = 2;

struct Options {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  std::string suite = "all";
  std::string scan;
  std::string csv_path;
  std::string fault;
  bool assert_targets = false;
  bool timing = false;
  std::optional<int> n;
  std::optional<double> tau;
  std::optional<long long> seed;
};

int status_exit(qcl_status st) {
  switch (st) {
    case QCL_OK:
      return kExitPass;
    case QCL_ERR_CONFIG:
    case QCL_ERR_DOMAIN:
    case QCL_ERR_ARGUMENT:
      return kExitUsage;
    default:
      return kExitFail;
  }
}

int report_error(qcl_status st) {
  std::fprintf(stderr, "qcl: error: %s\n", qcl_last_error());
  return status_exit(st);
}

bool write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return true;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  return bool(f);
}

// Configuration text with command-line overrides applied to the top-level scalars.
std::optional<std::string> load_config(const Options& o) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f) {
      std::fprintf(stderr, "qcl: error: cannot read config '%s'\n", o.config_path.c_str());
      return std::nullopt;
    }
    try {
      j = nlohmann::ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      std::fprintf(stderr, "qcl: error: invalid JSON in '%s': %s\n", o.config_path.c_str(), e.what());
      return std::nullopt;
    }
  }
  if (!j.is_object()) {
    std::fprintf(stderr, "qcl: error: config must be a JSON object\n");
    return std::nullopt;
  }
  if (o.n) j["n"] = *o.n;
  if (o.tau) j["tau"] = *o.tau;
  if (o.seed) j["seed"] = *o.seed;
  return j.dump();
}

std::string take(char* s) {
  std::string out = s ? s : "";
  qcl_free_string(s);
  return out;
}

int emit(const Options& o, const std::string& report, int code) {
  char* text = nullptr;
  if (qcl_status st = qcl_format_report(report.c_str(), o.format.c_str(), &text)) return report_error(st);
  if (!write_text(o.out_path, take(text))) {
    std::fprintf(stderr, "qcl: error: cannot write '%s'\n", o.out_path.c_str());
    return kExitUsage;
  }
  return code;
}

int run(const std::string& command, const Options& o) {
  if (o.format != "json" && o.format != "csv" && o.format != "text") {
    std::fprintf(stderr, "qcl: error: unsupported format '%s' (expected json, csv or text)\n", o.format.c_str());
    return kExitUsage;
  }
  const auto cfg = load_config(o);
  if (!cfg) return kExitUsage;
  qcl_session* s = nullptr;
  if (qcl_status st = qcl_session_create(cfg->c_str(), &s)) return report_error(st);
  struct Guard {
    qcl_session* s;
    ~Guard() { qcl_session_destroy(s); }
  } guard{s};

  char* raw = nullptr;
  int passed = 1;
  qcl_status st = QCL_OK;
  if (command == "verify")
    st = qcl_verify(s, o.suite.c_str(), o.fault.empty() ? nullptr : o.fault.c_str(), o.timing, &raw, &passed);
  else if (command == "scan")
    st = qcl_scan(s, o.scan.c_str(), o.assert_targets, o.timing, &raw, &passed);
  else if (command == "curvature")
    st = qcl_curvature(s, &raw);
  else if (command == "solve-z")
    st = qcl_solve_z(s, &raw, &passed);
  else
    st = qcl_reduced_energy(s, &raw);
  if (st != QCL_OK) return report_error(st);
  const std::string report = take(raw);

  if (command == "scan" && !o.csv_path.empty()) {
    char* csv = nullptr;
    if (qcl_status fs = qcl_format_report(report.c_str(), "csv", &csv)) return report_error(fs);
    if (!write_text(o.csv_path, take(csv))) {
      std::fprintf(stderr, "qcl: error: cannot write '%s'\n", o.csv_path.c_str());
      return kExitUsage;
    }
  }
  return emit(o, report, passed ? kExitPass : kExitFail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification toolkit for Q-curvature blow-up constructions"};
  app.set_version_flag("--version", std::string(qcl_version()));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_path, "Write the report to this path instead of stdout");
    sub->add_option("--format", o.format, "Report format: json, csv or text");
    sub->add_option("--n", o.n, "Override the dimension");
    sub->add_option("--tau", o.tau, "Override tau");
    sub->add_option("--seed", o.seed, "Override the sampling seed");
  };

  auto* verify = app.add_subcommand("verify", "Run verification suites");
  common(verify);
  verify->add_option("--suite", o.suite, "core, curvature, linsolve, energy or all");
  verify->add_option("--inject-fault", o.fault, "Test hook: bubble-exponent");
  verify->add_flag("--timing", o.timing, "Include per-check runtimes");

  auto* scan = app.add_subcommand("scan", "Run a parameter sweep");
  common(scan);
  scan->add_option("--scan", o.scan, "alpha-residual, mu-residual or F-landscape")->required();
  scan->add_option("--csv", o.csv_path, "Also write the sweep rows as CSV to this path");
  scan->add_flag("--assert", o.assert_targets, "Fail when a fitted slope misses its target");
  scan->add_flag("--timing", o.timing, "Include per-check runtimes");

  auto* curv = app.add_subcommand("curvature", "Q, R and P_g w at configured points");
  common(curv);
  auto* solve = app.add_subcommand("solve-z", "One linearized solve");
  common(solve);
  auto* energy = app.add_subcommand("reduced-energy", "One reduced-energy evaluation");
  common(energy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  for (auto* sub : {verify, scan, curv, solve, energy})
    if (sub->parsed()) return run(sub->get_name(), o);
  return kExitUsage;
}
