#include "qcl/qcl.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "runner.hpp"

struct qcl_session {
  qcl::RunConfig config;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <class F>
qcl_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return QCL_OK;
  } catch (const qcl::ConfigError& e) {
    g_last_error = e.what();
    return QCL_ERR_CONFIG;
  } catch (const qcl::DomainError& e) {
    g_last_error = e.what();
    return QCL_ERR_DOMAIN;
  } catch (const qcl::NumericError& e) {
    g_last_error = e.what();
    return QCL_ERR_NUMERIC;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return QCL_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QCL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QCL_ERR_INTERNAL;
  }
}

qcl_status finish(const qcl::Report& r, bool timing, char** out, int* all_passed) {
  *out = dup_string(qcl::dump_json(qcl::report_json(r, timing)));
  if (!*out) throw std::bad_alloc();
  if (all_passed) *all_passed = r.exit_code() == 0;
  return QCL_OK;
}

bool bad_args(const void* a, const void* b) {
  if (a && b) return false;
  g_last_error = "null argument";
  return true;
}

}  // namespace

extern "C" {

const char* qcl_version(void) { return qcl::kVersion; }

const char* qcl_last_error(void) { return g_last_error.c_str(); }

qcl_status qcl_session_create(const char* config_json, qcl_session** out) {
  if (!out) return g_last_error = "null argument", QCL_ERR_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<qcl_session>();
    s->config = qcl::parse_config_text(config_json && *config_json ? config_json : "{}");
    *out = s.release();
  });
}

void qcl_session_destroy(qcl_session* s) { delete s; }

qcl_status qcl_verify(qcl_session* s, const char* suite, const char* fault, int timing, char** report_json,
                      int* all_passed) {
  if (bad_args(s, report_json)) return QCL_ERR_ARGUMENT;
  *report_json = nullptr;
  return guarded([&] {
    qcl::RunOptions opt;
    if (fault) opt.fault = fault;
    finish(qcl::run_verify(s->config, suite ? suite : "all", opt), timing, report_json, all_passed);
  });
}

qcl_status qcl_scan(qcl_session* s, const char* scan, int assert_targets, int timing, char** report_json,
                    int* all_passed) {
  if (bad_args(s, report_json) || bad_args(scan, scan)) return QCL_ERR_ARGUMENT;
  *report_json = nullptr;
  return guarded(
      [&] { finish(qcl::run_scan(s->config, scan, assert_targets != 0), timing, report_json, all_passed); });
}

qcl_status qcl_curvature(qcl_session* s, char** report_json) {
  if (bad_args(s, report_json)) return QCL_ERR_ARGUMENT;
  *report_json = nullptr;
  return guarded([&] { finish(qcl::run_curvature(s->config), false, report_json, nullptr); });
}

qcl_status qcl_solve_z(qcl_session* s, char** report_json, int* all_passed) {
  if (bad_args(s, report_json)) return QCL_ERR_ARGUMENT;
  *report_json = nullptr;
  return guarded([&] { finish(qcl::run_solve_z(s->config), false, report_json, all_passed); });
}

qcl_status qcl_reduced_energy(qcl_session* s, char** report_json) {
  if (bad_args(s, report_json)) return QCL_ERR_ARGUMENT;
  *report_json = nullptr;
  return guarded([&] { finish(qcl::run_reduced_energy(s->config), false, report_json, nullptr); });
}

qcl_status qcl_format_report(const char* report_json, const char* format, char** out) {
  if (bad_args(report_json, out) || bad_args(format, format)) return QCL_ERR_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    const auto j = qcl::ojson::parse(report_json);
    *out = dup_string(qcl::emit(j, format));
    if (!*out) throw std::bad_alloc();
  });
}

void qcl_free_string(char* s) { std::free(s); }

}  // extern "C"
