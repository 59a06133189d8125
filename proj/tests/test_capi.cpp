#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <string>

#include "qcl/qcl.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  qcl_free_string(s);
  return out;
}

}  // namespace

TEST_CASE("session lifecycle and error codes") {
  CHECK(std::string(qcl_version()) == "1.0.0");
  qcl_session* s = nullptr;
  CHECK(qcl_session_create(R"({"n": 4})", &s) == QCL_ERR_CONFIG);
  CHECK(s == nullptr);
  CHECK(std::string(qcl_last_error()).find("n >= 5") != std::string::npos);
  CHECK(qcl_session_create("not json", &s) == QCL_ERR_CONFIG);
  CHECK(qcl_session_create("{}", nullptr) == QCL_ERR_ARGUMENT);

  REQUIRE(qcl_session_create(R"({"samples": 20})", &s) == QCL_OK);
  CHECK(std::string(qcl_last_error()).empty());
  char* out = nullptr;
  int passed = -1;
  CHECK(qcl_verify(nullptr, "core", nullptr, 0, &out, &passed) == QCL_ERR_ARGUMENT);
  CHECK(qcl_verify(s, "energy", nullptr, 0, &out, &passed) == QCL_ERR_CONFIG);
  CHECK(out == nullptr);
  CHECK(qcl_verify(s, "bogus", nullptr, 0, &out, &passed) == QCL_ERR_CONFIG);
  CHECK(qcl_reduced_energy(s, &out) == QCL_ERR_CONFIG);
  CHECK(qcl_scan(s, "nonsense", 0, 0, &out, &passed) == QCL_ERR_CONFIG);
  qcl_session_destroy(s);
  qcl_session_destroy(nullptr);
}

TEST_CASE("verify through the C API and format conversion") {
  qcl_session* s = nullptr;
  REQUIRE(qcl_session_create(R"({"samples": 20})", &s) == QCL_OK);
  char* raw = nullptr;
  int passed = -1;
  REQUIRE(qcl_verify(s, "core", nullptr, 0, &raw, &passed) == QCL_OK);
  const std::string a = take(raw);
  CHECK(passed == 1);
  REQUIRE(qcl_verify(s, "core", nullptr, 0, &raw, &passed) == QCL_OK);
  CHECK(take(raw) == a);

  const auto j = nlohmann::ordered_json::parse(a);
  CHECK(j["version"] == "1.0.0");
  CHECK(j["command"] == "verify");
  CHECK(j["exit_code"] == 0);
  CHECK(j["config"]["samples"] == 20);
  CHECK_FALSE(j["checks"][0].contains("runtime_s"));

  REQUIRE(qcl_verify(s, "core", nullptr, 1, &raw, &passed) == QCL_OK);
  CHECK(nlohmann::ordered_json::parse(take(raw))["checks"][0].contains("runtime_s"));

  REQUIRE(qcl_verify(s, "core", "bubble-exponent", 0, &raw, &passed) == QCL_OK);
  const std::string faulty = take(raw);
  CHECK(passed == 0);

  char* text = nullptr;
  REQUIRE(qcl_format_report(faulty.c_str(), "text", &text) == QCL_OK);
  const std::string t = take(text);
  CHECK(t.rfind("qcl 1.0.0  verify  fail\nFAIL  bubble.pde_identity", 0) == 0);
  char* json = nullptr;
  REQUIRE(qcl_format_report(a.c_str(), "json", &json) == QCL_OK);
  CHECK(take(json) == a);
  CHECK(qcl_format_report(a.c_str(), "yaml", &json) == QCL_ERR_CONFIG);
  CHECK(qcl_format_report("{", "json", &json) == QCL_ERR_CONFIG);
  qcl_session_destroy(s);
}
