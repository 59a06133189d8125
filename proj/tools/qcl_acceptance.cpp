#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qcl/qcl.h"

namespace {

using json = nlohmann::ordered_json;

struct Criterion {
  int number;
  const char* title;
  std::vector<const char*> checks;
};

const std::vector<Criterion> kCriteria = {
    {1, "bubble PDE identity", {"bubble.pde_identity"}},
    {2, "bubble mass", {"bubble.mass"}},
    {3, "orthogonality and beta structure", {"bubble.phi_orthogonality", "family.beta_structure"}},
    {4, "sphere Q-curvature", {"curvature.sphere_q_analytic", "curvature.sphere_q_fd"}},
    {5, "stereographic identity", {"energy.stereographic"}},
    {6, "spectral bound", {"energy.spectral_equality", "energy.spectral_margin"}},
    {7, "residual scaling", {"energy.residual_alpha_slope", "energy.residual_mu_slope"}},
    {8,
     "linearized solver",
     {"linsolve.manufactured", "linsolve.multipliers", "linsolve.constraints", "linsolve.decay_slope",
      "linsolve.scaling_law"}},
    {9,
     "reduced energy",
     {"energy.convergence_gate", "energy.term_sum", "energy.parity", "energy.probe_xi_gradient",
      "energy.probe_report"}},
    {10, "parameter arithmetic", {"perturbation.final_sequence_exact", "perturbation.final_sequence_monotone"}},
};

struct Run {
  std::string report;
  double seconds = 0;
  bool ok = false;
};

Run verify_all(const std::string& config) {
  Run r;
  qcl_session* s = nullptr;
  if (qcl_session_create(config.c_str(), &s) != QCL_OK) {
    std::fprintf(stderr, "config error: %s\n", qcl_last_error());
    return r;
  }
  const auto t0 = std::chrono::steady_clock::now();
  char* out = nullptr;
  int passed = 0;
  const qcl_status st = qcl_verify(s, "all", nullptr, 0, &out, &passed);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  qcl_session_destroy(s);
  if (st != QCL_OK) {
    std::fprintf(stderr, "verify failed: %s\n", qcl_last_error());
    return r;
  }
  r.report = out;
  qcl_free_string(out);
  r.ok = true;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::string config = R"({"tau": 1.0})";
  if (argc > 1) {
    std::ifstream f(argv[1]);
    if (!f) {
      std::fprintf(stderr, "cannot read %s\n", argv[1]);
      return 2;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    config = ss.str();
  }

  const Run first = verify_all(config);
  if (!first.ok) return 2;
  const json report = json::parse(first.report);
  std::map<std::string, json> by_id;
  for (const auto& c : report["checks"]) by_id[c["id"].get<std::string>()] = c;

  int failed = 0;
  for (const auto& cr : kCriteria) {
    bool pass = true;
    std::string detail;
    for (const char* id : cr.checks) {
      const auto it = by_id.find(id);
      const std::string st = it == by_id.end() ? "missing" : it->second["status"].get<std::string>();
      if (st == "fail" || st == "missing") {
        pass = false;
        detail += std::string(detail.empty() ? "" : ", ") + id + " " + st;
      }
    }
    failed += !pass;
    std::printf("%s  criterion %2d  %s%s%s\n", pass ? "PASS" : "FAIL", cr.number, cr.title,
                detail.empty() ? "" : ": ", detail.c_str());
  }

  const Run second = verify_all(config);
  const bool same = second.ok && second.report == first.report;
  failed += !same;
  std::printf("%s  criterion 11  determinism: %s (%zu bytes, runs %.1f s and %.1f s)\n", same ? "PASS" : "FAIL",
              same ? "byte-identical reports" : "reports differ", first.report.size(), first.seconds,
              second.seconds);
  std::printf("%d of 11 criteria passed\n", 11 - failed);
  return failed ? 1 : 0;
}
