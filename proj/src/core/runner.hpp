#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace qcl {

struct RunOptions {
  // Test hook: "bubble-exponent" perturbs d(n) inside the bubble PDE check.
  std::string fault;
};

const std::vector<std::string>& suite_names();  // core, curvature, linsolve, energy
// Runs the named suite ("all" runs every suite in order).
Report run_verify(const RunConfig& c, const std::string& suite, const RunOptions& opt = {});

const std::vector<std::string>& scan_names();  // alpha-residual, mu-residual, F-landscape
// One row per grid point in result.rows, fitted slope or probe summary in result.summary.
// With assert_targets the scaling targets become checks.
Report run_scan(const RunConfig& c, const std::string& scan, bool assert_targets);

// Q, R and P_g w at the configured points (n <= 10).
Report run_curvature(const RunConfig& c);
// One linearized solve for site 0 and the configured bubble.
Report run_solve_z(const RunConfig& c);
// One reduced-energy evaluation at the configured (xi, lambda).
Report run_reduced_energy(const RunConfig& c);

// Shared experiment setups (used by the verification suites and the scans).
ResidualSweep alpha_residual_sweep(const AlphaScanConfig& s, const LpOptions& lp);
ResidualSweep mu_residual_sweep(const RunConfig& c, ResidualMode mode);
// Bubble used by the linearized-solver checks: site 0 with a generic offset of its scale.
Bubble linsolve_test_bubble(const RunConfig& c);

}  // namespace qcl
