#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "energy.hpp"
#include "linsolve.hpp"
#include "perturbation.hpp"
#include "quadrature.hpp"

namespace qcl {

using ojson = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlphaScanConfig {
  int n = 8;
  double eps = 1e-3;
  double r = 0.9;
  double width = 1e-3;  // Gaussian width of the equivariant bump
  std::vector<double> alphas{1e-3, 1e-2, 1e-1};
};

struct MuScanConfig {
  int n = 5;
  std::vector<double> mus{0.1, 0.2, 0.4};
  // Bubble offset from the site center, in units of the site lambda (generic direction).
  double offset = 0.15;
  int angular_order = 2;
};

struct LandscapeConfig {
  std::vector<double> xi1{-0.1, -0.05, 0.0, 0.05, 0.1};
  std::vector<double> lambda{0.9, 0.95, 1.0, 1.05, 1.1};
};

struct CurvatureQuery {
  // "sphere": g = w^(4/(n-4)) delta for the bubble; "perturbed": g = exp(h) for the model perturbation.
  std::string metric = "perturbed";
  std::vector<Point> points;
};

struct RunConfig {
  int n = 25;
  WeylTensor W;
  ojson weyl;  // as given: "default", "zero" or seed component records
  std::optional<double> tau;
  std::vector<Site> sites;
  double R = 2.0;
  double alpha = 0.6;
  QuadSpec quad;
  GridSpec grid;
  std::uint64_t seed = 20240611;
  int samples = 1000;
  // Bubble for solve-z, reduced-energy and curvature queries.
  Point xi;
  double lambda = 1.0;
  ProbeOptions probe;
  AlphaScanConfig alpha_scan;
  MuScanConfig mu_scan;
  LandscapeConfig landscape;
  CurvatureQuery curvature;

  PerturbationSpec spec() const;
  double require_tau(const std::string& what) const;
};

// Parses and validates a configuration; unknown keys and invalid values raise ConfigError.
RunConfig parse_config(const ojson& j);
RunConfig parse_config_text(const std::string& text);
// Full configuration with defaults filled in, in canonical key order.
ojson config_echo(const RunConfig& c);

}  // namespace qcl
