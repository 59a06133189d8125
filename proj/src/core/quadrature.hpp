#pragma once

#include <functional>
#include <vector>

#include "bubbles.hpp"
#include "constants.hpp"

namespace qcl {

struct QuadSpec {
  double tol = 1e-10;
  // Absolute error accepted regardless of the relative target.
  double abs_tol = 0.0;
  int max_subdiv = 4000;
  // Scale L of the map r = L s / (1 - s).
  double map_scale = 1.0;
  // Throw NumericError when the tolerance is not met within max_subdiv.
  bool throw_on_failure = true;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  // Integral of |f|, used as the rounding floor for cancelling integrands.
  double l1 = 0.0;
  int subdivisions = 0;
  bool converged = true;
};

QuadResult& operator+=(QuadResult& a, const QuadResult& b);

struct RadialProfile {
  std::function<double(double)> f;
  // f(r) = O(r^-hint) as r -> infinity.
  double hint = 0.0;
};

// Adaptive Gauss-Kronrod (21-point) integration of f over [a, b], optionally
// split at interior breakpoints first. The reported estimate is the best one seen,
// so a larger subdivision budget never increases the error.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadSpec& spec,
                     const std::vector<double>& breaks = {});

// Integral over [0, inf) of f(r) r^(n-1) dr via r = L s/(1-s). Requires hint > n.
QuadResult radial_integrate(const RadialProfile& f, int n, const QuadSpec& spec);
// Integral of f(r) r^(n-1) over [r0, r1] (finite).
QuadResult radial_integrate(const std::function<double(double)>& f, int n, double r0, double r1,
                            const QuadSpec& spec, const std::vector<double>& breaks = {});

// log |S^(n-1)| and |S^(n-1)|.
double log_sphere_area(int n);
double sphere_area(int n);
double ball_volume(int n, double r);

// Integral over S^(n-1) of x^alpha; alpha shorter than n is zero-padded.
double sphere_moment(const std::vector<int>& alpha, int n);
// Integral over S^(n-1) of prod |x_i|^a_i for real a_i > -1.
double sphere_moment_abs(const std::vector<double>& a, int n);

struct PolyRadialTerm {
  std::vector<int> alpha;
  RadialProfile f;
};

// Sum over terms of the integral of x^alpha f(|x|) over R^n.
QuadResult polyradial_integrate(const std::vector<PolyRadialTerm>& terms, int n, const QuadSpec& spec);

// Product rule on S^(n-1): Gauss-Gegenbauer nodes in each polar angle, uniform azimuth.
struct SphereRule {
  int n = 0;
  std::vector<double> nodes;  // row-major, size() * n
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
  const double* node(std::size_t k) const { return nodes.data() + k * n; }
};
// Exact for polynomials of degree <= 2m - 1 in each polar angle cosine.
const SphereRule& sphere_rule(int n, int m);

// Gauss-Jacobi nodes/weights on [-1, 1] for weight (1-t)^a (1+t)^b.
void gauss_jacobi(int m, double a, double b, std::vector<double>& t, std::vector<double>& w);

struct Region {
  enum class Kind { Ball, Annulus, Union, Whole };
  Kind kind = Kind::Ball;
  Point center;
  double r0 = 0.0, r1 = 1.0;
  // Union members (each a Ball).
  std::vector<Region> parts;
  // Decay hint of |f|^p for Kind::Whole.
  double hint = 0.0;
  // Radii (relative to center) where the integrand is not smooth.
  std::vector<double> breaks;

  static Region ball(Point c, double r);
  static Region annulus(Point c, double r0, double r1);
  static Region union_of(std::vector<Region> balls);
  static Region whole(Point c, double hint);
};

struct LpOptions {
  QuadSpec quad;
  int angular_order = 4;
};

using PointFunction = std::function<double(const Point&)>;

// Integral of |f|^p over the region.
QuadResult lp_power(const PointFunction& f, double p, const Region& region, const LpOptions& opt);
// (integral of |f|^p)^(1/p), with the error propagated to first order.
QuadResult lp_norm(const PointFunction& f, double p, const Region& region, const LpOptions& opt);
// Radially symmetric f about the region center: integral of |f(r)|^p over a ball, annulus or R^n.
QuadResult lp_power_radial(const std::function<double(double)>& f, int n, double p, const Region& region,
                           const QuadSpec& spec);

}  // namespace qcl
