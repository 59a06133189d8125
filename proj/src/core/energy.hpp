#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvature.hpp"
#include "integrands.hpp"
#include "linsolve.hpp"
#include "perturbation.hpp"
#include "quadrature.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Reduced energy F(xi, lambda)

constexpr int kEnergyTerms = kQuadTerms + 1;
// Names of the nine quadratic terms followed by "gamma_zbar".
const char* energy_term_name(int k);

struct EnergyOptions {
  GridSpec grid;
  // Estimate the discretization error of the Gamma-bar z-bar term with a second solve on half the nodes.
  bool z_error_estimate = true;
};

struct ReducedEnergyResult {
  int n = 0;
  Point xi;
  double lambda = 1.0, tau = 0.0;
  // Coefficient times integral, in the order of energy_term_name.
  std::array<double, kEnergyTerms> terms{};
  double value = 0;
  // Rounding bound of the closed-form integrals plus the z-bar discretization estimate.
  double error_bound = 0;
  double z_error = 0;
  // Most slowly decaying radial power among the quadratic integrands (volume factor r^(n-1) excluded).
  double slowest_power = 0;
  double z_galerkin_residual = 0;
  double z_constraint_residual = 0;
};

// The nine quadratic integrals are evaluated in closed form and pass the integrability gate only
// for n >= 25; the last term uses the linearized solution z-bar at (xi, lambda).
ReducedEnergyResult reduced_energy(const WeylTensor& W, double tau, const Point& xi, double lambda,
                                   const EnergyOptions& opt = {});

struct ProbeOptions {
  // Finite-difference step in the xi directions.
  double step_xi = 0.05;
  // Step in lambda relative to lambda = 1.
  double step_lambda = 1e-3;
  // Gradient entries below this, relative to the largest energy term, count as zero.
  double gradient_tol = 1e-8;
  // Eigenvalues within this, relative to the largest energy term, make the classification inconclusive.
  double eigen_tol = 0.0;
  EnergyOptions energy;
};

// Central-difference gradient and Hessian of F at (0, 1). F depends on the part of xi outside
// supp W only through its norm, so the variables are the supp W coordinates, one representative
// orthogonal coordinate (Hessian block c I of size n - |supp W|) and lambda.
struct ProbeResult {
  int n = 0;
  double tau = 0;
  double F0 = 0;
  double F0_error = 0;
  std::vector<std::string> variables;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  // Eigenvalues of the reduced Hessian with their multiplicity in the full (n+1)-dimensional Hessian.
  std::vector<double> eigenvalues;
  std::vector<int> multiplicity;
  double xi_gradient_norm = 0;
  double lambda_gradient = 0;
  std::string classification;
  int evaluations = 0;
  double step_xi = 0, step_lambda = 0;
};
ProbeResult min_probe(const WeylTensor& W, double tau, const ProbeOptions& opt = {});

// The probe at the given steps and at half the steps; relative Frobenius change of the Hessian.
struct ProbeStability {
  ProbeResult coarse, fine;
  double hessian_change = 0;
};
ProbeStability min_probe_stability(const WeylTensor& W, double tau, const ProbeOptions& opt = {});

// ---------------------------------------------------------------------------
// Radial test functions and the stereographic identity

// Radial function about a center with value and first two radial derivatives.
struct RadialField {
  Point center;
  std::function<std::array<double, 3>(double r)> eval;
  // |u| = O(r^-decay) at infinity (ignored when support > 0).
  double decay = 0;
  // Support radius for compactly supported fields (0 otherwise).
  double support = 0;
};

RadialField radial_bubble(const Dim& dim, const Bubble& b);
// (1 - |x - c|^2 / R^2)^k on B_R(c), zero outside.
RadialField radial_bump(const Point& c, double R, int k);
// c * u.
RadialField scaled(const RadialField& u, double c);

struct StereographicResult {
  // int_(R^n) (Delta u)^2.
  double flat = 0;
  // int_(S^n) (Delta v)^2 + ((n^2 - 2n - 4)/2) |grad v|^2 + (n(n-4)(n^2-4)/16) v^2, v = (u / w_0) o sigma.
  double sphere = 0;
  double flat_error = 0, sphere_error = 0;
  double relative_gap = 0;
};
// The flat side uses the Euclidean radial Laplacian; the sphere side the zonal Laplacian in the
// polar angle from the north pole. u must be centered at the origin.
StereographicResult stereographic_energy(int n, const RadialField& u, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Spectral bound on the round sphere

// Polynomial on R^(n+1), restricted to S^n. Keys are exponent vectors of length n + 1.
struct SpherePoly {
  int N = 0;
  std::vector<std::pair<std::vector<int>, double>> terms;
};

struct SpectralBoundResult {
  double lhs = 0;  // quadratic form of the stereographic identity
  double rhs = 0;  // (lambda_2^2 + ((n^2-2n-4)/2) lambda_2 + n(n-4)(n^2-4)/16) int v^2
  double margin = 0;
  double l2 = 0;   // int v^2 = int (2/(1+|y|^2))^4 u^2
  // Relative projections on the constant and the coordinate functions.
  double projection = 0;
  bool precondition_ok = false;
  // Flat-side variants with the two printed prefactors:
  //   ((n-2)/(n+6)) int (Delta u)^2 - ((n+4)/(n-4)) d int (2/(1+|y|^2))^4 u^2
  //   ((n+4)/(n-4)) d int (2/(1+|y|^2))^4 u^2 - ((n-6)/(n-2)) int (Delta u)^2
  double variant_a = 0, variant_b = 0;
};
SpectralBoundResult spectral_bound_check(int n, const SpherePoly& v);

// Random harmonic polynomials on R^(n+1): trace-free quadratic form and a cubic with sparse support.
SpherePoly random_harmonic(int n, int degree, std::uint64_t seed, int cubic_terms = 12);
SpherePoly operator+(const SpherePoly& a, const SpherePoly& b);
SpherePoly operator*(double c, const SpherePoly& a);

// ---------------------------------------------------------------------------
// Residual norms of glued bubbles

enum class ResidualMode { Raw, GammaCorrected };
enum class ResidualRegion { Support, Cores };

struct ResidualOptions {
  LpOptions lp;
  ResidualMode mode = ResidualMode::Raw;
  // Support: union of B_(2 r_i)(xi_i). Cores: union of B_(rho_t)(y_t) (requires a perturbation spec).
  ResidualRegion region = ResidualRegion::Support;
  // The integrand is radial about each ball center (evaluated along one ray).
  bool radial = false;
};

struct ResidualNormResult {
  double norm = 0, error = 0;
  double p = 0;
  std::string region;
  // Integral of |residual|^p over each ball.
  std::vector<double> ball_powers;
};

// || P_g W - d W^((n+4)/(n-4)) (+ sum_t eta_t Gamma_t) ||_(L^(2n/(n+4))). h = null is the flat metric;
// gamma-corrected mode and the core region need spec (one site per bubble).
ResidualNormResult multibubble_residual_norm(int n, const MultiBubbleConfig& cfg,
                                             std::shared_ptr<const TensorField> h,
                                             const PerturbationSpec* spec, const ResidualOptions& opt);

// Sum over balls of the per-ball |residual|^p computed with that ball's bubble alone.
double residual_power_separate(int n, const MultiBubbleConfig& cfg, std::shared_ptr<const TensorField> h,
                               const ResidualOptions& opt);

// h_ij(x) = A exp(-|z|^2/(2 s^2)) (z_i z_j - |z|^2 delta_ij / n) / s^2, z = x - c.
class EquivariantBump : public TensorField {
 public:
  EquivariantBump(int n, Point c, double s, double amplitude);
  int dim() const override { return n_; }
  JetMatrix jets(const Point& x, int degree) const override;

 private:
  int n_;
  Point c_;
  double s_, amp_;
};

// c * h.
class ScaledField : public TensorField {
 public:
  ScaledField(std::shared_ptr<const TensorField> h, double c) : h_(std::move(h)), c_(c) {}
  int dim() const override { return h_->dim(); }
  JetMatrix jets(const Point& x, int degree) const override;

 private:
  std::shared_ptr<const TensorField> h_;
  double c_;
};

struct ResidualSweep {
  std::string variable;
  std::vector<double> params, norms, errors;
  double slope = 0;
};
// Raw residual norms for h = alpha h0 over the support.
ResidualSweep residual_alpha_sweep(int n, const MultiBubbleConfig& cfg, std::shared_ptr<const TensorField> h0,
                                   const std::vector<double>& alphas, const ResidualOptions& opt);
// Gamma-corrected residual over the site cores for the model perturbation with mu = mus[i] at every site.
ResidualSweep residual_mu_sweep(const PerturbationSpec& spec, const std::vector<Point>& xi,
                                const std::vector<double>& eps, const std::vector<double>& mus,
                                const ResidualOptions& opt);

// ---------------------------------------------------------------------------
// Normalized total energy

// (2/(n-4)) ||u||_(L^(2n/(n-4))(g))^-2 <P_g u, u> for a radial u, on the flat metric or on
// g = w^(4/(n-4)) delta for a bubble w centered at the same point.
struct TotalEnergyResult {
  double value = 0;
  double pairing = 0;  // <P_g u, u>
  double norm = 0;     // ||u||_(L^(2n/(n-4))(g))
};
TotalEnergyResult total_energy(int n, const RadialField& u, const std::optional<Bubble>& background = std::nullopt,
                               double tol = 1e-11);

}  // namespace qcl
