#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bubbles.hpp"
#include "perturbation.hpp"

namespace qcl {

using RadialFn = std::function<double(double)>;

// Radial mesh for the sector solver: r = L s / (1 - s) with uniform nodes in s.
struct GridSpec {
  int nodes = 2000;
  // Map scale L; 0 selects the bubble scale.
  double map_scale = 0.0;
  // Outer radius for norms, fits and (n <= 24) the truncated domain; 0 selects 1000 max(eps, lambda).
  double r_max = 0.0;
};

// Galerkin discretization of the radial fourth-order operator Delta_N^2 - V on [0, inf)
// (or [0, r_trunc] with clamped end) with C1 cubic Hermite elements in s. The unknown is
// chi = psi / omega with omega(r) = (1 + r^2/L^2)^(-beta/2); chi'(0) = 0 is imposed.
class RadialSector {
 public:
  RadialSector(int N, RadialFn V, double L, double beta, int elements, double r_trunc = 0.0);

  int N() const { return N_; }
  int size() const { return ndof_; }
  bool truncated() const { return r_trunc_ > 0; }
  double r_trunc() const { return r_trunc_; }

  // Bilaplacian form K0 and potential form M_V (both symmetric).
  const Eigen::SparseMatrix<double>& bilaplacian() const { return K0_; }
  const Eigen::SparseMatrix<double>& potential() const { return MV_; }
  // Entries int g(r) psi_i(r) r^(N-1) dr.
  Eigen::VectorXd project(const RadialFn& g) const;
  // Value (deriv = 0) or r-derivative (deriv = 1) of the discrete function with the given coefficients.
  double eval(const Eigen::VectorXd& coef, double r, int deriv = 0) const;
  // int f(r, psi(r)) r^(N-1) dr over the sector domain by the element quadrature.
  double integrate(const std::function<double(double r, double psi)>& f, const Eigen::VectorXd& coef) const;

  struct Solution {
    Eigen::VectorXd coef;
    std::vector<double> multipliers;
    // max_i |residual_i| / max_i |load_i| over all basis functions.
    double galerkin_residual = 0;
    // Constraint values c_k . coef relative to |c_k| |coef|.
    double constraint_residual = 0;
  };

  // Factorization of the bordered system [K0 - M_V, -C; -C^T, 0] for a fixed constraint set.
  class Factor {
   public:
    Solution solve(const Eigen::VectorXd& load) const;
    double condition_estimate() const { return cond_; }

   private:
    friend class RadialSector;
    struct Impl;
    std::shared_ptr<Impl> impl_;
    double cond_ = 0;
  };
  // Throws NumericError (with the condition estimate) if the system is singular.
  Factor factor(const std::vector<RadialFn>& constraints) const;

  // Smallest generalized eigenvalue of (K0 - M_V) relative to K0 on the subspace annihilated by the
  // constraints (dense; intended for coarse grids).
  double min_relative_eigenvalue(const std::vector<RadialFn>& constraints) const;

 private:
  int N_;
  RadialFn V_;
  double L_, beta_, r_trunc_, s_end_;
  int elements_, ndof_;
  std::vector<int> dof_;  // global dof (2 per node) -> compact index or -1
  Eigen::SparseMatrix<double> K0_, MV_;
  Eigen::SparseMatrix<long double> K0l_, MVl_;

  struct QPoint {
    double r;
    long double m1, m2;  // omega r^(N-1) r_s w and omega^2 r^(N-1) r_s w
    int elem;
    long double B[4], LB[4];  // shape values and (Delta_N psi)/omega per shape
  };
  std::vector<QPoint> qp_;
  void build();
  double omega(double r) const;
};

// Coefficients of c^m in the Gegenbauer basis C_k^alpha(c), k = 0..m.
std::vector<double> power_in_gegenbauer(int m, double alpha);
// Monomial coefficients of C_k^alpha(c).
std::vector<double> gegenbauer_coefficients(int k, double alpha);

struct ZbarSector {
  int ell = 0;  // angular degree about the bubble center
  int N = 0;    // radial dimension n + 2 ell
  int gegenbauer = -1;  // k = ell - 2 for the Gamma-bar sectors
  int slot = -1;        // frame slot for ell = 1
  Eigen::VectorXd coef;
  double galerkin_residual = 0;
};

// Solution z of the constrained linearized problem around one bubble for one site.
struct ZbarSolution {
  int n = 0;
  WeylTensor W;
  double tau = 0;
  Site site;
  Bubble bubble;
  GridSpec grid;
  double L = 0, r_max = 0;
  bool whole_space = true;
  // Multipliers b_0 .. b_n in original coordinates.
  std::vector<double> b;
  // ||Gamma||_(L^2(B_rmax(xi))).
  double gamma_norm = 0;
  // ||z||_(L^2(B_rmax(xi))).
  double z_norm = 0;
  // Largest Galerkin residual over all sectors, relative to the sector load.
  double galerkin_residual = 0;
  // |int phi_k z| / (||phi_k|| ||z||) over k = 0..n, all sectors included.
  double constraint_residual = 0;
  double condition_estimate = 0;
  std::vector<ZbarSector> sectors;

  double value(const Point& x) const;
  // Gamma reassembled from its angular sectors (for checking the decomposition).
  double gamma_value(const Point& x) const;
  // Integral of Gamma z over the solution domain, summed sector by sector.
  double gamma_z_integral() const;
  // Root mean square of z over the sphere |x - xi| = r.
  double sphere_rms(double r) const;

  // Internal state for evaluation.
  struct Geometry;
  std::shared_ptr<const Geometry> geo;
};

ZbarSolution solve_zbar(const PerturbationSpec& spec, int site, const Bubble& b, const GridSpec& grid = {});
// Normalized problem: site at the origin with lambda = mu = 1.
ZbarSolution solve_zbar_normalized(const WeylTensor& W, double tau, const Bubble& b, const GridSpec& grid = {});

struct ZbarVerification {
  double decay_slope = 0, decay_target = 0;
  double decay_r0 = 0, decay_r1 = 0;
  // Slope within 0.5 of the target 14 - n.
  bool decay_ok = false;
  // Slope no larger than 14 - n + 0.5, i.e. consistent with the upper bound.
  bool decay_bound_ok = false;
  // Far-field exponent of the leading term, 12 - n (the r^(10-n) part of Gamma cancels).
  double decay_leading = 0;
  double scaling_error = 0;
  bool scaling_ok = false;
  double constraint_residual = 0;
  bool constraint_ok = false;
  double max_multiplier_ratio = 0;  // max |b_k| / ||Gamma||
  bool multipliers_ok = false;
  bool ok() const { return decay_ok && scaling_ok && constraint_ok && multipliers_ok; }
};
// Decay fit on [10 lambda, r_max/2], two-scale comparison at half the site scale, constraints.
ZbarVerification verify_zbar(const ZbarSolution& sol);

// Coercivity proxy: smallest relative eigenvalue for each sector ell = 0..6 on a coarse grid,
// with the constraints phi_k (and, for ell = 0, w^((n+4)/(n-4))).
std::vector<double> sector_coercivity(int n, double eps, int elements = 160);

// Manufactured-solution check in the ell = 2 sector: psi* = (1 - r^2/R^2)^8 on [0, R].
struct ManufacturedResult {
  double max_error = 0;
  double galerkin_residual = 0;
};
ManufacturedResult manufactured_check(int n, double eps, double R, int nodes, bool whole_space = true);

}  // namespace qcl
