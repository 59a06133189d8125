#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "bubbles.hpp"
#include "constants.hpp"
#include "jet.hpp"

namespace qcl {

// Symmetric matrix of jets, stored row-major (n*n entries).
using JetMatrix = std::vector<Jet>;

// Smooth symmetric two-tensor field on R^n with jets on request.
class TensorField {
 public:
  virtual ~TensorField() = default;
  virtual int dim() const = 0;
  virtual JetMatrix jets(const Point& x, int degree) const = 0;
  Eigen::MatrixXd value(const Point& x) const;
};

// Scalar field given by its jets.
using ScalarJetFn = std::function<Jet(const Point& x, int degree)>;

class ZeroTensorField : public TensorField {
 public:
  explicit ZeroTensorField(int n) : n_(n) {}
  int dim() const override { return n_; }
  JetMatrix jets(const Point& x, int degree) const override;

 private:
  int n_;
};

// h(x) = s(x) M for a constant symmetric matrix M and scalar field s.
class ScaledTensorField : public TensorField {
 public:
  ScaledTensorField(Eigen::MatrixXd M, ScalarJetFn s);
  int dim() const override { return int(M_.rows()); }
  JetMatrix jets(const Point& x, int degree) const override;

 private:
  Eigen::MatrixXd M_;
  ScalarJetFn s_;
};

// Metric on a coordinate patch of R^n, given by jets of g and g^-1.
class MetricField {
 public:
  virtual ~MetricField() = default;
  virtual int dim() const = 0;
  virtual void jets(const Point& x, int degree, JetMatrix& g, JetMatrix& ginv) const = 0;
  virtual Eigen::MatrixXd value(const Point& x) const;
};

// g = exp(h) for a trace-free symmetric h with |h| < 1; g^-1 = exp(-h).
class ExpMetric : public MetricField {
 public:
  explicit ExpMetric(std::shared_ptr<const TensorField> h) : h_(std::move(h)) {}
  int dim() const override { return h_->dim(); }
  void jets(const Point& x, int degree, JetMatrix& g, JetMatrix& ginv) const override;
  Eigen::MatrixXd value(const Point& x) const override;
  const TensorField& h() const { return *h_; }

 private:
  std::shared_ptr<const TensorField> h_;
};

// g = u^(4/(n-4)) delta for a positive scalar u.
class ConformalMetric : public MetricField {
 public:
  ConformalMetric(int n, ScalarJetFn u) : n_(n), u_(std::move(u)) {}
  int dim() const override { return n_; }
  void jets(const Point& x, int degree, JetMatrix& g, JetMatrix& ginv) const override;

 private:
  int n_;
  ScalarJetFn u_;
};

// Matrix exponential of a symmetric matrix of jets by power series; throws when |h| >= 1.
JetMatrix exp_jet_matrix(const JetMatrix& h, int n, double sign = 1.0);
// exp of a symmetric matrix (spectral), used for value-only queries.
Eigen::MatrixXd exp_symmetric(const Eigen::MatrixXd& h);

struct MetricSample {
  int n = 0;
  Eigen::MatrixXd g, ginv;
  // Jets of g_ij to degree 4 at the point (derivatives via Jet::derivative); empty on the FD path.
  JetMatrix g_jet;
  Eigen::MatrixXd ric;
  double R = 0.0;
  Eigen::VectorXd grad_R;
  double lap_R = 0.0;
  double ric_norm2 = 0.0;
  double Q = 0.0;
  // Estimated absolute error of Q (FD path only).
  double fd_error = 0.0;
};

// Metric, inverse and metric derivatives at x.
MetricSample metric_at(const MetricField& g, const Point& x);
// Full curvature data from analytic jets.
MetricSample curvature_at(const MetricField& g, const Point& x);

struct FdOptions {
  // Outer step (derivatives of R), halved up to max_halvings times.
  double step = 2e-2;
  // Step for the metric derivatives (1e-2 per derivative order).
  double inner_step = 2e-2;
  // Richardson extrapolation levels applied to every central difference.
  int richardson_levels = 1;
  // Stop halving when successive Q estimates agree to this relative accuracy.
  double target = 1e-5;
  int max_halvings = 2;
};
// Curvature from metric values only: Richardson-extrapolated central differences
// for dg, d^2g and a second nested level for the Hessian of R.
MetricSample curvature_at_fd(const std::function<Eigen::MatrixXd(const Point&)>& g, const Point& x,
                             const FdOptions& opt = {});

// Q from scalar, Ricci and Laplacian of scalar curvature.
double q_curvature(const Dim& dim, double lapR, double R, double ric_norm2);

// P_g u at x: Delta_g^2 u + a <Ric, Hess u> - b R Delta_g u + (6-n)/(2(n-1)) <dR, du> + c Q u.
double paneitz_apply(const MetricField& g, const ScalarJetFn& u, const Point& x);

// Pieces of P_g u at a point, sharing one curvature computation.
struct PaneitzParts {
  double bilap = 0;       // Delta_g^2 u
  double ric_hess = 0;    // <Ric, Hess_g u>
  double r_lap = 0;       // R Delta_g u
  double dr_du = 0;       // <dR, du>
  double qu = 0;          // Q u
  double u = 0;
  double total(const Dim& dim) const;
};
PaneitzParts paneitz_parts(const MetricField& g, const ScalarJetFn& u, const Point& x);

// Q of u^(4/(n-4)) delta via the flat Paneitz operator.
double conformal_q(int n, const ScalarJetFn& u, const Point& x);

// Jet helpers for scalar fields.
ScalarJetFn bubble_field(const Dim& dim, const Bubble& b);
ScalarJetFn multibubble_field(const Dim& dim, const MultiBubbleConfig& cfg);
// exp(-|x - c|^2 / (2 s^2)).
ScalarJetFn gaussian_field(const Point& c, double s);
// Flat Laplacian and bilaplacian of a scalar jet at its base point.
double flat_laplacian(const Jet& u);
double flat_bilaplacian(const Jet& u);

// Leading-order expansions of curvature quantities for a trace-free h in
// the gauge x_i h_ik = 0, d_i h_ik = 0 (evaluated from jets of h at x).
struct ExpansionTerms {
  double q_exact = 0, q_lead = 0;
  double bilap_diff_exact = 0, bilap_diff_lead = 0;
  double div_ric_exact = 0, div_ric_lead = 0;
};
ExpansionTerms expansion_terms(const TensorField& h, const ScalarJetFn& w, const Point& x);

struct ExpansionResidual {
  std::vector<double> mu;
  std::vector<double> q_remainder, bilap_remainder, div_ric_remainder;
  double q_slope = 0, bilap_slope = 0, div_ric_slope = 0;
};
// Sweeps h_mu (a family scaled by mu) and fits log-log slopes of |exact - leading|.
ExpansionResidual expansion_residual(const std::function<std::shared_ptr<const TensorField>(double)>& h_of_mu,
                                     const ScalarJetFn& w, const Point& x, const std::vector<double>& mu);

}  // namespace qcl
