#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bubbles.hpp"
#include "constants.hpp"
#include "curvature.hpp"

namespace qcl {

// Constant four-tensor with (ideally) the algebraic symmetries of a Weyl tensor.
class WeylTensor {
 public:
  struct Entry {
    int i, j, k, l;  // zero-based
    double value;
  };

  WeylTensor() = default;
  explicit WeylTensor(int n) : n_(n), v_(std::size_t(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double at(int i, int j, int k, int l) const { return v_[idx(i, j, k, l)]; }
  double& ref(int i, int j, int k, int l) { return v_[idx(i, j, k, l)]; }
  // Nonzero entries in lexicographic index order.
  std::vector<Entry> entries() const;
  // Coordinates appearing in some nonzero entry.
  std::vector<int> support() const;
  bool is_zero() const;
  // Sum over W_ijkl a_i b_j c_k d_l.
  double contract(const double* a, const double* b, const double* c, const double* d) const;
  // W with both index pairs conjugated by an orthogonal matrix: W'_ijkl = O_ia O_jb O_kc O_ld W_abcd.
  WeylTensor rotated(const Eigen::MatrixXd& O) const;
  double max_abs() const;

 private:
  std::size_t idx(int i, int j, int k, int l) const {
    return ((std::size_t(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_ = 0;
  std::vector<double> v_;
};

struct WeylReport {
  bool symmetries = true, bianchi = true, trace_free = true, nondegenerate = true;
  // First violating index tuple (zero-based) per family, when failing.
  std::optional<std::array<int, 4>> symmetry_violation, bianchi_violation, trace_violation;
  double nondegeneracy = 0.0;
  bool ok() const { return symmetries && bianchi && trace_free && nondegenerate; }
};

WeylReport weyl_validate(const WeylTensor& W, double tol = 1e-12);

// Symmetrizes seed components over the index symmetries, projects onto the
// first Bianchi identity, then removes all traces.
WeylTensor weyl_from_seed(int n, const std::vector<WeylTensor::Entry>& seed);
// The default admissible tensor built from the seed W_1234, scaled so that W_1234 = 1.
WeylTensor default_weyl(int n);

// Auxiliary quartic f(s) = tau - 1200 s + 2411 s^2 - 135 s^3 + s^4.
struct Quartic {
  double tau = 0.0;
  std::array<double, 5> coeffs() const { return {tau, -1200.0, 2411.0, -135.0, 1.0}; }
  double operator()(double s) const;
  // k-th derivative.
  double deriv(double s, int k) const;
};

struct Site {
  double mu = 1.0, lambda = 1.0, rho = 1.0;
  Point y;
};

struct PerturbationSpec {
  int n = 0;
  WeylTensor W;
  double tau = 0.0;
  std::vector<Site> sites;
  double R = 1.0;
  double alpha = 0.5;
};

// First violated parameter clause, or nullopt.
std::optional<std::string> spec_violation(const PerturbationSpec& spec);
void check_spec(const PerturbationSpec& spec);

// H_ik(z) = sum_pq W_ipkq z_p z_q.
Eigen::MatrixXd weyl_quadratic(const WeylTensor& W, const Point& z);

// The perturbation h: on each site the model mu lambda^8 f(|x-y|^2/lambda^2) H(x-y),
// multiplied by the cutoff eta_(rho, y); zero elsewhere.
class ModelPerturbation : public TensorField {
 public:
  explicit ModelPerturbation(PerturbationSpec spec, bool with_cutoff = true);
  int dim() const override { return spec_.n; }
  JetMatrix jets(const Point& x, int degree) const override;
  const PerturbationSpec& spec() const { return spec_; }

 private:
  PerturbationSpec spec_;
  bool cutoff_;
};

// Normalized tensor Hbar(x) = f(|x|^2) H(x).
class NormalizedPerturbation : public TensorField {
 public:
  NormalizedPerturbation(WeylTensor W, double tau) : W_(std::move(W)), f_{tau} {}
  int dim() const override { return W_.dim(); }
  JetMatrix jets(const Point& x, int degree) const override;

 private:
  WeylTensor W_;
  Quartic f_;
};

// h value (no derivatives) at x.
Eigen::MatrixXd h_value(const PerturbationSpec& spec, const Point& x);

// Gamma_(y_t, xi, eps)(x) for site t, closed form.
double gamma_eval(const PerturbationSpec& spec, int site, const Bubble& b, const Point& x);
// Normalized Gamma-bar_(xi, eps)(x) (site at the origin, lambda = mu = 1).
double gamma_bar(const WeylTensor& W, double tau, const Bubble& b, const Point& x);
// Reference evaluation of the four-term contraction from jets of G and w (small n only).
double gamma_reference(const WeylTensor& W, double tau, double mu, double lambda, const Point& y, const Bubble& b,
                       const Point& x);

// Sup over the points of |Gamma| (lambda + |x - y|)^(n-10) / (mu lambda^((n-4)/2)) for site t.
double gamma_bound_ratio(const PerturbationSpec& spec, int site, const Bubble& b, const std::vector<Point>& pts);

// Sup over the given points of |h| + |dh| + ... + |d^4 h| (Frobenius norms of derivative arrays).
double h_sup_norm(const TensorField& h, const std::vector<Point>& pts);

// Membership of (xi, eps) in Omega(lambda, y): first violated clause or nullopt.
std::optional<std::string> omega_violation(const PerturbationSpec& spec, const std::vector<Point>& xi,
                                           const std::vector<double>& eps);
// The multi-bubble configuration with r_t = rho_t + lambda_t.
MultiBubbleConfig glue_config(const PerturbationSpec& spec, const std::vector<Point>& xi,
                              const std::vector<double>& eps);

// Final parameter sequence of the main construction.
struct FinalSequence {
  int N = 0, n = 0;
  Point y;
  double lambda = 0, mu = 0, rho = 0;
  // log2 of mu^-2 rho^(4-n) lambda^(n-24), from the parameters.
  double log2_smallness = 0;
  // log2 of 2^((74/3 - n) N) (4 N^2)^(n-4).
  double log2_closed_form = 0;
  // Exact comparison: power of two (as a reduced fraction) and the integer factor
  // (4N^2)^(n-4) agree between the two representations.
  bool exact_match = false;
  long long two_exp_num = 0, two_exp_den = 1;
};
FinalSequence final_sequence(int N, int n);
// Smallest N0 such that the smallness quantity decreases for all N >= N0 (n > 74/3).
double smallness_turning_point(int n);

}  // namespace qcl
