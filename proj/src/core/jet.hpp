#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace qcl {

// Monomial basis of degree <= D in n variables, with multiplication and
// differentiation tables. Instances are shared and immutable.
class JetSpace {
 public:
  static std::shared_ptr<const JetSpace> get(int n, int degree);

  JetSpace(int n, int degree);

  int n() const { return n_; }
  int degree() const { return degree_; }
  std::size_t size() const { return deg_.size(); }
  int deg(std::size_t k) const { return deg_[k]; }
  // Exponent of variable v in monomial k.
  int exponent(std::size_t k, int v) const { return exps_[k * n_ + v]; }
  // Index of the monomial with the given sorted variable list (size <= D).
  std::size_t index_of(const std::vector<int>& vars) const;
  // Index of x_v.
  std::size_t var_index(int v) const { return 1 + v; }
  // alpha! for monomial k.
  double factorial_weight(std::size_t k) const { return fact_[k]; }

  struct Triple {
    std::uint32_t a, b, c;
  };
  // Products whose result has degree <= t occupy triples_[0, prod_end_[t]).
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t prod_end(int t) const { return prod_end_[t]; }

  struct DerivEntry {
    std::uint32_t src, dst;
    double factor;
  };
  const std::vector<DerivEntry>& deriv_table(int v) const { return deriv_[v]; }

 private:
  int n_, degree_;
  std::vector<std::uint8_t> exps_;
  std::vector<int> deg_;
  std::vector<double> fact_;
  std::vector<std::uint64_t> keys_;
  std::vector<Triple> triples_;
  std::vector<std::size_t> prod_end_;
  std::vector<std::vector<DerivEntry>> deriv_;
  std::vector<std::uint32_t> index_order_;
  std::uint64_t key_of(const std::vector<int>& sorted_vars) const;
};

// Truncated multivariate Taylor polynomial at a base point x0.
// Coefficient k is d^alpha f(x0) / alpha!.
class Jet {
 public:
  Jet() = default;
  explicit Jet(std::shared_ptr<const JetSpace> sp) : sp_(std::move(sp)), c_(sp_->size(), 0.0) {}

  static Jet constant(std::shared_ptr<const JetSpace> sp, double v);
  // The coordinate function x_v around base value x0v.
  static Jet variable(std::shared_ptr<const JetSpace> sp, int v, double x0v);

  const JetSpace& space() const { return *sp_; }
  const std::shared_ptr<const JetSpace>& space_ptr() const { return sp_; }
  double value() const { return c_[0]; }
  double& operator[](std::size_t k) { return c_[k]; }
  double operator[](std::size_t k) const { return c_[k]; }
  std::vector<double>& coeffs() { return c_; }
  const std::vector<double>& coeffs() const { return c_; }

  // Partial derivative d f / d x_{vars...} at x0 (vars may repeat).
  double derivative(const std::vector<int>& vars) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  // Fused this += s * o.
  Jet& axpy(double s, const Jet& o);

 private:
  std::shared_ptr<const JetSpace> sp_;
  std::vector<double> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator*(const Jet& a, const Jet& b);
// Product truncated at total degree t.
Jet mul_trunc(const Jet& a, const Jet& b, int t);
// out += s * a * b truncated at degree t.
void fma_trunc(Jet& out, double s, const Jet& a, const Jet& b, int t);
// Partial derivative along x_v; result is valid to degree D-1.
Jet diff(const Jet& a, int v);
// Apply a univariate function given its Taylor coefficients t_k = f^(k)(a0)/k!
// at a0 = a.value(); coefficients beyond t.size()-1 are treated as zero.
Jet compose(const Jet& a, const std::vector<double>& t);

}  // namespace qcl
