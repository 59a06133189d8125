#pragma once

#include <stdexcept>
#include <string>

namespace qcl {

// Raised for invalid inputs (parameter-domain or precondition violations).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical procedure cannot reach its target.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension and the dimension-dependent constants of the Paneitz operator.
struct Dim {
  int n = 0;
  double a = 0, b = 0, c = 0, d = 0;
  // Coefficient of R^2 in the Q-curvature.
  double qr2 = 0;

  explicit Dim(int dim);

  // Bubble exponent (n-4)/2.
  double p() const { return 0.5 * (n - 4); }
  // Critical exponent (n+4)/(n-4).
  double crit() const { return double(n + 4) / double(n - 4); }
  // Round-sphere Q-curvature n(n^2-4)/8.
  double q_sphere() const { return n * (double(n) * n - 4.0) / 8.0; }
  // Potential coefficient of the linearized operator, ((n+4)/(n-4)) d(n).
  double lin_potential() const { return crit() * d; }
};

}  // namespace qcl
