#pragma once

#include <optional>
#include <string>
#include <vector>

#include "constants.hpp"
#include "jet.hpp"
#include "taylor.hpp"
#include "tensor.hpp"

namespace qcl {

using Point = std::vector<double>;

struct Bubble {
  Point xi;
  double eps = 1.0;
};

struct Cutoff {
  double t = 1.0;
  Point q;
};

struct GluedBubble {
  Point xi;
  double eps = 1.0;
  double r = 1.0;
};

struct MultiBubbleConfig {
  std::vector<GluedBubble> bubbles;
  double alpha = 1.0;
  double R = 1.0;
};

void check_bubble(const Dim& dim, const Bubble& b);

// Taylor coefficients F^(k)(s)/k!, k = 0..K, of F(s) = (2 eps/(eps^2 + s))^((n-4)/2).
std::vector<double> bubble_profile_taylor(const Dim& dim, double eps, double s, int K);

double bubble_value(const Dim& dim, const Bubble& b, const Point& x);
Jet bubble_jet(const Dim& dim, const Bubble& b, const Point& x, int degree);
// Value (order 0) or full derivative tensor of the given order.
DerivTensor bubble_eval(const Dim& dim, const Bubble& b, const Point& x, int order);

// Delta^2 w - d * w^((n+4)/(n-4)); `d_coeff` overrides d(n) when given.
double bubble_pde_residual(const Dim& dim, const Bubble& b, const Point& x,
                           std::optional<double> d_coeff = std::nullopt);
// Delta^2 w evaluated from the radial Laurent representation.
double bubble_bilaplacian(const Dim& dim, const Bubble& b, const Point& x);

// phi_(xi,eps,k)(x); k = 0 is the scale mode, k >= 1 the translation mode in x_k.
double phi_eval(const Dim& dim, const Bubble& b, int k, const Point& x);
// The defining product (2/(n-4)) eps d_k w w^(8/(n-4)), d_0 = d/d eps, d_k = d/d xi_k,
// evaluated with independent differentiation.
double phi_product_form(const Dim& dim, const Bubble& b, int k, const Point& x);

// Profile eta(t): 1 for t <= 1, 0 for t >= 2, smooth monotone transition.
Taylor<4> cutoff_profile(double t);
// Constant c with |eta^(i)| <= c for i = 1..4 (measured by dense sampling).
double cutoff_constant();

double cutoff_value(const Cutoff& c, const Point& x);
Jet cutoff_jet(const Cutoff& c, const Point& x, int degree);
DerivTensor cutoff_eval(const Cutoff& c, const Point& x, int order);

// Name of the first violated membership clause, or nullopt when cfg is admissible.
std::optional<std::string> multibubble_violation(const MultiBubbleConfig& cfg);
void check_multibubble(const Dim& dim, const MultiBubbleConfig& cfg);

double multibubble_value(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x);
Jet multibubble_jet(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x, int degree);
DerivTensor multibubble_eval(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x, int order);

double dist2(const Point& a, const Point& b);

}  // namespace qcl
