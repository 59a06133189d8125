#include "bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qcl {

namespace {

void check_order(int order) {
  if (order < 0 || order > 4) throw DomainError("derivative order must be in 0..4");
}

void check_point(const Dim& dim, const Point& x, const char* what) {
  if (int(x.size()) != dim.n)
    throw DomainError(std::string(what) + " has dimension " + std::to_string(x.size()) +
                      ", expected " + std::to_string(dim.n));
}

// Jet of |x - q|^2 around x0.
Jet dist2_jet(const std::shared_ptr<const JetSpace>& sp, const Point& x0, const Point& q) {
  Jet j(sp);
  j[0] = dist2(x0, q);
  if (sp->degree() >= 1)
    for (int v = 0; v < sp->n(); ++v) j[sp->var_index(v)] = 2.0 * (x0[v] - q[v]);
  if (sp->degree() >= 2)
    for (int v = 0; v < sp->n(); ++v) j[sp->index_of({v, v})] = 1.0;
  return j;
}

// Coefficients of Delta applied to sum_m c_m u^(-m), u = eps^2 + |x|^2.
std::map<double, double> laplace_laurent(const std::map<double, double>& f, double eps2, int n) {
  std::map<double, double> g;
  for (auto [m, c] : f) {
    g[m + 1] += c * m * (4.0 * (m + 1) - 2.0 * n);
    g[m + 2] += -4.0 * eps2 * m * (m + 1) * c;
  }
  return g;
}

}  // namespace

double dist2(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void check_bubble(const Dim& dim, const Bubble& b) {
  if (!(b.eps > 0)) throw DomainError("bubble scale eps must be positive");
  check_point(dim, b.xi, "bubble center");
}

std::vector<double> bubble_profile_taylor(const Dim& dim, double eps, double s, int K) {
  const double p = dim.p();
  const double u = eps * eps + s;
  std::vector<double> t(K + 1);
  const double base = std::pow(2.0 * eps / u, p);
  double coef = 1.0;  // binom(-p, k)
  double upow = 1.0;
  for (int k = 0; k <= K; ++k) {
    t[k] = base * coef * upow;
    coef *= (-p - k) / (k + 1.0);
    upow /= u;
  }
  return t;
}

double bubble_value(const Dim& dim, const Bubble& b, const Point& x) {
  check_bubble(dim, b);
  return std::pow(2.0 * b.eps / (b.eps * b.eps + dist2(x, b.xi)), dim.p());
}

Jet bubble_jet(const Dim& dim, const Bubble& b, const Point& x, int degree) {
  check_bubble(dim, b);
  check_point(dim, x, "evaluation point");
  auto sp = JetSpace::get(dim.n, degree);
  Jet s = dist2_jet(sp, x, b.xi);
  return compose(s, bubble_profile_taylor(dim, b.eps, s.value(), degree));
}

DerivTensor bubble_eval(const Dim& dim, const Bubble& b, const Point& x, int order) {
  check_order(order);
  if (order == 0) {
    DerivTensor t;
    t.n = dim.n;
    t.v = {bubble_value(dim, b, x)};
    return t;
  }
  return tensor_from_jet(bubble_jet(dim, b, x, order), order);
}

double bubble_bilaplacian(const Dim& dim, const Bubble& b, const Point& x) {
  check_bubble(dim, b);
  const double eps2 = b.eps * b.eps;
  const double u = eps2 + dist2(x, b.xi);
  const double p = dim.p();
  std::map<double, double> f{{p, 1.0}};
  auto g = laplace_laurent(laplace_laurent(f, eps2, dim.n), eps2, dim.n);
  double s = 0;
  for (auto [m, c] : g) s += c * std::pow(u, -(m - p));
  return std::pow(2.0 * b.eps, p) * std::pow(u, -p) * s;
}

double bubble_pde_residual(const Dim& dim, const Bubble& b, const Point& x, std::optional<double> d_coeff) {
  const double d = d_coeff.value_or(dim.d);
  const double w = bubble_value(dim, b, x);
  return bubble_bilaplacian(dim, b, x) - d * std::pow(w, dim.crit());
}

double phi_eval(const Dim& dim, const Bubble& b, int k, const Point& x) {
  check_bubble(dim, b);
  if (k < 0 || k > dim.n) throw DomainError("phi index k must be in 0..n");
  const double r2 = dist2(x, b.xi);
  const double e = b.eps;
  const double base = std::pow(2.0 * e / (e * e + r2), 0.5 * (dim.n + 4));
  if (k == 0) return base * (r2 - e * e) / (r2 + e * e);
  return base * 2.0 * e * (x[k - 1] - b.xi[k - 1]) / (r2 + e * e);
}

double phi_product_form(const Dim& dim, const Bubble& b, int k, const Point& x) {
  check_bubble(dim, b);
  const double w = bubble_value(dim, b, x);
  double dw;
  if (k == 0) {
    // Forward-mode derivative in eps.
    auto e = Taylor<1>::variable(b.eps);
    auto u = e * e + dist2(x, b.xi);
    auto wt = pow(2.0 * e / u, dim.p());
    dw = wt.deriv(1);
  } else {
    // d/d xi_k w(x - xi) = -d/dx_k w.
    Jet j = bubble_jet(dim, b, x, 1);
    dw = -j.derivative({k - 1});
  }
  return 2.0 / (dim.n - 4) * b.eps * dw * std::pow(w, 8.0 / (dim.n - 4));
}

Taylor<4> cutoff_profile(double t) {
  if (t <= 1.0) return Taylor<4>::constant(1.0);
  if (t >= 2.0) return Taylor<4>::constant(0.0);
  auto s = 2.0 - Taylor<4>::variable(t);
  auto B = [](const Taylor<4>& v) { return exp(-1.0 / v); };
  auto bs = B(s);
  auto bc = B(1.0 - s);
  return bs / (bs + bc);
}

double cutoff_constant() {
  static const double c = [] {
    double m = 0;
    const int N = 20000;
    for (int i = 1; i < N; ++i) {
      auto e = cutoff_profile(1.0 + double(i) / N);
      for (int k = 1; k <= 4; ++k) m = std::max(m, std::abs(e.deriv(k)));
    }
    return m;
  }();
  return c;
}

double cutoff_value(const Cutoff& c, const Point& x) {
  return cutoff_profile(std::sqrt(dist2(x, c.q)) / c.t).value();
}

Jet cutoff_jet(const Cutoff& c, const Point& x, int degree) {
  if (!(c.t > 0)) throw DomainError("cutoff radius must be positive");
  auto sp = JetSpace::get(int(x.size()), degree);
  const double rho = std::sqrt(dist2(x, c.q));
  const double t = rho / c.t;
  if (t <= 1.0) return Jet::constant(sp, 1.0);
  if (t >= 2.0) return Jet::constant(sp, 0.0);
  Jet s = dist2_jet(sp, x, c.q);
  // rho = sqrt(s), then eta(rho / T).
  std::vector<double> sq(degree + 1);
  {
    double coef = 1.0;
    for (int k = 0; k <= degree; ++k) {
      sq[k] = coef * std::pow(s.value(), 0.5 - k);
      coef *= (0.5 - k) / (k + 1.0);
    }
  }
  Jet r = compose(s, sq);
  auto e = cutoff_profile(t);
  std::vector<double> et(degree + 1);
  for (int k = 0; k <= degree; ++k) et[k] = e.c[k] * std::pow(c.t, -k);
  return compose(r, et);
}

DerivTensor cutoff_eval(const Cutoff& c, const Point& x, int order) {
  check_order(order);
  if (order == 0) {
    DerivTensor t;
    t.n = int(x.size());
    t.v = {cutoff_value(c, x)};
    return t;
  }
  return tensor_from_jet(cutoff_jet(c, x, order), order);
}

std::optional<std::string> multibubble_violation(const MultiBubbleConfig& cfg) {
  const auto& B = cfg.bubbles;
  for (const auto& b : B) {
    if (!(b.eps > 0)) return std::string("positivity: eps_i > 0");
    if (!(b.r > 0)) return std::string("positivity: r_i > 0");
  }
  for (const auto& b : B)
    if (!(b.eps / b.r < cfg.alpha)) return std::string("eps_i/r_i < alpha");
  for (std::size_t i = 0; i < B.size(); ++i)
    for (std::size_t j = i + 1; j < B.size(); ++j)
      if (!(std::sqrt(dist2(B[i].xi, B[j].xi)) > 2.0 * (B[i].r + B[j].r)))
        return std::string("|xi_i - xi_j| > 2(r_i + r_j)");
  for (const auto& b : B) {
    double nrm = 0;
    for (double v : b.xi) nrm += v * v;
    if (!(std::sqrt(nrm) < cfg.R - 2.0 * b.r)) return std::string("|xi_i| < R - 2 r_i");
  }
  for (std::size_t i = 0; i < B.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) {
      double q = B[i].eps / B[j].eps;
      if (!(q > 0.5 && q < 2.0)) return std::string("1/2 < eps_i/eps_j < 2");
    }
  return std::nullopt;
}

void check_multibubble(const Dim& dim, const MultiBubbleConfig& cfg) {
  if (cfg.bubbles.empty()) throw DomainError("multi-bubble configuration is empty");
  for (const auto& b : cfg.bubbles) check_point(dim, b.xi, "bubble center");
  if (auto v = multibubble_violation(cfg)) throw DomainError("configuration violates " + *v);
}

double multibubble_value(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x) {
  check_multibubble(dim, cfg);
  double s = 0;
  for (const auto& b : cfg.bubbles) {
    double eta = cutoff_value({b.r, b.xi}, x);
    if (eta != 0.0) s += eta * bubble_value(dim, {b.xi, b.eps}, x);
  }
  return s;
}

Jet multibubble_jet(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x, int degree) {
  check_multibubble(dim, cfg);
  auto sp = JetSpace::get(dim.n, degree);
  Jet s(sp);
  for (const auto& b : cfg.bubbles) {
    if (std::sqrt(dist2(x, b.xi)) >= 2.0 * b.r) continue;
    Jet eta = cutoff_jet({b.r, b.xi}, x, degree);
    Jet w = bubble_jet(dim, {b.xi, b.eps}, x, degree);
    fma_trunc(s, 1.0, eta, w, degree);
  }
  return s;
}

DerivTensor multibubble_eval(const Dim& dim, const MultiBubbleConfig& cfg, const Point& x, int order) {
  check_order(order);
  if (order == 0) {
    DerivTensor t;
    t.n = dim.n;
    t.v = {multibubble_value(dim, cfg, x)};
    return t;
  }
  return tensor_from_jet(multibubble_jet(dim, cfg, x, order), order);
}

}  // namespace qcl
