#include "family.hpp"

#include <cmath>

#include "quadrature.hpp"

namespace qcl {

BetaMatrix beta_matrix(const Dim& dim, const MultiBubbleConfig& cfg, double tol) {
  check_multibubble(dim, cfg);
  const int n = dim.n, m1 = n + 1;
  const int l = int(cfg.bubbles.size());
  const double p = dim.p();
  BetaMatrix out;
  out.beta = Eigen::MatrixXd::Zero(l * m1, l * m1);

  QuadSpec qs;
  qs.tol = tol;
  qs.throw_on_failure = false;

  // Sphere factors: int 1 and int theta_k^2 over S^(n-1).
  const double area = sphere_area(n);
  std::vector<int> a2(n, 0);
  a2[0] = 2;
  const double second = sphere_moment(a2, n);

  for (int i = 0; i < l; ++i) {
    const auto& gb = cfg.bubbles[i];
    const Bubble b{gb.xi, gb.eps};
    const double eps = gb.eps, r = gb.r;
    auto eta = [r](double rho, int k) { return cutoff_profile(rho / r).deriv(k) / std::pow(r, k); };
    auto w = [&](double rho) { return std::pow(2.0 * eps / (eps * eps + rho * rho), p); };
    auto dw = [&](double rho) { return -2.0 * p * rho * w(rho) / (eps * eps + rho * rho); };
    auto dweps = [&](double rho) {
      return p * w(rho) * (rho * rho - eps * eps) / (eps * (eps * eps + rho * rho));
    };
    auto along = [&](int k, double rho) {
      Point x = gb.xi;
      x[k == 0 ? 0 : k - 1] += rho;
      return phi_eval(dim, b, k, x);
    };
    const std::vector<double> br{r};

    // (0,0): radial against radial.
    auto q00 = radial_integrate(
        [&](double rho) {
          const double e = eta(rho, 0);
          return e * e * along(0, rho) * dweps(rho);
        },
        n, 0.0, 2 * r, qs, br);
    // (k,k): phi_k = A(rho) z_k against -(eta w)'(rho) z_k / rho.
    auto qkk = radial_integrate(
        [&](double rho) {
          if (rho == 0.0) return 0.0;
          const double A = along(1, rho) / rho;
          const double dew = eta(rho, 1) * w(rho) + eta(rho, 0) * dw(rho);
          return -eta(rho, 0) * A * dew * rho;
        },
        n, 0.0, 2 * r, qs, br);
    out.quad_error = std::max({out.quad_error, eps * area * q00.error, eps * second * qkk.error});

    const int o = i * m1;
    out.beta(o, o) = eps * area * q00.value;
    for (int k = 1; k <= n; ++k)
      for (int m = 1; m <= n; ++m) {
        std::vector<int> alpha(n, 0);
        alpha[k - 1] += 1;
        alpha[m - 1] += 1;
        const double ang = k == m ? second : sphere_moment(alpha, n);
        out.beta(o + k, o + m) = eps * ang * qkk.value;
      }
    // Mixed scale/translation entries: radial factor times an odd sphere moment.
    auto q0k = radial_integrate(
        [&](double rho) {
          const double dew = eta(rho, 1) * w(rho) + eta(rho, 0) * dw(rho);
          return -eta(rho, 0) * along(0, rho) * dew;
        },
        n, 0.0, 2 * r, qs, br);
    auto qk0 = radial_integrate(
        [&](double rho) { return eta(rho, 0) * eta(rho, 0) * along(1, rho) * dweps(rho); }, n, 0.0, 2 * r, qs, br);
    for (int k = 1; k <= n; ++k) {
      std::vector<int> alpha(n, 0);
      alpha[k - 1] = 1;
      const double odd = sphere_moment(alpha, n);
      out.beta(o, o + k) = eps * odd * q0k.value;
      out.beta(o + k, o) = eps * odd * qk0.value;
      out.quad_error = std::max({out.quad_error, eps * std::abs(odd) * q0k.error, eps * std::abs(odd) * qk0.error});
    }
  }

  out.min_diagonal = 1e300;
  for (int a = 0; a < l * m1; ++a) {
    out.max_diagonal = std::max(out.max_diagonal, std::abs(out.beta(a, a)));
    out.min_diagonal = std::min(out.min_diagonal, std::abs(out.beta(a, a)));
    for (int c = 0; c < l * m1; ++c)
      if (c != a) out.max_offdiagonal = std::max(out.max_offdiagonal, std::abs(out.beta(a, c)));
  }
  return out;
}

OrthogonalityResult phi_orthogonality(const Dim& dim) {
  const int n = dim.n;
  QuadSpec qs;
  const Bubble b{Point(n, 0.0), 1.0};
  const double p = 2.0 * n / (n + 4), q = 2.0 * n / (n - 4);
  auto axis = [n](double r) {
    Point x(n, 0.0);
    x[0] = r;
    return x;
  };
  auto w = [&](double r) { return bubble_value(dim, b, axis(r)); };
  const Point o(n, 0.0);
  const double w_q = std::pow(lp_power_radial(w, n, q, Region::whole(o, 2.0 * n), qs).value, 1 / q);

  OrthogonalityResult out;
  // Scale mode: radial.
  {
    auto phi = [&](double r) { return phi_eval(dim, b, 0, axis(r)); };
    const auto ip = radial_integrate(RadialProfile{[&](double r) { return phi(r) * w(r); }, 2.0 * n}, n, qs);
    const double phi_p = std::pow(lp_power_radial(phi, n, p, Region::whole(o, p * (n + 4)), qs).value, 1 / p);
    out.scale_ratio = sphere_area(n) * std::abs(ip.value) / (phi_p * w_q);
  }
  // Translation mode: g(r) x_1 with an odd angular factor.
  {
    auto g = [&](double r) { return r > 0 ? phi_eval(dim, b, 1, axis(r)) / r : 0.0; };
    const PolyRadialTerm t{{1}, {[&](double r) { return g(r) * w(r); }, 2.0 * n + 1}};
    const auto ip = polyradial_integrate({t}, n, qs);
    std::vector<double> a(1, p);
    const auto rad =
        radial_integrate(RadialProfile{[&](double r) { return std::pow(std::abs(g(r)) * r, p); }, p * (n + 4)}, n, qs);
    const double phi_p = std::pow(sphere_moment_abs(a, n) * rad.value, 1 / p);
    out.translation_ratio = std::abs(ip.value) / (phi_p * w_q);
  }
  return out;
}

}  // namespace qcl
