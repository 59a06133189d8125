#include <doctest.h>

#include <cmath>
#include <random>

#include "bubbles.hpp"
#include "integrands.hpp"
#include "perturbation.hpp"
#include "polyfield.hpp"
#include "quadrature.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::random_point;
using qcl::test::rel_err;

namespace {

Point random_center(std::mt19937_64& rng, int n, double radius) {
  // Center with components both inside and outside the Weyl support.
  Point xi = random_point(rng, n, radius);
  for (int i = 4; i < n; ++i) xi[i] += 0.1 * radius;
  return xi;
}

double field_at(const BubbleFrame& fr, const PolyField& f, const Point& x) {
  std::vector<double> ya;
  double s;
  frame_coords(fr, x, ya, s);
  return pf_eval(fr.ctx, f, ya, s);
}

Point add(const Point& a, const Point& b) {
  Point c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

}  // namespace

TEST_CASE("bubble field and its derivatives match jets") {
  std::mt19937_64 rng(11);
  for (int n : {5, 7}) {
    const Dim dim(n);
    const Point xi = random_center(rng, n, 0.4);
    const double eps = 0.7;
    const BubbleFrame fr = bubble_frame(default_weyl(n), xi, eps);
    const PolyField w = pf_bubble(fr.ctx);
    const PolyField lapw = pf_laplacian(fr.ctx, w);
    const PolyField bilap = pf_laplacian(fr.ctx, lapw);
    const PolyField gw = pf_grad_dot(fr.ctx, w, w);
    const PolyField hw = pf_hess_dot(fr.ctx, w, w);
    const PolyField weps = pf_bubble_deps(fr.ctx);
    for (int trial = 0; trial < 5; ++trial) {
      const Point x = add(xi, random_point(rng, n, 1.5));
      const Jet j = bubble_jet(dim, Bubble{xi, eps}, x, 4);
      double lap = 0, bl = 0, g = 0, h = 0;
      for (int a = 0; a < n; ++a) {
        lap += j.derivative({a, a});
        g += j.derivative({a}) * j.derivative({a});
        for (int b = 0; b < n; ++b) {
          bl += j.derivative({a, a, b, b});
          h += j.derivative({a, b}) * j.derivative({a, b});
        }
      }
      CHECK(rel_err(field_at(fr, w, x), j.value()) < 1e-13);
      CHECK(rel_err(field_at(fr, lapw, x), lap) < 1e-12);
      CHECK(rel_err(field_at(fr, bilap, x), bl) < 1e-11);
      CHECK(rel_err(field_at(fr, gw, x), g) < 1e-12);
      CHECK(rel_err(field_at(fr, hw, x), h) < 1e-12);
      const double de = 1e-5;
      const double fd = (bubble_value(dim, Bubble{xi, eps + de}, x) - bubble_value(dim, Bubble{xi, eps - de}, x)) / (2 * de);
      CHECK(rel_err(field_at(fr, weps, x), fd) < 1e-8);
    }
  }
}

TEST_CASE("normalized perturbation field matches jets in the rotated frame") {
  std::mt19937_64 rng(12);
  for (int n : {5, 7}) {
    const WeylTensor W = default_weyl(n);
    const double tau = 1900.0;
    const NormalizedPerturbation H(W, tau);
    const Point xi = random_center(rng, n, 0.3);
    const BubbleFrame fr = bubble_frame(W, xi, 0.5);
    const auto hbar = pf_hbar(fr, tau);
    const int k = int(fr.weyl_slots.size());
    REQUIRE(k == 4);
    for (int trial = 0; trial < 4; ++trial) {
      const Point x = add(xi, random_point(rng, n, 0.6));
      const JetMatrix J = H.jets(x, 3);
      double gmax = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) gmax = std::max(gmax, std::abs(J[fr.ctx.active[fr.weyl_slots[i]] * n + fr.ctx.active[fr.weyl_slots[j]]].value()));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          const Jet& hj = J[fr.ctx.active[fr.weyl_slots[i]] * n + fr.ctx.active[fr.weyl_slots[j]]];
          const PolyField& f = hbar[i * k + j];
          double lap = 0, g = 0;
          for (int a = 0; a < n; ++a) {
            lap += hj.derivative({a, a});
            g += hj.derivative({a}) * hj.derivative({a});
          }
          CHECK(std::abs(field_at(fr, f, x) - hj.value()) < 1e-12 * gmax);
          CHECK(std::abs(field_at(fr, pf_laplacian(fr.ctx, f), x) - lap) < 1e-10 * gmax);
          CHECK(std::abs(field_at(fr, pf_grad_dot(fr.ctx, f, f), x) - g) < 1e-10 * gmax * gmax);
        }
    }
  }
}

TEST_CASE("quadratic integrand fields match the pointwise jet evaluation") {
  std::mt19937_64 rng(13);
  for (int n : {5, 6}) {
    const WeylTensor W = default_weyl(n);
    const double tau = 1900.0;
    const NormalizedPerturbation H(W, tau);
    const Point xi = random_center(rng, n, 0.3);
    const double eps = 0.4;
    const BubbleFrame fr = bubble_frame(W, xi, eps);
    const auto hbar = pf_hbar(fr, tau);
    const auto T = quad_term_fields(fr, hbar);
    const PolyField G = gamma_bar_field(fr, hbar);
    for (int trial = 0; trial < 3; ++trial) {
      const Point x = add(xi, random_point(rng, n, 0.8));
      const TermArray ref = quad_term_values(H.jets(x, 3), bubble_jet(Dim(n), Bubble{xi, eps}, x, 3), n);
      double scale = 0;
      for (double v : ref) scale = std::max(scale, std::abs(v));
      for (int t = 0; t < kQuadTerms; ++t) {
        INFO("term " << quad_term_name(t) << " n=" << n);
        CHECK(std::abs(field_at(fr, T[t], x) - ref[t]) < 1e-10 * scale);
      }
      const double gb = gamma_bar(W, tau, Bubble{xi, eps}, x);
      CHECK(std::abs(field_at(fr, G, x) - gb) < 1e-10 * std::max(1.0, std::abs(gb)));
    }
  }
}

TEST_CASE("integrals agree with the sphere volume and radial quadrature") {
  for (int n : {5, 6, 9}) {
    const Dim dim(n);
    const double eps = 0.8;
    PolyContext ctx{n, {0, 1}, {0.0, 0.0}, eps};
    // w^(2n/(n-4)) = (2 eps/(eps^2+s))^n integrates to |S^n|.
    const PolyField crit = PolyField::poly(Poly::constant(std::pow(2 * eps, n)), 2 * n);
    CHECK(rel_err(pf_integrate(ctx, crit).value, sphere_area(n + 1)) < 1e-13);
    // (Lap w)^2 integrates to d |S^n| by the bubble equation.
    const PolyField lapw = pf_laplacian(ctx, pf_bubble(ctx));
    CHECK(rel_err(pf_integrate(ctx, lapw * lapw).value, dim.d * sphere_area(n + 1)) < 1e-12);
    // y_0^2 Q (eps^2+s)^-(n+3) against sphere moments and adaptive radial quadrature.
    PolyField f = PolyField::poly(Poly::var(0) * Poly::var(0), 2 * n + 6) * pf_passive_norm2(ctx);
    QuadSpec qs;
    qs.tol = 1e-12;
    const double rad =
        radial_integrate(RadialProfile{[&](double r) { return std::pow(r, 4) * std::pow(eps * eps + r * r, -(n + 3)); }, 2.0 * n + 2},
                         n, qs)
            .value;
    const double ang = (n - 2) * sphere_moment({2, 2}, n);
    CHECK(rel_err(pf_integrate(ctx, f).value, ang * rad) < 1e-10);
  }
}

TEST_CASE("integrability gate rejects slowly decaying fields") {
  PolyContext c7{7, {0}, {0.0}, 1.0};
  const PolyField w7 = pf_bubble(c7);
  CHECK_THROWS_AS((void)pf_integrate(c7, w7 * w7), DomainError);
  PolyContext c9{9, {0}, {0.0}, 1.0};
  const PolyField w9 = pf_bubble(c9);
  const PfIntegral I = pf_integrate(c9, w9 * w9);
  CHECK(I.slowest_power == doctest::Approx(-10.0));
  QuadSpec qs;
  qs.tol = 1e-12;
  const double rad = radial_integrate(RadialProfile{[](double r) { return std::pow(2.0 / (1 + r * r), 5.0); }, 10.0}, 9, qs).value;
  CHECK(rel_err(I.value, sphere_area(9) * rad) < 1e-10);
}

TEST_CASE("Gamma-bar is orthogonal to radial bubble directions") {
  std::mt19937_64 rng(14);
  const int n = 25;
  const WeylTensor W = default_weyl(n);
  const Point xi = random_center(rng, n, 0.3);
  const BubbleFrame fr = bubble_frame(W, xi, 0.6);
  const auto hbar = pf_hbar(fr, 1900.0);
  const PolyField G = gamma_bar_field(fr, hbar);
  for (const PolyField& g : {pf_bubble(fr.ctx), pf_bubble_deps(fr.ctx)}) {
    const double scale = std::sqrt(pf_integrate(fr.ctx, G * G).value * pf_integrate(fr.ctx, g * g).value);
    CHECK(std::abs(pf_integrate(fr.ctx, G * g).value) < 1e-12 * scale);
  }
}
