#include <cmath>
#include <random>

#include "bubbles.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::random_point;
using qcl::test::rel_err;

TEST_CASE("dimension constants and gate") {
  CHECK_THROWS_AS(Dim(4), DomainError);
  Dim d(8);
  CHECK(d.a == doctest::Approx(4.0 / 6.0));
  CHECK(d.b == doctest::Approx((36.0 + 4.0) / (2.0 * 7.0 * 6.0)));
  CHECK(d.c == 2.0);
  CHECK(d.d == doctest::Approx(8.0 * 4.0 * 60.0 / 16.0));
}

TEST_CASE("bubble values at the origin and unit sphere") {
  for (int n = 5; n <= 12; ++n) {
    Dim dim(n);
    Bubble b{Point(n, 0.0), 1.0};
    CHECK(bubble_value(dim, b, Point(n, 0.0)) == doctest::Approx(std::pow(2.0, 0.5 * (n - 4))).epsilon(1e-15));
    Point x(n, 0.0);
    x[n - 1] = 1.0;
    CHECK(bubble_value(dim, b, x) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(bubble_value(Dim(8), {Point(8, 0.0), 1.0}, Point(8, 0.0)) == 4.0);
}

TEST_CASE("bubble scaling law") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.05, 5.0);
  for (int n : {5, 9, 25}) {
    Dim dim(n);
    for (int t = 0; t < 100; ++t) {
      double l = lam(rng);
      Point x = random_point(rng, n, 3.0);
      Point lx = x;
      for (auto& v : lx) v *= l;
      double lhs = bubble_value(dim, {Point(n, 0.0), l}, lx);
      double rhs = std::pow(l, 0.5 * (4 - n)) * bubble_value(dim, {Point(n, 0.0), 1.0}, x);
      CHECK(rel_err(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("bubble jet derivatives match the radial chain rule") {
  // Oracle: d_i w = 2 F'(s) y_i and Delta w = 4 s F'' + 2 n F' with F'(s), F''(s) from the closed form.
  Dim dim(7);
  Bubble b{{0.1, -0.2, 0.3, 0.0, 0.5, -0.1, 0.2}, 0.7};
  Point x{0.4, 0.1, -0.3, 0.2, 0.0, 0.3, -0.5};
  double s = dist2(x, b.xi), e2 = b.eps * b.eps, p = dim.p();
  double C = std::pow(2.0 * b.eps, p);
  double F1 = -p * C * std::pow(e2 + s, -p - 1);
  double F2 = p * (p + 1) * C * std::pow(e2 + s, -p - 2);
  auto g = bubble_eval(dim, b, x, 1);
  for (int i = 0; i < 7; ++i) CHECK(rel_err(g.at({i}), 2 * F1 * (x[i] - b.xi[i])) < 1e-13);
  auto h = bubble_eval(dim, b, x, 2);
  double lap = 0;
  for (int i = 0; i < 7; ++i) lap += h.at({i, i});
  CHECK(rel_err(lap, 4 * s * F2 + 2 * 7 * F1) < 1e-13);
  // Symmetry of the full tensor.
  auto t4 = bubble_eval(dim, b, x, 4);
  CHECK(t4.at({0, 1, 2, 3}) == doctest::Approx(t4.at({3, 2, 1, 0})));
  CHECK_THROWS_AS(bubble_eval(dim, b, x, 5), DomainError);
}

TEST_CASE("bubble PDE residual from Laurent form and from jets") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ue(0.2, 3.0);
  for (int n = 5; n <= 30; ++n) {
    Dim dim(n);
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
      Bubble b{random_point(rng, n, 2.0), ue(rng)};
      Point x = random_point(rng, n, 5.0);
      double ref = dim.d * std::pow(bubble_value(dim, b, x), dim.crit());
      worst = std::max(worst, std::abs(bubble_pde_residual(dim, b, x)) / ref);
    }
    CHECK(worst < 1e-9);
  }
  // Jet route at moderate n.
  for (int n : {5, 6, 8}) {
    Dim dim(n);
    Bubble b{Point(n, 0.1), 0.8};
    Point x(n, 0.0);
    x[0] = 0.3;
    x[n - 1] = -0.7;
    Jet j = bubble_jet(dim, b, x, 4);
    double bil = 0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) bil += j.derivative({i, i, k, k});
    CHECK(rel_err(bil, bubble_bilaplacian(dim, b, x)) < 1e-11);
  }
  // Perturbing the coefficient by one shifts the residual by exactly -w^crit.
  Dim dim(8);
  Bubble b{Point(8, 0.0), 1.0};
  Point x(8, 0.2);
  double w = bubble_value(dim, b, x);
  double r0 = bubble_pde_residual(dim, b, x);
  double r1 = bubble_pde_residual(dim, b, x, dim.d + 1.0);
  CHECK(rel_err(r1 - r0, -std::pow(w, dim.crit())) < 1e-10);
  CHECK(std::abs(bubble_pde_residual(dim, b, Point(8, 0.0))) < 1e-9 * dim.d * std::pow(4.0, dim.crit()));
}

TEST_CASE("phi family closed forms") {
  for (int n : {5, 8, 25}) {
    Dim dim(n);
    Bubble b0{Point(n, 0.0), 1.0};
    CHECK(phi_eval(dim, b0, 0, Point(n, 0.0)) == doctest::Approx(-std::pow(2.0, 0.5 * (n + 4))).epsilon(1e-14));
    for (int k = 1; k <= n; ++k) CHECK(phi_eval(dim, b0, k, Point(n, 0.0)) == 0.0);
    std::mt19937_64 rng(3 + n);
    std::uniform_real_distribution<double> ue(0.3, 2.0);
    for (int t = 0; t < 100; ++t) {
      Bubble b{random_point(rng, n, 1.0), ue(rng)};
      Point x = random_point(rng, n, 2.0);
      for (int k : {0, 1, n}) {
        double a = phi_eval(dim, b, k, x), c = phi_product_form(dim, b, k, x);
        CHECK(std::abs(a - c) <= 1e-12 * std::max(1.0, std::abs(a)));
      }
    }
  }
}

TEST_CASE("cutoff plateau, support, monotonicity and derivative scaling") {
  Point q{0.0, 0.0, 0.0, 0.0, 0.0};
  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    Cutoff c{t, q};
    Point in{t / 2, 0, 0, 0, 0}, out{3 * t, 0, 0, 0, 0};
    CHECK(cutoff_value(c, in) == 1.0);
    CHECK(cutoff_value(c, out) == 0.0);
    for (int k = 1; k <= 4; ++k) {
      for (double v : cutoff_eval(c, in, k).v) CHECK(v == 0.0);
      for (double v : cutoff_eval(c, out, k).v) CHECK(v == 0.0);
    }
    double prev = 1.0, sup = 0.0;
    for (int i = 0; i <= 400; ++i) {
      double r = t * (0.9 + 1.2 * i / 400.0);
      auto e = cutoff_profile(r / t);
      CHECK(e.value() <= prev + 1e-15);
      CHECK(e.value() >= 0.0);
      CHECK(e.value() <= 1.0);
      prev = e.value();
      for (int k = 1; k <= 4; ++k) sup = std::max(sup, std::abs(e.deriv(k) * std::pow(t, -k)) * std::pow(t, k));
    }
    CHECK(sup <= cutoff_constant() * (1 + 1e-12));
  }
  CHECK(cutoff_constant() > 1.0);
  CHECK(std::isfinite(cutoff_constant()));
}

TEST_CASE("cutoff jet agrees with radial derivative") {
  Cutoff c{0.5, {0.1, 0.0, 0.0, 0.0, 0.0}};
  Point x{0.75, 0.0, 0.0, 0.0, 0.0};
  Jet j = cutoff_jet(c, x, 4);
  auto e = cutoff_profile(0.65 / 0.5);
  CHECK(rel_err(j.derivative({0}), e.deriv(1) / 0.5) < 1e-12);
  CHECK(rel_err(j.derivative({0, 0}), e.deriv(2) / 0.25) < 1e-12);
  CHECK(rel_err(j.derivative({0, 0, 0, 0}), e.deriv(4) / 0.0625) < 1e-12);
}

TEST_CASE("multi-bubble gluing") {
  const int n = 6;
  Dim dim(n);
  MultiBubbleConfig cfg;
  cfg.alpha = 0.5;
  cfg.R = 10.0;
  cfg.bubbles = {{{2.0, 0, 0, 0, 0, 0}, 0.2, 0.5}, {{-2.0, 0, 0, 0, 0, 0}, 0.25, 0.6}, {{0, 3.0, 0, 0, 0, 0}, 0.3, 0.7}};
  CHECK_FALSE(multibubble_violation(cfg).has_value());
  std::mt19937_64 rng(5);
  const double q = 2.0 * n / (n - 4);
  for (int t = 0; t < 200; ++t) {
    Point x = random_point(rng, n, 4.0);
    double W = multibubble_value(dim, cfg, x);
    double sum_q = 0;
    bool inside = false;
    for (const auto& b : cfg.bubbles) {
      double wb = cutoff_value({b.r, b.xi}, x) * bubble_value(dim, {b.xi, b.eps}, x);
      sum_q += std::pow(wb, q);
      inside = inside || std::sqrt(dist2(x, b.xi)) < 2 * b.r;
    }
    if (!inside) CHECK(W == 0.0);
    CHECK(rel_err(std::pow(W, q), sum_q) < 1e-13);
    auto perm = cfg;
    std::swap(perm.bubbles[0], perm.bubbles[2]);
    CHECK(multibubble_value(dim, perm, x) == doctest::Approx(W).epsilon(1e-15));
  }
  MultiBubbleConfig one{{cfg.bubbles[0]}, 0.5, 10.0};
  Point x{2.3, 0.4, 0, 0, 0, 0.1};
  CHECK(multibubble_value(dim, one, x) ==
        doctest::Approx(cutoff_value({0.5, cfg.bubbles[0].xi}, x) * bubble_value(dim, {cfg.bubbles[0].xi, 0.2}, x)));
  auto bad = cfg;
  bad.bubbles[1].xi = {1.0, 0, 0, 0, 0, 0};
  REQUIRE(multibubble_violation(bad).has_value());
  CHECK(*multibubble_violation(bad) == "|xi_i - xi_j| > 2(r_i + r_j)");
  auto bad2 = cfg;
  bad2.bubbles[0].eps = 0.0;
  CHECK_THROWS_AS(multibubble_value(dim, bad2, x), DomainError);
  auto bad3 = cfg;
  bad3.bubbles[0].eps = 0.1;
  bad3.bubbles[2].eps = 0.34;
  CHECK(*multibubble_violation(bad3) == "1/2 < eps_i/eps_j < 2");
}
