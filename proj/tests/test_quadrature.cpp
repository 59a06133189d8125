#include <cmath>
#include <random>

#include "bubbles.hpp"
#include "doctest.h"
#include "quadrature.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::rel_err;

namespace {

// Volume of the unit n-sphere S^n, frozen from a 30-digit evaluation.
// It equals the integral over R^n of (2/(1+|x|^2))^n, i.e. the bubble mass.
struct Frozen {
  int n;
  double value;
};
const Frozen kSphereVolume[] = {{5, 31.006276680299820175},
                                {6, 33.073361792319808187},
                                {10, 20.725142673288902655},
                                {17, 1.4786259590003081184},
                                {25, 0.012123872949957926675}};

// Independent oracle: 2^(n-1) |S^(n-1)| B(n/2, n/2) via lgamma.
double beta_oracle(int n) {
  double lb = 2 * std::lgamma(0.5 * n) - std::lgamma(double(n));
  double larea = std::log(2.0) + 0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n);
  return std::exp((n - 1) * std::log(2.0) + larea + lb);
}

RadialProfile sphere_density(int n) {
  return {[n](double r) { return std::pow(2.0 / (1.0 + r * r), n); }, 2.0 * n};
}

}  // namespace

TEST_CASE("radial integration of elementary profiles") {
  QuadSpec spec;
  auto r = radial_integrate(RadialProfile{[](double r) { return std::exp(-r); }, 1e9}, 1, spec);
  CHECK(std::abs(r.value - 1.0) < 1e-12);
  auto r4 = radial_integrate(RadialProfile{[](double r) { return std::exp(-r); }, 1e9}, 5, spec);
  CHECK(rel_err(r4.value, 24.0) < 1e-12);
  CHECK_THROWS_AS(radial_integrate(RadialProfile{[](double r) { return 1.0 / (1 + r * r * r * r * r); }, 5.0}, 5, spec),
                  DomainError);
}

TEST_CASE("bubble mass against the Beta closed form and frozen sphere volumes") {
  QuadSpec spec;
  for (int n = 5; n <= 25; ++n) {
    auto r = radial_integrate(sphere_density(n), n, spec);
    double total = sphere_area(n) * r.value;
    CHECK(rel_err(total, beta_oracle(n)) < 1e-8);
    CHECK(r.error <= spec.tol * std::abs(r.value));
  }
  for (auto f : kSphereVolume) {
    auto r = radial_integrate(sphere_density(f.n), f.n, spec);
    CHECK(rel_err(sphere_area(f.n) * r.value, f.value) < 1e-10);
    // Same integral through the bubble itself: w0^(2n/(n-4)).
    Dim dim(f.n);
    Bubble b{Point(f.n, 0.0), 1.0};
    auto w = [&](double rr) {
      Point x(f.n, 0.0);
      x[0] = rr;
      return bubble_value(dim, b, x);
    };
    auto lp = lp_power_radial(w, f.n, 2.0 * f.n / (f.n - 4), Region::whole(Point(f.n, 0.0), 2.0 * f.n), spec);
    CHECK(rel_err(lp.value, f.value) < 1e-9);
  }
}

TEST_CASE("sphere moments") {
  for (int n : {3, 5, 12, 25}) {
    CHECK(sphere_moment({1}, n) == 0.0);
    CHECK(sphere_moment({2, 1}, n) == 0.0);
    CHECK(rel_err(sphere_moment({2}, n), sphere_area(n) / n) < 1e-13);
    CHECK(rel_err(sphere_moment({}, n), sphere_area(n)) < 1e-14);
  }
  CHECK(rel_err(sphere_moment({2, 2}, 3), 4.0 * M_PI / 15.0) < 1e-14);
  CHECK(rel_err(sphere_moment_abs({2.0, 2.0}, 3), 4.0 * M_PI / 15.0) < 1e-14);
  CHECK(rel_err(sphere_moment_abs({1.0}, 3), 2.0 * M_PI) < 1e-14);
}

TEST_CASE("sphere moment (2,2) in three dimensions against Monte Carlo") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  const int N = 10000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    double x = g(rng), y = g(rng), z = g(rng);
    double r2 = x * x + y * y + z * z;
    double v = 4 * M_PI * x * x * y * y / (r2 * r2);
    s += v;
    s2 += v * v;
  }
  double mean = s / N, se = std::sqrt((s2 / N - mean * mean) / N);
  CHECK(std::abs(mean - sphere_moment({2, 2}, 3)) < 3 * se);
}

TEST_CASE("sphere moment consistency: summing x_i^2 lowers the degree") {
  // sum_i M(alpha + 2 e_i) = M(alpha) since |x|^2 = 1 on the sphere.
  for (int n : {3, 5, 8}) {
    std::vector<std::vector<int>> alphas{{}};
    for (int deg = 0; deg < 8; ++deg) {
      std::vector<std::vector<int>> next;
      for (auto a : alphas) {
        a.resize(n, 0);
        int first = 0;
        for (int i = n - 1; i >= 0; --i)
          if (a[i]) {
            first = i;
            break;
          }
        for (int i = first; i < n; ++i) {
          auto b = a;
          ++b[i];
          next.push_back(b);
        }
      }
      for (const auto& a : alphas) {
        std::vector<int> aa = a;
        aa.resize(n, 0);
        double sum = 0;
        for (int i = 0; i < n; ++i) {
          auto b = aa;
          b[i] += 2;
          sum += sphere_moment(b, n);
        }
        double m = sphere_moment(aa, n);
        CHECK(std::abs(sum - m) <= 1e-13 * std::max(1.0, std::abs(m)));
      }
      alphas = next;
    }
  }
}

TEST_CASE("polyradial integration: definition, linearity and gate") {
  const int n = 7;
  QuadSpec spec;
  PolyRadialTerm t1{{2}, sphere_density(n)};
  auto r1 = polyradial_integrate({t1}, n, spec);
  RadialProfile shifted{[n](double r) { return r * r * std::pow(2.0 / (1.0 + r * r), n); }, 2.0 * n - 2};
  auto rad = radial_integrate(shifted, n, spec);
  CHECK(rel_err(r1.value, sphere_moment({2}, n) * rad.value) < 1e-10);
  PolyRadialTerm t2{{0, 2, 2}, {[](double r) { return std::exp(-r * r); }, 1e9}};
  PolyRadialTerm t3{{1, 1}, {[](double r) { return std::exp(-r); }, 1e9}};
  auto a = polyradial_integrate({t1, t2}, n, spec), b = polyradial_integrate({t3}, n, spec);
  auto ab = polyradial_integrate({t1, t2, t3}, n, spec);
  CHECK(std::abs(ab.value - (a.value + b.value)) < 1e-12 * std::abs(ab.value));
  PolyRadialTerm slow{{2, 2}, {[](double r) { return std::pow(1.0 + r * r, -6.0); }, 12.0}};
  CHECK_THROWS_AS(polyradial_integrate({slow}, 8, spec), DomainError);
}

TEST_CASE("phi family is orthogonal to the bubble") {
  // Scale: Hoelder-dual norms ||phi_k||_(2n/(n+4)) ||w||_(2n/(n-4)), finite for every n >= 5.
  for (int n : {5, 9, 25}) {
    Dim dim(n);
    QuadSpec spec;
    Bubble b{Point(n, 0.0), 1.0};
    const double p = 2.0 * n / (n + 4), q = 2.0 * n / (n - 4);
    auto axis = [n](double r, int k) {
      Point x(n, 0.0);
      x[k] = r;
      return x;
    };
    auto w = [&](double r) { return bubble_value(dim, b, axis(r, 0)); };
    const double w_q = std::pow(lp_power_radial(w, n, q, Region::whole(Point(n, 0.0), 2.0 * n), spec).value, 1 / q);
    for (int k = 0; k <= n; k += (k == 0 ? 1 : n - 1)) {
      PolyRadialTerm t;
      double phi_p;
      if (k == 0) {
        t = {{}, {[&](double r) { return phi_eval(dim, b, 0, axis(r, 0)) * w(r); }, 2.0 * n}};
        phi_p = std::pow(lp_power_radial([&](double r) { return phi_eval(dim, b, 0, axis(r, 0)); }, n, p,
                                         Region::whole(Point(n, 0.0), p * (n + 4)), spec)
                             .value,
                         1 / p);
      } else {
        std::vector<int> alpha(k, 0);
        alpha[k - 1] = 1;
        auto g = [&, k](double r) { return r > 0 ? phi_eval(dim, b, k, axis(r, k - 1)) / r : 0.0; };
        t = {alpha, {[&, g](double r) { return g(r) * w(r); }, 2.0 * n + 1}};
        std::vector<double> a(k, 0.0);
        a[k - 1] = p;
        auto rad = radial_integrate(
            RadialProfile{[&, g](double r) { return std::pow(std::abs(g(r)) * r, p); }, p * (n + 4)}, n, spec);
        phi_p = std::pow(sphere_moment_abs(a, n) * rad.value, 1 / p);
      }
      auto ip = polyradial_integrate({t}, n, spec);
      CHECK(std::abs(ip.value) < 1e-10 * phi_p * w_q);
      CHECK(phi_p > 0);
    }
  }
}

TEST_CASE("L^p norms over balls, annuli and unions") {
  LpOptions opt;
  for (int n : {3, 5}) {
    auto one = [](const Point&) { return 1.0; };
    auto r = lp_norm(one, 2.0, Region::ball(Point(n, 0.0), 1.0), opt);
    CHECK(rel_err(r.value, std::sqrt(ball_volume(n, 1.0))) < 1e-12);
    auto ann = lp_power(one, 3.0, Region::annulus(Point(n, 0.5), 1.0, 2.0), opt);
    CHECK(rel_err(ann.value, ball_volume(n, 2.0) - ball_volume(n, 1.0)) < 1e-12);
  }
  // Additivity over disjoint balls for a non-radial integrand.
  const int n = 5;
  auto f = [](const Point& x) { return std::exp(-x[0] * x[0]) * (1.0 + x[1] + 0.3 * x[2] * x[3]); };
  Point c1(n, 0.0), c2(n, 0.0);
  c2[0] = 3.0;
  Region b1 = Region::ball(c1, 1.0), b2 = Region::ball(c2, 1.2);
  auto p1 = lp_power(f, 1.5, b1, opt), p2 = lp_power(f, 1.5, b2, opt);
  auto pu = lp_power(f, 1.5, Region::union_of({b1, b2}), opt);
  CHECK(rel_err(pu.value, p1.value + p2.value) < 1e-13);
  CHECK_THROWS_AS(lp_power(f, 1.5, Region::union_of({b1, Region::ball(c1, 0.5)}), opt), DomainError);
  // Polynomial integrand integrated exactly by the product sphere rule.
  auto poly = [](const Point& x) { return x[0] * x[0] * x[1] * x[1]; };
  auto pr = lp_power(poly, 1.0, Region::ball(Point(n, 0.0), 1.0), opt);
  CHECK(rel_err(pr.value, sphere_moment({2, 2}, n) / (n + 4)) < 1e-12);
}

TEST_CASE("error estimate never grows with the subdivision budget") {
  auto f = [](double x) { return std::sqrt(x) * std::sin(30 * x); };
  double prev = 1e300;
  for (int budget = 0; budget <= 60; budget += 3) {
    QuadSpec spec;
    spec.tol = 1e-15;
    spec.max_subdiv = budget;
    spec.throw_on_failure = false;
    auto r = integrate(f, 0.0, 2.0, spec);
    CHECK(r.error <= prev);
    prev = r.error;
  }
  QuadSpec strict;
  strict.tol = 1e-15;
  strict.max_subdiv = 2;
  CHECK_THROWS_AS(integrate(f, 0.0, 2.0, strict), NumericError);
}

TEST_CASE("Gauss-Jacobi rules integrate weighted polynomials exactly") {
  std::vector<double> t, w;
  gauss_jacobi(5, 1.5, 1.5, t, w);
  // Integral of t^2 (1-t^2)^1.5 over [-1,1] = B(3/2, 5/2) = pi/16.
  double s = 0;
  for (int i = 0; i < 5; ++i) s += w[i] * t[i] * t[i];
  CHECK(rel_err(s, M_PI / 16.0) < 1e-14);
  const auto& rule = sphere_rule(6, 3);
  double area = 0;
  for (double v : rule.weights) area += v;
  CHECK(rel_err(area, sphere_area(6)) < 1e-14);
}

TEST_CASE("L^(2n/(n+4)) norm of phi_k does not depend on the bubble parameters") {
  for (int n : {5, 8, 25}) {
    Dim dim(n);
    QuadSpec spec;
    const double p = 2.0 * n / (n + 4);
    std::mt19937_64 rng(n);
    auto norm = [&](const Bubble& b, int k) {
      // Integrate in z = x - xi; phi_k = z_k g(|z|) for k >= 1, radial for k = 0.
      auto at = [&](double r, int axis) {
        Point x = b.xi;
        x[axis] += r;
        return x;
      };
      spec.map_scale = b.eps;
      if (k == 0)
        return std::pow(lp_power_radial([&](double r) { return phi_eval(dim, b, 0, at(r, 0)); }, n, p,
                                        Region::whole(b.xi, p * (n + 4)), spec)
                            .value,
                        1.0 / p);
      auto rad = radial_integrate(RadialProfile{[&](double r) {
                                                  double g = r > 0 ? phi_eval(dim, b, k, at(r, k - 1)) / r : 0.0;
                                                  return std::pow(std::abs(g), p) * std::pow(r, p);
                                                },
                                                p * (n + 4)},
                                  n, spec);
      std::vector<double> a(k, 0.0);
      a[k - 1] = p;
      return std::pow(sphere_moment_abs(a, n) * rad.value, 1.0 / p);
    };
    std::uniform_real_distribution<double> ue(0.3, 3.0);
    Bubble b1{qcl::test::random_point(rng, n, 2.0), ue(rng)}, b2{qcl::test::random_point(rng, n, 2.0), ue(rng)};
    for (int k : {0, 1, n}) CHECK(rel_err(norm(b1, k), norm(b2, k)) < 1e-8);
  }
}
