#include <doctest.h>

#include <cmath>
#include <random>

#include "bubbles.hpp"
#include "linsolve.hpp"
#include "perturbation.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::random_point;
using qcl::test::rel_err;

namespace {

Point test_center(int n) {
  Point xi(n, 0.0);
  xi[0] = 0.3;
  xi[1] = -0.2;
  xi[2] = 0.1;
  xi[5] = 0.15;
  return xi;
}

// Paneitz eigenvalue on degree-k spherical harmonics of S^n.
double sphere_paneitz(int n, int k) {
  const double h = 0.5 * n + k;
  return (h - 2) * (h - 1) * h * (h + 1);
}

}  // namespace

TEST_CASE("Gegenbauer expansion of powers reproduces the monomials") {
  for (double alpha : {1.5, 14.5}) {
    for (int m = 0; m <= 4; ++m) {
      const auto beta = power_in_gegenbauer(m, alpha);
      for (double c : {-0.7, 0.2, 0.9}) {
        double v = 0;
        for (int k = 0; k <= m; ++k) {
          const auto g = gegenbauer_coefficients(k, alpha);
          double ck = 0;
          for (int j = k; j >= 0; --j) ck = ck * c + g[j];
          v += beta[k] * ck;
        }
        CHECK(std::abs(v - std::pow(c, m)) < 1e-13);
      }
      for (int k = m; k >= 0; k -= 2) CHECK(beta[k] != 0.0);
      for (int k = m - 1; k >= 0; k -= 2) CHECK(beta[k] == 0.0);
    }
  }
}

TEST_CASE("sector operators are symmetric") {
  const int n = 25;
  const Dim dim(n);
  RadialFn V = [&](double r) { return dim.lin_potential() * std::pow(2.0 / (1 + r * r), 4); };
  RadialSector sec(n + 4, V, 1.0, n - 12.0, 200);
  const Eigen::MatrixXd K = sec.bilaplacian(), M = sec.potential();
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * M.cwiseAbs().maxCoeff());
}

TEST_CASE("manufactured solution is recovered and converges under refinement") {
  const auto coarse = manufactured_check(25, 1.0, 3.0, 250);
  const auto fine = manufactured_check(25, 1.0, 3.0, 500);
  const auto deflt = manufactured_check(25, 1.0, 3.0, 2000);
  CHECK(deflt.max_error < 1e-6);
  CHECK(coarse.max_error / fine.max_error >= 4.0);
  CHECK(deflt.galerkin_residual < 1e-10);
  const auto trunc = manufactured_check(9, 0.5, 2.0, 1000, false);
  CHECK(trunc.max_error < 1e-6);
}

TEST_CASE("sector coercivity matches the sphere spectrum") {
  for (int n : {25, 26, 27, 28}) {
    const Dim dim(n);
    const auto ev = sector_coercivity(n, 1.0, 120);
    REQUIRE(ev.size() == 7);
    const double expect2 = 1.0 - dim.lin_potential() / sphere_paneitz(n, 2);
    for (int ell = 0; ell <= 6; ++ell) {
      INFO("n=" << n << " ell=" << ell);
      CHECK(ev[ell] > 0.0);
      const double expect = 1.0 - dim.lin_potential() / sphere_paneitz(n, std::max(ell, 2));
      CHECK(std::abs(ev[ell] - expect) < 1e-3 * expect2);
    }
  }
}

TEST_CASE("sector decomposition reassembles Gamma") {
  for (int n : {7, 25}) {
    PerturbationSpec spec;
    spec.n = n;
    spec.W = default_weyl(n);
    spec.tau = 1900.0;
    Site st;
    st.mu = 0.7;
    st.lambda = 0.8;
    st.y = Point(n, 0.0);
    st.y[3] = 0.05;
    spec.sites.push_back(st);
    const Bubble b{test_center(n), 0.9};
    GridSpec g;
    g.nodes = 60;
    const auto sol = solve_zbar(spec, 0, b, g);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      Point x = random_point(rng, n, 3.0);
      for (int k = 0; k < n; ++k) x[k] += b.xi[k];
      const double ref = gamma_eval(spec, 0, b, x);
      CHECK(std::abs(sol.gamma_value(x) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("zero Weyl tensor gives the zero solution") {
  const int n = 25;
  const auto sol = solve_zbar_normalized(WeylTensor(n), 1900.0, Bubble{test_center(n), 1.0}, GridSpec{200});
  for (double b : sol.b) CHECK(b == 0.0);
  CHECK(sol.z_norm == 0.0);
  CHECK(sol.value(Point(n, 0.1)) == 0.0);
}

TEST_CASE("linearized solve at n = 25: residual, constraints, multipliers, scaling") {
  const int n = 25;
  PerturbationSpec spec;
  spec.n = n;
  spec.W = default_weyl(n);
  spec.tau = 1900.0;
  Site st;
  st.mu = 0.5;
  st.lambda = 1.0;
  st.y = Point(n, 0.0);
  spec.sites.push_back(st);
  const auto sol = solve_zbar(spec, 0, Bubble{test_center(n), 0.9});
  CHECK(sol.whole_space);
  CHECK(sol.b.size() == std::size_t(n + 1));
  CHECK(sol.gamma_norm > 0);
  CHECK(sol.galerkin_residual < 1e-10);
  const auto v = verify_zbar(sol);
  CHECK(v.constraint_ok);
  CHECK(v.multipliers_ok);
  CHECK(v.scaling_ok);
  // The fitted decay is the leading far-field exponent 12 - n, faster than the bound 14 - n.
  CHECK(v.decay_bound_ok);
  CHECK(std::abs(v.decay_slope - v.decay_leading) < 0.5);
}
