#include <doctest.h>

#include <cmath>
#include <random>

#include "energy.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::rel_err;

namespace {

EnergyOptions fast_energy() {
  EnergyOptions eo;
  eo.grid.nodes = 400;
  eo.z_error_estimate = false;
  return eo;
}

Point generic_xi(int n, double s) {
  Point xi(n, 0.0);
  xi[0] = 0.05 * s;
  xi[1] = -0.03 * s;
  xi[2] = 0.04 * s;
  xi[3] = 0.02 * s;
  xi[7] = 0.03 * s;
  return xi;
}

double term_scale(const ReducedEnergyResult& r) {
  double s = 0;
  for (double t : r.terms) s = std::max(s, std::abs(t));
  return s;
}

}  // namespace

TEST_CASE("reduced energy vanishes for W = 0") {
  const int n = 25;
  const auto r = reduced_energy(WeylTensor(n), 1.0, generic_xi(n, 1), 1.0, fast_energy());
  for (double t : r.terms) CHECK(t == 0.0);
  CHECK(r.value == 0.0);
}

TEST_CASE("convergence gate rejects n = 24 and accepts n = 25") {
  CHECK_THROWS_AS(reduced_energy(default_weyl(24), 1.0, generic_xi(24, 1), 1.0, fast_energy()), DomainError);
  const auto r = reduced_energy(default_weyl(25), 1.0, generic_xi(25, 1), 1.0, fast_energy());
  CHECK(std::isfinite(r.value));
  // Slowest quadratic integrand decays like r^(23-n) including the volume factor r^(n-1).
  CHECK(std::abs(r.slowest_power + 24 - (23 - 25)) < 1e-12);
  CHECK_THROWS_AS(reduced_energy(default_weyl(25), 1.0, generic_xi(25, 1), 0.0), DomainError);
}

TEST_CASE("reduced energy terms sum to the value and the tenth term is resolved") {
  const int n = 25;
  EnergyOptions eo;
  eo.grid.nodes = 800;
  const auto r = reduced_energy(default_weyl(n), 1.0, generic_xi(n, 1), 1.0, eo);
  double s = 0;
  for (double t : r.terms) s += t;
  CHECK(std::abs(s - r.value) <= 1e-12 * term_scale(r));
  CHECK(r.terms[kQuadTerms] != 0.0);
  CHECK(r.z_error < 1e-6 * std::abs(r.terms[kQuadTerms]));
  CHECK(r.error_bound < 1e-10 * term_scale(r));
  CHECK(std::string(energy_term_name(kQuadTerms)) == "gamma_zbar");
}

TEST_CASE("reduced energy is even in xi") {
  const int n = 25;
  const WeylTensor W = default_weyl(n);
  for (double s : {0.5, 1.0, 2.0}) {
    const Point xi = generic_xi(n, s);
    Point mx = xi;
    for (auto& v : mx) v = -v;
    const auto a = reduced_energy(W, 300.0, xi, 1.1, fast_energy());
    const auto b = reduced_energy(W, 300.0, mx, 1.1, fast_energy());
    CHECK(std::abs(a.value - b.value) <= 1e-12 * term_scale(a));
    for (int k = 0; k < kEnergyTerms; ++k) CHECK(std::abs(a.terms[k] - b.terms[k]) <= 1e-12 * term_scale(a));
  }
}

TEST_CASE("reduced energy is invariant under simultaneous coordinate rotations") {
  const int n = 25;
  const WeylTensor W = default_weyl(n);
  const Point xi = generic_xi(n, 1);
  const auto ref = reduced_energy(W, 1.0, xi, 0.9, fast_energy());
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd O = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) O(perm[i], i) = (trial == 1 && i == 2) ? -1.0 : 1.0;
    Point rx(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rx[i] += O(i, j) * xi[j];
    const auto r = reduced_energy(W.rotated(O), 1.0, rx, 0.9, fast_energy());
    CHECK(std::abs(r.value - ref.value) <= 1e-12 * term_scale(ref));
    for (int k = 0; k < kEnergyTerms; ++k) CHECK(std::abs(r.terms[k] - ref.terms[k]) <= 1e-11 * term_scale(ref));
  }
}

TEST_CASE("local expansion integrands reproduce the reduced energy terms") {
  const int n = 25;
  const WeylTensor W = default_weyl(n);
  const Point xi = generic_xi(n, 1);
  const auto r = reduced_energy(W, 1.0, xi, 1.0, fast_energy());
  const BubbleFrame fr = bubble_frame(W, xi, 1.0);
  const auto fields = quad_term_fields(fr, pf_hbar(fr, 1.0));
  const TermArray ce = expansion_coefficients(n), cf = reduced_energy_coefficients(n);
  for (int k = 0; k < kQuadTerms; ++k) {
    const double expansion = ce[k] * pf_integrate(fr.ctx, fields[k]).value;
    INFO("term " << quad_term_name(k));
    if (k == 8) {
      // The two coefficient lists disagree on this term: -a/2 in the expansion, +b/2 in F.
      const Dim d(n);
      CHECK(std::abs(expansion * (d.b / 2) - r.terms[k] * (-d.a / 2)) <= 1e-10 * std::abs(expansion * d.b));
      CHECK(ce[k] != cf[k]);
    } else {
      CHECK(std::abs(expansion - r.terms[k]) <= 1e-10 * term_scale(r));
    }
  }
}

TEST_CASE("probe at (0, 1): vanishing xi-gradient, block structure and step stability") {
  const int n = 25;
  ProbeOptions opt;
  opt.energy = fast_energy();
  const auto st = min_probe_stability(default_weyl(n), 1.0, opt);
  const auto& p = st.coarse;
  REQUIRE(p.variables.size() == 6);  // four active coordinates, one passive, lambda
  CHECK(p.variables.back() == "lambda");
  double scale = std::abs(p.F0);
  CHECK(p.xi_gradient_norm <= 1e-10 * scale);
  CHECK(std::abs(p.lambda_gradient) > 0);
  // F is even in xi: no xi-lambda coupling.
  for (int j = 0; j + 1 < int(p.variables.size()); ++j) CHECK(std::abs(p.hessian(j, 5)) <= 1e-6 * p.hessian.norm());
  int total = 0;
  for (int m : p.multiplicity) total += m;
  CHECK(total == n + 1);
  CHECK(p.evaluations == 53);
  CHECK(st.hessian_change < 0.1);
  CHECK((p.classification == "strict-local-min" || p.classification == "saddle" ||
         p.classification == "inconclusive"));
}

TEST_CASE("stereographic identity") {
  const int n = 25;
  const Point o(n, 0.0);
  const auto w = stereographic_energy(n, radial_bubble(Dim(n), {o, 1.0}));
  const double d0 = n * (n - 4.0) * (double(n) * n - 4.0) / 16.0;
  CHECK(w.relative_gap < 1e-6);
  CHECK(rel_err(w.sphere, d0 * sphere_area(n + 1)) < 1e-10);
  for (int m : {7, 9}) {
    const auto b = stereographic_energy(m, radial_bump(Point(m, 0.0), 0.7, 4));
    CHECK(b.relative_gap < 1e-6);
    CHECK(b.flat > 0);
  }
  const auto z = stereographic_energy(n, scaled(radial_bump(o, 1.0, 4), 0.0));
  CHECK(z.flat == 0.0);
  CHECK(z.sphere == 0.0);
  CHECK_THROWS_AS(stereographic_energy(n, radial_bubble(Dim(n), {generic_xi(n, 1), 1.0})), DomainError);
}

TEST_CASE("spectral bound: equality on degree-2 harmonics, margin on higher modes") {
  const int n = 25;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = spectral_bound_check(n, random_harmonic(n, 2, seed));
    CHECK(r.precondition_ok);
    CHECK(std::abs(r.margin) <= 1e-10 * r.lhs);
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int nonneg = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = u(rng) * random_harmonic(n, 2, 1000 + trial) + u(rng) * random_harmonic(n, 3, 5000 + trial);
    const auto r = spectral_bound_check(n, v);
    CHECK(r.precondition_ok);
    nonneg += r.margin >= -1e-10 * r.lhs;
  }
  CHECK(nonneg == 100);

  SpherePoly one{n + 1, {{std::vector<int>(n + 1, 0), 1.0}}};
  CHECK_FALSE(spectral_bound_check(n, one).precondition_ok);
  std::vector<int> e(n + 1, 0);
  e[3] = 1;
  CHECK_FALSE(spectral_bound_check(n, SpherePoly{n + 1, {{e, 1.0}}} + random_harmonic(n, 2, 4)).precondition_ok);
}

TEST_CASE("degree-3 harmonics have the expected sphere eigenvalue") {
  const int n = 9;
  const auto r = spectral_bound_check(n, random_harmonic(n, 3, 11));
  const double kappa = (double(n) * n - 2.0 * n - 4.0) / 2.0;
  const double d0 = n * (n - 4.0) * (double(n) * n - 4.0) / 16.0;
  const double l3 = 3.0 * (n + 2);
  CHECK(rel_err(r.lhs, (l3 * l3 + kappa * l3 + d0) * r.l2) < 1e-12);
}

TEST_CASE("residual norm over disjoint balls is additive in the p-th power") {
  const int n = 6;
  const Dim dim(n);
  MultiBubbleConfig cfg;
  cfg.alpha = 0.6;
  cfg.R = 2.0;
  for (int i = 0; i < 3; ++i) {
    Point x(n, 0.0);
    x[0] = -0.9 + 0.9 * i;
    cfg.bubbles.push_back({x, 0.02 * (1 + 0.3 * i), 0.2});
  }
  ResidualOptions opt;
  opt.radial = true;
  opt.lp.quad.tol = 1e-9;
  const auto all = multibubble_residual_norm(n, cfg, nullptr, nullptr, opt);
  const double sep = residual_power_separate(n, cfg, nullptr, opt);
  double sum = 0;
  for (double v : all.ball_powers) sum += v;
  CHECK(rel_err(std::pow(all.norm, all.p), sum) < 1e-12);
  CHECK(rel_err(sum, sep) < 1e-8);
  CHECK(all.region == "support");
}

TEST_CASE("flat residual of a single bubble decreases with the cutoff radius") {
  const int n = 8;
  ResidualOptions opt;
  opt.radial = true;
  double prev = 1e300;
  for (double r : {0.05, 0.1, 0.2, 0.4}) {
    MultiBubbleConfig cfg;
    cfg.alpha = 0.6;
    cfg.R = 2.0;
    cfg.bubbles.push_back({Point(n, 0.0), 0.01, r});
    const double v = multibubble_residual_norm(n, cfg, nullptr, nullptr, opt).norm;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("gamma-corrected residual over the cores is quadratic in mu") {
  const int n = 5;
  PerturbationSpec sp;
  sp.n = n;
  sp.W = default_weyl(n);
  sp.tau = 1.0;
  sp.R = 2.0;
  sp.alpha = 0.6;
  Site s;
  s.lambda = 0.1;
  s.rho = 0.25;
  s.y = Point(n, 0.0);
  sp.sites = {s};
  Point xi(n, 0.0);
  xi[0] = 0.01;
  xi[1] = -0.007;
  xi[2] = 0.005;
  xi[3] = 0.004;
  ResidualOptions opt;
  opt.region = ResidualRegion::Cores;
  opt.lp.angular_order = 2;
  opt.lp.quad.tol = 1e-4;
  opt.lp.quad.throw_on_failure = false;
  opt.mode = ResidualMode::GammaCorrected;
  const auto g = residual_mu_sweep(sp, {xi}, {0.1}, {0.1, 0.2, 0.4}, opt);
  CHECK(g.slope >= 1.8);
  opt.mode = ResidualMode::Raw;
  const auto r = residual_mu_sweep(sp, {xi}, {0.1}, {0.1, 0.2, 0.4}, opt);
  CHECK(std::abs(r.slope - 1.0) < 0.05);
  for (std::size_t i = 0; i < g.norms.size(); ++i) CHECK(g.norms[i] < r.norms[i]);
}

TEST_CASE("equivariant bump is trace-free and rotation-covariant") {
  const int n = 5;
  const Point c(n, 0.1);
  const EquivariantBump h(n, c, 0.3, 0.7);
  Point x = c;
  x[0] += 0.2;
  x[3] -= 0.1;
  const auto J = h.jets(x, 2);
  double tr = 0;
  for (int i = 0; i < n; ++i) tr += J[i * n + i].value();
  CHECK(std::abs(tr) < 1e-15);
  // Swap coordinates 0 and 3 about c.
  Point y = x;
  std::swap(y[0], y[3]);
  const auto K = h.jets(y, 0);
  auto sw = [](int i) { return i == 0 ? 3 : (i == 3 ? 0 : i); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(std::abs(K[sw(i) * n + sw(j)].value() - J[i * n + j].value()) < 1e-15);
  const ScaledField s(std::make_shared<EquivariantBump>(h), -2.0);
  CHECK(std::abs(s.jets(x, 0)[1].value() + 2.0 * J[1].value()) < 1e-15);
}

TEST_CASE("total energy: homogeneity, bubble value, invariances") {
  const int n = 25;
  const Dim dim(n);
  const Point o(n, 0.0);
  const auto w0 = radial_bubble(dim, {o, 1.0});
  const double e0 = total_energy(n, w0).value;
  CHECK(rel_err(e0, dim.q_sphere() * std::pow(sphere_area(n + 1), 4.0 / n)) < 1e-10);
  for (double c : {0.5, 2.0, 10.0}) CHECK(rel_err(total_energy(n, scaled(w0, c)).value, e0) < 1e-10);
  for (double eps : {0.3, 4.0}) {
    Point xi(n, 0.0);
    xi[2] = 1.5;
    CHECK(rel_err(total_energy(n, radial_bubble(dim, {xi, eps})).value, e0) < 1e-9);
  }
  const auto bump = radial_bump(o, 0.7, 4);
  for (double c : {0.5, 2.0, 10.0})
    CHECK(rel_err(total_energy(n, scaled(bump, c)).value, total_energy(n, bump).value) < 1e-10);
}

TEST_CASE("total energy on a bubble background equals the flat energy of the product") {
  for (int n : {7, 25}) {
    const Dim dim(n);
    const Point o(n, 0.0);
    for (double eps : {1.0, 0.5}) {
      const auto phi = radial_bubble(dim, {o, eps});
      const auto u = radial_bump(o, 0.7, 5);
      RadialField pu = u;
      pu.eval = [phi, u](double r) {
        const auto a = phi.eval(r), b = u.eval(r);
        return std::array<double, 3>{a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2]};
      };
      CHECK(rel_err(total_energy(n, u, Bubble{o, eps}).value, total_energy(n, pu).value) < 1e-9);
    }
    // Constant field on the sphere: Q-curvature term only.
    RadialField one{o, [](double) { return std::array<double, 3>{1.0, 0.0, 0.0}; }, 0.0, 0.0};
    CHECK(rel_err(total_energy(n, one, Bubble{o, 1.0}).value, total_energy(n, radial_bubble(dim, {o, 1.0})).value) <
          1e-9);
  }
}
