#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "curvature.hpp"
#include "doctest.h"
#include "perturbation.hpp"
#include "quadrature.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::random_point;
using qcl::test::rel_err;

namespace {

WeylTensor random_weyl(int n, std::uint64_t seed, int count = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> idx(0, n - 1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<WeylTensor::Entry> s;
  for (int c = 0; c < count; ++c) s.push_back({idx(rng), idx(rng), idx(rng), idx(rng), g(rng)});
  return weyl_from_seed(n, s);
}

PerturbationSpec one_site(int n, const WeylTensor& W, double tau, double mu, double lambda) {
  PerturbationSpec sp;
  sp.n = n;
  sp.W = W;
  sp.tau = tau;
  sp.R = 2.0;
  sp.alpha = 0.9;
  Point y(n, 0.0);
  y[0] = 0.05;
  sp.sites.push_back({mu, lambda, 0.2, y});
  return sp;
}

class MulField : public TensorField {
 public:
  MulField(std::shared_ptr<const TensorField> base, double s) : base_(std::move(base)), s_(s) {}
  int dim() const override { return base_->dim(); }
  JetMatrix jets(const Point& x, int degree) const override {
    JetMatrix J = base_->jets(x, degree);
    for (auto& j : J) j *= s_;
    return J;
  }

 private:
  std::shared_ptr<const TensorField> base_;
  double s_;
};

}  // namespace

TEST_CASE("Weyl builder produces admissible tensors") {
  WeylTensor W = default_weyl(6);
  WeylReport rep = weyl_validate(W);
  CHECK(rep.ok());
  CHECK(W.support() == std::vector<int>{0, 1, 2, 3});
  CHECK(W.at(0, 1, 2, 3) == doctest::Approx(1.0));
  CHECK(W.at(0, 2, 3, 1) == doctest::Approx(-0.5));
  CHECK(W.at(3, 2, 1, 0) == doctest::Approx(1.0));
  for (int n : {4, 5, 7, 9}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      WeylTensor V = random_weyl(n, seed);
      WeylReport r = weyl_validate(V, 1e-12);
      CHECK(r.symmetries);
      CHECK(r.bianchi);
      CHECK(r.trace_free);
      // Rebuilding from an admissible tensor reproduces it.
      WeylTensor V2 = weyl_from_seed(n, V.entries());
      double diff = 0;
      for (const auto& e : V.entries()) diff = std::max(diff, std::abs(V2.at(e.i, e.j, e.k, e.l) - e.value));
      CHECK(diff < 1e-13);
    }
  }
  // Seeds with a repeated index pair produce a Ricci part that is removed.
  WeylTensor S = weyl_from_seed(5, {{0, 1, 0, 1, 1.0}, {2, 3, 2, 3, 2.0}});
  CHECK(weyl_validate(S).ok());
}

TEST_CASE("Weyl validation reports each family") {
  WeylTensor Z(5);
  WeylReport rz = weyl_validate(Z);
  CHECK(rz.symmetries);
  CHECK(rz.bianchi);
  CHECK(rz.trace_free);
  CHECK_FALSE(rz.nondegenerate);

  WeylTensor A(5);
  A.ref(0, 1, 0, 1) = 1.0;
  A.ref(1, 0, 0, 1) = 1.0;
  WeylReport ra = weyl_validate(A);
  CHECK_FALSE(ra.symmetries);
  REQUIRE(ra.symmetry_violation);
  CHECK(*ra.symmetry_violation == std::array<int, 4>{0, 1, 0, 1});

  // Curvature-symmetric but not Bianchi: totally antisymmetric tensor.
  WeylTensor B(5);
  const int p[4] = {0, 1, 2, 3};
  std::array<int, 4> perm{0, 1, 2, 3};
  do {
    int inv = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) inv += perm[a] > perm[b];
    B.ref(p[perm[0]], p[perm[1]], p[perm[2]], p[perm[3]]) = inv % 2 ? -1.0 : 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  WeylReport rb = weyl_validate(B);
  CHECK(rb.symmetries);
  CHECK_FALSE(rb.bianchi);

  // Round-sphere curvature tensor: has a trace.
  WeylTensor C(5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) {
        C.ref(i, j, i, j) = 1.0;
        C.ref(i, j, j, i) = -1.0;
      }
  WeylReport rc = weyl_validate(C);
  CHECK(rc.symmetries);
  CHECK(rc.bianchi);
  CHECK_FALSE(rc.trace_free);
}

TEST_CASE("rotated Weyl tensors stay admissible") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 6;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd O = qr.householderQ();
  WeylTensor W = default_weyl(n), V = W.rotated(O);
  CHECK(weyl_validate(V, 1e-12).ok());
  Point a = random_point(rng, n, 1.0), b = random_point(rng, n, 1.0);
  Eigen::Map<Eigen::VectorXd> ea(a.data(), n), eb(b.data(), n);
  Eigen::VectorXd oa = O.transpose() * ea, ob = O.transpose() * eb;
  CHECK(rel_err(V.contract(a.data(), b.data(), a.data(), b.data()),
                W.contract(oa.data(), ob.data(), oa.data(), ob.data())) < 1e-12);
}

TEST_CASE("quadratic form H: trace-free, radial gauge, divergence-free") {
  std::mt19937_64 rng(11);
  for (int n : {5, 7}) {
    WeylTensor W = random_weyl(n, 40 + n);
    NormalizedPerturbation hb(W, 0.7);
    for (int trial = 0; trial < 20; ++trial) {
      Point x = random_point(rng, n, 0.9);
      Eigen::MatrixXd H = weyl_quadratic(W, x);
      const double scale = std::max(1e-300, H.norm());
      CHECK(std::abs(H.trace()) < 1e-13 * scale);
      CHECK((H - H.transpose()).norm() < 1e-14 * scale);
      Eigen::Map<Eigen::VectorXd> ex(x.data(), n);
      CHECK((H * ex).norm() < 1e-13 * scale);
      JetMatrix J = hb.jets(x, 1);
      for (int k = 0; k < n; ++k) {
        double div = 0, mag = 0;
        for (int i = 0; i < n; ++i) {
          div += J[i * n + k].derivative({i});
          mag += std::abs(J[i * n + k].derivative({i}));
        }
        CHECK(std::abs(div) <= 1e-12 * (1.0 + mag));
      }
    }
  }
}

TEST_CASE("model perturbation: form, support and derivatives") {
  const int n = 5;
  std::mt19937_64 rng(5);
  PerturbationSpec sp = one_site(n, default_weyl(n), 0.3, 0.5, 0.08);
  sp.sites[0].rho = 0.16;
  Point y2(n, 0.0);
  y2[0] = -0.95;
  sp.sites.push_back({0.7, 0.05, 0.12, y2});
  REQUIRE_FALSE(spec_violation(sp));
  ModelPerturbation h(sp);
  const Quartic f{sp.tau};
  for (int trial = 0; trial < 1000; ++trial) {
    Point x = random_point(rng, n, 1.2);
    Eigen::MatrixXd v = h.value(x);
    CHECK(std::abs(v.trace()) < 1e-14 * (1.0 + v.norm()));
    CHECK((v - h_value(sp, x)).norm() <= 1e-14 * (1.0 + v.norm()));
    if (std::sqrt(dist2(x, Point(n, 0.0))) >= sp.R) CHECK(v.norm() == 0.0);
    bool inside = false;
    for (const auto& s : sp.sites) {
      Point z(n);
      for (int i = 0; i < n; ++i) z[i] = x[i] - s.y[i];
      const double r2 = dist2(x, s.y);
      if (r2 <= 4 * s.rho * s.rho) inside = true;
      if (r2 <= s.rho * s.rho) {
        Eigen::MatrixXd m = s.mu * std::pow(s.lambda, 8) * f(r2 / (s.lambda * s.lambda)) * weyl_quadratic(sp.W, z);
        CHECK((v - m).norm() <= 1e-14 * (1.0 + m.norm()));
        Eigen::Map<Eigen::VectorXd> ez(z.data(), n);
        CHECK((v * ez).norm() <= 1e-13 * (1e-30 + v.norm() * ez.norm()));
      }
    }
    if (!inside) CHECK(v.norm() == 0.0);
  }
  // Analytic derivatives against fourth-order central differences of values.
  for (int trial = 0; trial < 5; ++trial) {
    Point x = random_point(rng, n, 0.12);
    x[0] += sp.sites[0].y[0];
    JetMatrix J = h.jets(x, 2);
    const double step = 5e-4;
    double gmax = 0;
    for (const auto& j : J)
      for (int a = 0; a < n; ++a) gmax = std::max(gmax, std::abs(j.derivative({a})));
    for (int a = 0; a < n; ++a) {
      auto at = [&](double t) {
        Point xs = x;
        xs[a] += t;
        return h_value(sp, xs);
      };
      Eigen::MatrixXd fd = (8.0 * (at(step) - at(-step)) - (at(2 * step) - at(-2 * step))) / (12 * step);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) CHECK(std::abs(fd(i, k) - J[i * n + k].derivative({a})) < 1e-8 * gmax);
    }
  }
}

TEST_CASE("sup-norm of the model perturbation stays below alpha") {
  const int n = 5;
  std::mt19937_64 rng(8);
  PerturbationSpec sp = one_site(n, default_weyl(n), 1.0, 0.5, 0.01);
  sp.sites[0].rho = 0.05;
  ModelPerturbation h(sp);
  std::vector<Point> pts;
  for (int k = 0; k < 300; ++k) {
    Point x = random_point(rng, n, 2.0 * sp.sites[0].rho);
    for (int i = 0; i < n; ++i) x[i] += sp.sites[0].y[i];
    pts.push_back(x);
  }
  const double sup = h_sup_norm(h, pts);
  CHECK(sup > 0.0);
  CHECK(sup <= sp.alpha);
}

TEST_CASE("Gamma closed form matches the four-term contraction") {
  std::mt19937_64 rng(21);
  for (int n : {5, 6}) {
    WeylTensor W = random_weyl(n, 70 + n);
    for (int trial = 0; trial < 6; ++trial) {
      Point y = random_point(rng, n, 0.3);
      Bubble b{random_point(rng, n, 0.5), 0.3 + 0.1 * trial};
      Point x = random_point(rng, n, 1.0);
      const double mu = 0.6, lambda = 0.7;
      PerturbationSpec sp;
      sp.n = n;
      sp.W = W;
      sp.tau = 2.5;
      sp.sites.push_back({mu, lambda, 1.0, y});
      const double ref = gamma_reference(W, sp.tau, mu, lambda, y, b, x);
      const double val = gamma_eval(sp, 0, b, x);
      CHECK(std::abs(val - ref) <= 1e-10 * (std::abs(ref) + 1e-3 * std::abs(val) + 1e-30) + 1e-12 * std::abs(ref));
      CHECK(rel_err(val, ref) < 1e-9);
    }
  }
}

TEST_CASE("Gamma: vanishing cases and scaling law") {
  std::mt19937_64 rng(2);
  for (int n : {5, 9, 16, 25}) {
    WeylTensor W = default_weyl(n);
    WeylTensor Z(n);
    for (int trial = 0; trial < 20; ++trial) {
      Bubble b{random_point(rng, n, 0.8), 0.5 + 0.05 * trial};
      Point x = random_point(rng, n, 1.5);
      CHECK(gamma_bar(Z, 1.0, b, x) == 0.0);
      CHECK(gamma_bar(W, 1.0, Bubble{Point(n, 0.0), b.eps}, x) == 0.0);
      const double mu = 0.3, lambda = 0.01;
      Point y = random_point(rng, n, 0.4);
      PerturbationSpec sp;
      sp.n = n;
      sp.W = W;
      sp.tau = -3.0;
      sp.sites.push_back({mu, lambda, 0.1, y});
      Bubble bs{b.xi, lambda * b.eps};
      Point xs(n);
      for (int i = 0; i < n; ++i) {
        bs.xi[i] = lambda * b.xi[i] + y[i];
        xs[i] = lambda * x[i] + y[i];
      }
      const double lhs = gamma_eval(sp, 0, bs, xs);
      const double rhs = mu * std::pow(lambda, 0.5 * (16 - n)) * gamma_bar(W, sp.tau, b, x);
      CHECK(rel_err(lhs, rhs) < 1e-10);
    }
  }
}

TEST_CASE("Gamma-bar has no degree-0 or degree-1 angular component") {
  const int n = 5;
  WeylTensor W = random_weyl(n, 99);
  const SphereRule& rule = sphere_rule(n, 5);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    Bubble b{random_point(rng, n, 0.7), 0.4 + 0.2 * trial};
    for (double r : {0.05, 0.3, 1.0, 4.0}) {
      double m0 = 0, mabs = 0;
      std::vector<double> m1(n, 0.0);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        Point x(n);
        for (int i = 0; i < n; ++i) x[i] = b.xi[i] + r * rule.node(q)[i];
        const double g = gamma_bar(W, 0.8, b, x);
        m0 += rule.weights[q] * g;
        mabs += rule.weights[q] * std::abs(g);
        for (int i = 0; i < n; ++i) m1[i] += rule.weights[q] * g * rule.node(q)[i];
      }
      REQUIRE(mabs > 0.0);
      CHECK(std::abs(m0) < 1e-10 * mabs);
      for (double v : m1) CHECK(std::abs(v) < 1e-10 * mabs);
    }
  }
}

TEST_CASE("Gamma far-field bound ratio is finite") {
  const int n = 9;
  std::mt19937_64 rng(6);
  PerturbationSpec sp = one_site(n, default_weyl(n), 1.0, 0.5, 0.01);
  const auto& s = sp.sites[0];
  Point xi = random_point(rng, n, 0.3 * s.lambda);
  for (int i = 0; i < n; ++i) xi[i] += s.y[i];
  Bubble b{xi, 1.1 * s.lambda};
  std::vector<Point> pts;
  for (int k = 0; k < 1000; ++k) {
    Point x = random_point(rng, n, std::pow(10.0, -2.0 + 4.0 * k / 1000.0));
    for (int i = 0; i < n; ++i) x[i] += s.y[i];
    pts.push_back(x);
  }
  const double ratio = gamma_bound_ratio(sp, 0, b, pts);
  CHECK(std::isfinite(ratio));
  CHECK(ratio > 0.0);
}

TEST_CASE("parameter domains") {
  const int n = 6;
  PerturbationSpec sp = one_site(n, default_weyl(n), 0.0, 0.5, 0.05);
  CHECK_FALSE(spec_violation(sp));
  auto bad = sp;
  bad.sites[0].rho = 0.09;
  CHECK(*spec_violation(bad) == "site 1: 2 lambda <= rho");
  bad = sp;
  bad.alpha = 0.2;
  CHECK(*spec_violation(bad) == "site 1: (3/2 - alpha) lambda < alpha rho");
  bad = sp;
  bad.sites[0].mu = 1.5;
  CHECK(*spec_violation(bad) == "site 1: 0 < mu <= 1");
  bad = sp;
  Point y2 = sp.sites[0].y;
  y2[1] = 0.3;
  bad.sites.push_back({0.5, 0.05, 0.2, y2});
  CHECK(spec_violation(bad)->find("|y_i - y_j|") != std::string::npos);
  CHECK_THROWS_AS((void)ModelPerturbation(bad), DomainError);

  // Hand-built centers too close for the gluing condition.
  PerturbationSpec two = sp;
  Point y3(n, 0.0);
  y3[0] = -0.9;
  two.sites.push_back({0.5, 0.05, 0.1, y3});
  REQUIRE_FALSE(spec_violation(two));
  MultiBubbleConfig cfg = glue_config(two, {two.sites[0].y, two.sites[1].y}, {0.05, 0.05});
  CHECK_FALSE(multibubble_violation(cfg));
  cfg.bubbles[1].xi = cfg.bubbles[0].xi;
  cfg.bubbles[1].xi[1] += 0.3;
  CHECK(multibubble_violation(cfg)->find("2(r_i + r_j)") != std::string::npos);

  // Random samples of the window lie in the gluing domain.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int in_d = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Point> xi;
    std::vector<double> eps;
    const double base = 0.55 + 0.9 * u(rng);
    for (const auto& s : two.sites) {
      Point p = random_point(rng, n, s.lambda * 0.999);
      for (int i = 0; i < n; ++i) p[i] += s.y[i];
      xi.push_back(p);
      eps.push_back(s.lambda * std::clamp(base * (0.97 + 0.06 * u(rng)), 0.501, 1.499));
    }
    REQUIRE_FALSE(omega_violation(two, xi, eps));
    if (!multibubble_violation(glue_config(two, xi, eps))) ++in_d;
  }
  CHECK(in_d == 1000);
  CHECK(*omega_violation(two, {two.sites[0].y, two.sites[1].y}, {0.05, 0.2}) ==
        "bubble 2: lambda/2 < eps < 3 lambda/2");
}

TEST_CASE("final parameter sequence") {
  for (int N : {40, 50, 200}) {
    FinalSequence fs = final_sequence(N, 25);
    CHECK(fs.exact_match);
    CHECK(fs.lambda == std::ldexp(1.0, -N));
    CHECK(fs.y[0] == 1.0 / N);
    CHECK(fs.rho == 1.0 / (4.0 * N * N));
    CHECK(std::abs(fs.log2_smallness - fs.log2_closed_form) < 1e-9 * std::abs(fs.log2_closed_form));
    CHECK(fs.two_exp_den == 3);
    CHECK(fs.two_exp_num == -N);
  }
  // The quantity only decreases past the turning point 126/ln 2 for n = 25.
  const double Nstar = smallness_turning_point(25);
  CHECK(Nstar == doctest::Approx(126.0 / std::log(2.0)));
  CHECK(final_sequence(50, 25).log2_smallness > final_sequence(40, 25).log2_smallness);
  CHECK(final_sequence(200, 25).log2_smallness < final_sequence(190, 25).log2_smallness);
  CHECK(std::isinf(smallness_turning_point(24)));
  CHECK(final_sequence(60, 40).log2_smallness < final_sequence(50, 40).log2_smallness);
}

TEST_CASE("expansion remainders scale with the perturbation size") {
  const int n = 5;
  auto base = std::make_shared<NormalizedPerturbation>(default_weyl(n), 0.5);
  Point x(n, 0.0);
  x[0] = 0.09;
  x[1] = -0.05;
  x[2] = 0.04;
  x[3] = 0.02;
  Bubble b{Point(n, 0.02), 0.3};
  const Dim dim(n);
  std::vector<double> mu{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  auto res = expansion_residual([&](double m) { return std::make_shared<MulField>(base, m); }, bubble_field(dim, b), x,
                                mu);
  CHECK(res.q_slope >= 2.8);
  CHECK(res.bilap_slope >= 1.8);
  CHECK(res.div_ric_slope >= 1.8);
  auto zero = expansion_residual([&](double) { return std::make_shared<ZeroTensorField>(n); }, bubble_field(dim, b), x,
                                 {1e-2, 1e-1});
  for (double v : zero.q_remainder) CHECK(v == 0.0);
  for (double v : zero.bilap_remainder) CHECK(v == 0.0);
}
