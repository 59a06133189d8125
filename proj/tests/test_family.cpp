#include <doctest.h>

#include <cmath>

#include "family.hpp"
#include "quadrature.hpp"
#include "test_support.hpp"

using namespace qcl;
using qcl::test::rel_err;

namespace {

MultiBubbleConfig three_bubbles(int n) {
  MultiBubbleConfig cfg;
  cfg.alpha = 0.6;
  cfg.R = 2.0;
  const double eps[] = {0.1, 0.11, 0.08};
  for (int i = 0; i < 3; ++i) {
    Point x(n, 0.0);
    x[0] = -0.9 + 0.9 * i;
    x[1] = 0.05 * i;
    cfg.bubbles.push_back({x, eps[i], 0.2});
  }
  return cfg;
}

// eps_j int eta phi_k d_m (eta w) by sphere cubature times adaptive radial quadrature; d_0 = d/d eps
// by central differences, d_m = -d/dx_m.
double direct_entry(const Dim& dim, const GluedBubble& g, int k, int m) {
  const int n = dim.n;
  const SphereRule& rule = sphere_rule(n, 3);
  const Bubble b{g.xi, g.eps};
  const Cutoff c{g.r, g.xi};
  QuadSpec qs;
  qs.tol = 1e-9;
  qs.abs_tol = 1e-13;
  qs.throw_on_failure = false;
  auto f = [&](double r) {
    double s = 0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Point x = g.xi;
      for (int i = 0; i < n; ++i) x[i] += r * rule.node(q)[i];
      double dm;
      if (m == 0) {
        const double h = 1e-5 * g.eps;
        dm = cutoff_value(c, x) *
             (bubble_value(dim, {g.xi, g.eps + h}, x) - bubble_value(dim, {g.xi, g.eps - h}, x)) / (2 * h);
      } else {
        const Jet e = cutoff_jet(c, x, 1), w = bubble_jet(dim, b, x, 1);
        const auto sp = e.space_ptr();
        const int v = sp->var_index(m - 1);
        dm = -(e[v] * w.value() + e.value() * w[v]);
      }
      s += rule.weights[q] * cutoff_value(c, x) * phi_eval(dim, b, k, x) * dm;
    }
    return s;
  };
  return g.eps * radial_integrate(f, n, 0.0, 2 * g.r, qs, {g.r}).value;
}

}  // namespace

TEST_CASE("beta matrix of three disjoint bubbles is diagonal-dominant") {
  for (int n : {5, 9, 25}) {
    const Dim dim(n);
    const auto B = beta_matrix(dim, three_bubbles(n));
    CHECK(B.beta.rows() == 3 * (n + 1));
    CHECK(B.max_offdiagonal < 1e-8 * B.max_diagonal);
    CHECK(B.min_diagonal > 1e-3 * B.max_diagonal);
    CHECK(B.quad_error < 1e-10 * B.max_diagonal);
  }
}

TEST_CASE("beta entries agree with direct cubature") {
  const int n = 5;
  const Dim dim(n);
  const auto cfg = three_bubbles(n);
  const auto B = beta_matrix(dim, cfg);
  const auto& g = cfg.bubbles[1];
  const int o = n + 1;
  for (auto [k, m] : {std::pair{0, 0}, {1, 1}, {3, 3}, {0, 2}, {2, 0}, {1, 4}}) {
    INFO("k=" << k << " m=" << m);
    const double d = direct_entry(dim, g, k, m);
    CHECK(std::abs(d - B.beta(o + k, o + m)) < 1e-7 * B.max_diagonal);
  }
  // Different bubbles: disjoint supports.
  CHECK(B.beta(0, o) == 0.0);
  CHECK(B.beta(o + 2, 2 * o + 2) == 0.0);
}

TEST_CASE("beta diagonal scales with the bubble parameter only through the cutoff ratio") {
  const int n = 7;
  const Dim dim(n);
  MultiBubbleConfig a, b;
  a.alpha = b.alpha = 0.6;
  a.R = b.R = 2.0;
  a.bubbles.push_back({Point(n, 0.0), 0.1, 0.3});
  b.bubbles.push_back({Point(n, 0.0), 0.05, 0.15});
  const auto Ba = beta_matrix(dim, a), Bb = beta_matrix(dim, b);
  for (int k = 0; k <= n; ++k) CHECK(rel_err(Ba.beta(k, k), Bb.beta(k, k)) < 1e-9);
}
