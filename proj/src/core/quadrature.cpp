#include "quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

namespace qcl {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 21>;

struct Panel {
  double a, b, value, error, l1;
};

struct PanelOrder {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  }
};

Panel gk_panel(const std::function<double(double)>& f, double a, double b) {
  static const auto& xs = GK::abscissa();
  static const auto& wk = GK::weights();
  static const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double k = wk[0] * fc, g = 0.0, l1 = wk[0] * std::abs(fc);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    double f1 = f(c - h * xs[i]), f2 = f(c + h * xs[i]);
    k += wk[i] * (f1 + f2);
    l1 += wk[i] * (std::abs(f1) + std::abs(f2));
    if (i % 2 == 1) g += wg[i / 2] * (f1 + f2);
  }
  Panel p{a, b, k * h, std::abs((k - g) * h), l1 * std::abs(h)};
  if (!std::isfinite(p.value)) throw NumericError("integrand is not finite on [" + std::to_string(a) + ", " +
                                                  std::to_string(b) + "]");
  return p;
}

bool accepted(double err, double value, double l1, const QuadSpec& spec) {
  const double floor = 50.0 * std::numeric_limits<double>::epsilon() * l1;
  return err <= std::max({spec.tol * std::abs(value), spec.abs_tol, floor});
}

}  // namespace

QuadResult& operator+=(QuadResult& a, const QuadResult& b) {
  a.value += b.value;
  a.error += b.error;
  a.l1 += b.l1;
  a.subdivisions += b.subdivisions;
  a.converged = a.converged && b.converged;
  return a;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadSpec& spec,
                     const std::vector<double>& breaks) {
  if (!(spec.tol > 0)) throw DomainError("quadrature tolerance must be positive");
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  std::priority_queue<Panel, std::vector<Panel>, PanelOrder> heap;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) heap.push(gk_panel(f, cuts[i], cuts[i + 1]));

  auto totals = [&heap]() {
    // Summation over a copy in a fixed order keeps results deterministic.
    auto h = heap;
    std::vector<Panel> v;
    while (!h.empty()) {
      v.push_back(h.top());
      h.pop();
    }
    std::sort(v.begin(), v.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    QuadResult r;
    for (const auto& p : v) {
      r.value += p.value;
      r.error += p.error;
      r.l1 += p.l1;
    }
    return r;
  };

  QuadResult best = totals();
  best.converged = accepted(best.error, best.value, best.l1, spec);
  int splits = 0;
  while (!best.converged && splits < spec.max_subdiv && !heap.empty()) {
    Panel worst = heap.top();
    heap.pop();
    double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    heap.push(gk_panel(f, worst.a, mid));
    heap.push(gk_panel(f, mid, worst.b));
    ++splits;
    QuadResult cur = totals();
    cur.subdivisions = splits;
    cur.converged = accepted(cur.error, cur.value, cur.l1, spec);
    if (cur.error <= best.error || cur.converged) best = cur;
  }
  best.subdivisions = splits;
  if (!best.converged && spec.throw_on_failure)
    throw NumericError("quadrature tolerance " + std::to_string(spec.tol) + " not met after " +
                       std::to_string(splits) + " subdivisions (error estimate " + std::to_string(best.error) +
                       ", value " + std::to_string(best.value) + ")");
  return best;
}

QuadResult radial_integrate(const RadialProfile& f, int n, const QuadSpec& spec) {
  if (!(f.hint > n))
    throw DomainError("convergence gate: decay exponent " + std::to_string(f.hint) +
                      " must exceed dimension " + std::to_string(n));
  const double L = spec.map_scale;
  if (!(L > 0)) throw DomainError("radial map scale must be positive");
  const double h = 0.5 * (n - 1);
  auto g = [&](double s) {
    if (s >= 1.0) return 0.0;
    const double r = L * s / (1.0 - s);
    const double fr = f.f(r);
    if (fr == 0.0) return 0.0;
    const double rh = std::pow(r, h);
    return fr * rh * rh * L / ((1.0 - s) * (1.0 - s));
  };
  return integrate(g, 0.0, 1.0, spec, {0.5});
}

QuadResult radial_integrate(const std::function<double(double)>& f, int n, double r0, double r1,
                            const QuadSpec& spec, const std::vector<double>& breaks) {
  if (!(r0 >= 0 && r1 >= r0)) throw DomainError("radial interval must satisfy 0 <= r0 <= r1");
  auto g = [&](double r) { return f(r) * std::pow(r, n - 1); };
  return integrate(g, r0, r1, spec, breaks);
}

double log_sphere_area(int n) { return std::log(2.0) + 0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n); }

double sphere_area(int n) { return std::exp(log_sphere_area(n)); }

double ball_volume(int n, double r) { return sphere_area(n) * std::pow(r, n) / n; }

double sphere_moment(const std::vector<int>& alpha, int n) {
  if (int(alpha.size()) > n) throw DomainError("multi-index longer than the dimension");
  int total = 0;
  for (int a : alpha) {
    if (a < 0) throw DomainError("multi-index entries must be non-negative");
    if (a % 2) return 0.0;
    total += a;
  }
  double lg = std::log(2.0) + (n - int(alpha.size())) * 0.5 * std::log(M_PI) - std::lgamma(0.5 * (total + n));
  for (int a : alpha) lg += std::lgamma(0.5 * (a + 1));
  return std::exp(lg);
}

double sphere_moment_abs(const std::vector<double>& a, int n) {
  if (int(a.size()) > n) throw DomainError("exponent list longer than the dimension");
  double total = 0;
  for (double v : a) {
    if (!(v > -1)) throw DomainError("sphere moment exponents must exceed -1");
    total += v;
  }
  double lg = std::log(2.0) + (n - int(a.size())) * 0.5 * std::log(M_PI) - std::lgamma(0.5 * (total + n));
  for (double v : a) lg += std::lgamma(0.5 * (v + 1));
  return std::exp(lg);
}

QuadResult polyradial_integrate(const std::vector<PolyRadialTerm>& terms, int n, const QuadSpec& spec) {
  for (const auto& t : terms) {
    int deg = 0;
    for (int a : t.alpha) deg += a;
    if (!(t.f.hint - deg > n))
      throw DomainError("convergence gate: term of degree " + std::to_string(deg) + " with decay " +
                        std::to_string(t.f.hint) + " diverges in dimension " + std::to_string(n));
  }
  QuadResult total;
  for (const auto& t : terms) {
    const double m = sphere_moment(t.alpha, n);
    if (m == 0.0) continue;
    int deg = 0;
    for (int a : t.alpha) deg += a;
    RadialProfile g{[&t, deg](double r) { return t.f.f(r) * std::pow(r, deg); }, t.f.hint - deg};
    QuadResult r = radial_integrate(g, n, spec);
    r.value *= m;
    r.error *= std::abs(m);
    r.l1 *= std::abs(m);
    total += r;
  }
  return total;
}

void gauss_jacobi(int m, double a, double b, std::vector<double>& t, std::vector<double>& w) {
  if (m < 1) throw DomainError("Gauss-Jacobi rule needs at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    const double s = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < m) {
      const double j = k + 1.0, s1 = 2.0 * j + a + b;
      const double off =
          std::sqrt(4.0 * j * (j + a) * (j + b) * (j + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0)));
      J(k, k + 1) = J(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 =
      std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1) + std::lgamma(b + 1) - std::lgamma(a + b + 2));
  t.resize(m);
  w.resize(m);
  for (int k = 0; k < m; ++k) {
    t[k] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    w[k] = mu0 * v * v;
  }
}

const SphereRule& sphere_rule(int n, int m) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, SphereRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({n, m});
  if (it != cache.end()) return it->second;
  if (n < 2 || m < 1) throw DomainError("sphere rule needs n >= 2 and m >= 1");
  const double count = std::pow(double(m), n - 2) * 2.0 * m;
  if (count > 4e6) throw DomainError("sphere rule too large for dimension " + std::to_string(n));
  // Polar angles theta_1..theta_(n-2), weight sin^(n-1-k) theta_k.
  std::vector<std::vector<double>> ct(n - 2), wt(n - 2);
  for (int k = 1; k <= n - 2; ++k) {
    const double e = 0.5 * (n - 1 - k - 1);
    gauss_jacobi(m, e, e, ct[k - 1], wt[k - 1]);
  }
  SphereRule rule;
  rule.n = n;
  const int az = 2 * m;
  std::vector<int> idx(n - 2, 0);
  std::vector<double> x(n);
  while (true) {
    double wprod = 1.0, sprod = 1.0;
    for (int k = 0; k < n - 2; ++k) {
      const double c = ct[k][idx[k]];
      x[k] = sprod * c;
      wprod *= wt[k][idx[k]];
      sprod *= std::sqrt(std::max(0.0, 1.0 - c * c));
    }
    for (int j = 0; j < az; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / az;
      x[n - 2] = sprod * std::cos(phi);
      x[n - 1] = sprod * std::sin(phi);
      rule.nodes.insert(rule.nodes.end(), x.begin(), x.end());
      rule.weights.push_back(wprod * 2.0 * M_PI / az);
    }
    int k = 0;
    while (k < n - 2 && ++idx[k] == m) idx[k++] = 0;
    if (k == n - 2) break;
  }
  return cache.emplace(std::make_pair(n, m), std::move(rule)).first->second;
}

Region Region::ball(Point c, double r) {
  Region g;
  g.kind = Kind::Ball;
  g.center = std::move(c);
  g.r0 = 0.0;
  g.r1 = r;
  return g;
}

Region Region::annulus(Point c, double r0, double r1) {
  Region g;
  g.kind = Kind::Annulus;
  g.center = std::move(c);
  g.r0 = r0;
  g.r1 = r1;
  return g;
}

Region Region::union_of(std::vector<Region> balls) {
  Region g;
  g.kind = Kind::Union;
  g.parts = std::move(balls);
  return g;
}

Region Region::whole(Point c, double hint) {
  Region g;
  g.kind = Kind::Whole;
  g.center = std::move(c);
  g.hint = hint;
  return g;
}

namespace {

void check_union(const Region& region) {
  const auto& P = region.parts;
  for (const auto& b : P)
    if (b.kind != Region::Kind::Ball) throw DomainError("union regions must consist of balls");
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t j = i + 1; j < P.size(); ++j)
      if (std::sqrt(dist2(P[i].center, P[j].center)) < P[i].r1 + P[j].r1)
        throw DomainError("union regions must consist of disjoint balls");
}

template <class Radial>
QuadResult over_region(const Radial& radial_sum, int n, const Region& region, const QuadSpec& spec) {
  switch (region.kind) {
    case Region::Kind::Ball:
    case Region::Kind::Annulus: {
      if (!(region.r1 > region.r0 && region.r0 >= 0)) throw DomainError("region radii must satisfy 0 <= r0 < r1");
      auto g = [&](double r) { return radial_sum(region, r); };
      return radial_integrate(g, n, region.r0, region.r1, spec, region.breaks);
    }
    case Region::Kind::Whole: {
      RadialProfile p{[&](double r) { return radial_sum(region, r); }, region.hint};
      return radial_integrate(p, n, spec);
    }
    case Region::Kind::Union: {
      check_union(region);
      QuadResult total;
      for (const auto& b : region.parts) total += over_region(radial_sum, n, b, spec);
      return total;
    }
  }
  throw DomainError("unknown region kind");
}

int region_dim(const Region& region) {
  if (region.kind == Region::Kind::Union) {
    if (region.parts.empty()) throw DomainError("empty union region");
    return int(region.parts.front().center.size());
  }
  return int(region.center.size());
}

}  // namespace

QuadResult lp_power(const PointFunction& f, double p, const Region& region, const LpOptions& opt) {
  if (!(p > 0)) throw DomainError("L^p exponent must be positive");
  const int n = region_dim(region);
  const SphereRule& rule = sphere_rule(n, opt.angular_order);
  auto radial_sum = [&](const Region& reg, double r) {
    Point x(n);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double* th = rule.node(k);
      for (int i = 0; i < n; ++i) x[i] = reg.center[i] + r * th[i];
      const double v = std::abs(f(x));
      if (v != 0.0) s += rule.weights[k] * std::pow(v, p);
    }
    return s;
  };
  return over_region(radial_sum, n, region, opt.quad);
}

QuadResult lp_norm(const PointFunction& f, double p, const Region& region, const LpOptions& opt) {
  QuadResult r = lp_power(f, p, region, opt);
  QuadResult out = r;
  out.value = std::pow(r.value, 1.0 / p);
  out.error = r.value > 0 ? out.value * r.error / (p * r.value) : 0.0;
  out.l1 = std::pow(r.l1, 1.0 / p);
  return out;
}

QuadResult lp_power_radial(const std::function<double(double)>& f, int n, double p, const Region& region,
                           const QuadSpec& spec) {
  if (!(p > 0)) throw DomainError("L^p exponent must be positive");
  const double area = sphere_area(n);
  auto radial_sum = [&](const Region&, double r) {
    const double v = std::abs(f(r));
    return v == 0.0 ? 0.0 : area * std::pow(v, p);
  };
  return over_region(radial_sum, n, region, spec);
}

}  // namespace qcl
