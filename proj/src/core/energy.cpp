#include "energy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

#include "util.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Reduced energy

const char* energy_term_name(int k) {
  if (k == kQuadTerms) return "gamma_zbar";
  return quad_term_name(k);
}

ReducedEnergyResult reduced_energy(const WeylTensor& W, double tau, const Point& xi, double lambda,
                                   const EnergyOptions& opt) {
  const int n = W.dim();
  const Dim dim(n);
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
  if (!std::isfinite(tau)) throw DomainError("tau must be finite");
  if (int(xi.size()) != n) throw DomainError("xi has the wrong dimension");

  ReducedEnergyResult res;
  res.n = n;
  res.xi = xi;
  res.lambda = lambda;
  res.tau = tau;
  res.slowest_power = -1e300;

  const TermArray coef = reduced_energy_coefficients(n);
  double rounding = 0;
  if (!W.is_zero()) {
    const BubbleFrame fr = bubble_frame(W, xi, lambda);
    const auto hbar = pf_hbar(fr, tau);
    const auto fields = quad_term_fields(fr, hbar);
    for (int k = 0; k < kQuadTerms; ++k) {
      const PfIntegral I = pf_integrate(fr.ctx, fields[k]);
      res.terms[k] = coef[k] * I.value;
      rounding += 1e-14 * std::abs(coef[k]) * I.abs_sum;
      res.slowest_power = std::max(res.slowest_power, I.slowest_power);
    }
  }
  if (n < 25) throw DomainError("convergence gate: the reduced energy needs n >= 25");

  if (!W.is_zero()) {
    const Bubble b{xi, lambda};
    const ZbarSolution z = solve_zbar_normalized(W, tau, b, opt.grid);
    res.terms[kQuadTerms] = z.gamma_z_integral();
    res.z_galerkin_residual = z.galerkin_residual;
    res.z_constraint_residual = z.constraint_residual;
    if (opt.z_error_estimate) {
      GridSpec g = opt.grid;
      g.nodes = std::max(5, g.nodes / 2);
      const ZbarSolution zc = solve_zbar_normalized(W, tau, b, g);
      res.z_error = std::abs(zc.gamma_z_integral() - res.terms[kQuadTerms]);
    }
  }
  for (double t : res.terms) res.value += t;
  res.error_bound = rounding + res.z_error;
  if (W.is_zero()) res.slowest_power = 0;
  return res;
}

// ---------------------------------------------------------------------------
// Local probe

namespace {

struct ProbeVar {
  std::string name;
  int coord = -1;  // xi coordinate, or -1 for lambda
  bool passive = false;
  double step = 0;
};

}  // namespace

ProbeResult min_probe(const WeylTensor& W, double tau, const ProbeOptions& opt) {
  const int n = W.dim();
  if (!(opt.step_xi > 0) || !(opt.step_lambda > 0)) throw DomainError("probe steps must be positive");
  ProbeResult out;
  out.n = n;
  out.tau = tau;
  out.step_xi = opt.step_xi;
  out.step_lambda = opt.step_lambda;

  std::vector<ProbeVar> vars;
  const auto supp = W.support();
  for (int c : supp) vars.push_back({"xi_" + std::to_string(c + 1), c, false, opt.step_xi});
  int passive_count = 0;
  for (int c = 0; c < n; ++c)
    if (std::find(supp.begin(), supp.end(), c) == supp.end()) {
      if (passive_count == 0) vars.push_back({"xi_" + std::to_string(c + 1), c, true, opt.step_xi});
      ++passive_count;
    }
  vars.push_back({"lambda", -1, false, opt.step_lambda});
  const int m = int(vars.size());
  for (const auto& v : vars) out.variables.push_back(v.name);

  // Stencil offsets in step units; each distinct point is evaluated once.
  std::map<std::vector<int>, double> values;
  auto request = [&](std::vector<int> off) { values.emplace(std::move(off), 0.0); };
  request(std::vector<int>(m, 0));
  for (int j = 0; j < m; ++j)
    for (int s : {-1, 1}) {
      std::vector<int> o(m, 0);
      o[j] = s;
      request(o);
    }
  auto mixed = [&](int j, int k) { return !(vars[j].passive || vars[k].passive); };
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      if (!mixed(j, k)) continue;
      for (int s : {-1, 1})
        for (int t : {-1, 1}) {
          std::vector<int> o(m, 0);
          o[j] = s;
          o[k] = t;
          request(o);
        }
    }

  std::vector<const std::vector<int>*> keys;
  for (auto& kv : values) keys.push_back(&kv.first);
  std::vector<ReducedEnergyResult> results(keys.size());
  EnergyOptions eo = opt.energy;
  parallel_for(keys.size(), [&](std::size_t i) {
    const auto& off = *keys[i];
    Point xi(n, 0.0);
    double lambda = 1.0;
    for (int j = 0; j < m; ++j) {
      if (vars[j].coord < 0)
        lambda += off[j] * vars[j].step;
      else
        xi[vars[j].coord] += off[j] * vars[j].step;
    }
    results[i] = reduced_energy(W, tau, xi, lambda, eo);
  });
  double scale = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    values[*keys[i]] = results[i].value;
    if (std::all_of(keys[i]->begin(), keys[i]->end(), [](int v) { return v == 0; })) {
      out.F0 = results[i].value;
      out.F0_error = results[i].error_bound;
      for (double t : results[i].terms) scale = std::max(scale, std::abs(t));
    }
  }
  out.evaluations = int(keys.size());

  auto F = [&](int j, int s, int k = -1, int t = 0) {
    std::vector<int> o(m, 0);
    o[j] = s;
    if (k >= 0) o[k] = t;
    return values.at(o);
  };
  out.gradient.resize(m);
  out.hessian = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    const double h = vars[j].step;
    out.gradient(j) = (F(j, 1) - F(j, -1)) / (2 * h);
    out.hessian(j, j) = (F(j, 1) - 2 * out.F0 + F(j, -1)) / (h * h);
  }
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      if (!mixed(j, k)) continue;
      const double v = (F(j, 1, k, 1) - F(j, 1, k, -1) - F(j, -1, k, 1) + F(j, -1, k, -1)) /
                       (4 * vars[j].step * vars[k].step);
      out.hessian(j, k) = out.hessian(k, j) = v;
    }
  for (int j = 0; j < m; ++j) {
    if (vars[j].coord < 0)
      out.lambda_gradient = out.gradient(j);
    else
      out.xi_gradient_norm = std::hypot(out.xi_gradient_norm, out.gradient(j));
  }

  // Eigenvalues: the passive coordinate decouples and stands for n - |supp W| equal eigenvalues.
  std::vector<int> coupled;
  for (int j = 0; j < m; ++j)
    if (!vars[j].passive) coupled.push_back(j);
  Eigen::MatrixXd Hc(coupled.size(), coupled.size());
  for (std::size_t a = 0; a < coupled.size(); ++a)
    for (std::size_t b = 0; b < coupled.size(); ++b) Hc(a, b) = out.hessian(coupled[a], coupled[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hc);
  std::vector<std::pair<double, int>> eig;
  for (int i = 0; i < es.eigenvalues().size(); ++i) eig.push_back({es.eigenvalues()(i), 1});
  for (int j = 0; j < m; ++j)
    if (vars[j].passive) eig.push_back({out.hessian(j, j), passive_count});
  std::sort(eig.begin(), eig.end());
  for (auto [v, k] : eig) {
    out.eigenvalues.push_back(v);
    out.multiplicity.push_back(k);
  }

  const double gtol = opt.gradient_tol * std::max(scale, 1e-300);
  const double etol = opt.eigen_tol * std::max(scale, 1e-300);
  bool critical = true;
  for (int j = 0; j < m; ++j) critical = critical && std::abs(out.gradient(j)) <= gtol;
  const double lo = eig.front().first, hi = eig.back().first;
  if (!critical)
    out.classification = "inconclusive";
  else if (lo > etol)
    out.classification = "strict-local-min";
  else if (lo < -etol && hi > etol)
    out.classification = "saddle";
  else
    out.classification = "inconclusive";
  return out;
}

ProbeStability min_probe_stability(const WeylTensor& W, double tau, const ProbeOptions& opt) {
  ProbeStability s;
  s.coarse = min_probe(W, tau, opt);
  ProbeOptions half = opt;
  half.step_xi *= 0.5;
  half.step_lambda *= 0.5;
  s.fine = min_probe(W, tau, half);
  const double nrm = s.fine.hessian.norm();
  s.hessian_change = nrm > 0 ? (s.coarse.hessian - s.fine.hessian).norm() / nrm : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Radial fields and the stereographic identity

RadialField radial_bubble(const Dim& dim, const Bubble& b) {
  check_bubble(dim, b);
  const double p = dim.p(), eps = b.eps;
  RadialField u;
  u.center = b.xi;
  u.decay = dim.n - 4.0;
  u.eval = [p, eps](double r) -> std::array<double, 3> {
    const double q = eps * eps + r * r;
    const double w = std::pow(2.0 * eps / q, p);
    const double w1 = -2.0 * p * r * w / q;
    const double w2 = -2.0 * p * w / q + 4.0 * p * (p + 1.0) * r * r * w / (q * q);
    return {w, w1, w2};
  };
  return u;
}

RadialField radial_bump(const Point& c, double R, int k) {
  if (!(R > 0) || k < 3) throw DomainError("bump needs R > 0 and exponent >= 3");
  RadialField u;
  u.center = c;
  u.support = R;
  u.eval = [R, k](double r) -> std::array<double, 3> {
    if (r >= R) return {0.0, 0.0, 0.0};
    const double t = 1.0 - r * r / (R * R);
    const double v = std::pow(t, k), v1 = k * std::pow(t, k - 1), v2 = k * (k - 1) * std::pow(t, k - 2);
    // d/dr t = -2r/R^2.
    const double tr = -2.0 * r / (R * R), trr = -2.0 / (R * R);
    return {v, v1 * tr, v2 * tr * tr + v1 * trr};
  };
  return u;
}

RadialField scaled(const RadialField& u, double c) {
  RadialField v = u;
  auto f = u.eval;
  v.eval = [f, c](double r) -> std::array<double, 3> {
    auto a = f(r);
    return {c * a[0], c * a[1], c * a[2]};
  };
  return v;
}

namespace {

bool is_origin(const Point& c) {
  return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

QuadResult radial_field_integral(const std::function<double(double)>& f, int n, const RadialField& u, double hint,
                                 const QuadSpec& qs) {
  if (u.support > 0) return radial_integrate(f, n, 0.0, u.support, qs);
  if (!(hint > n)) throw DomainError("divergence gate: integrand decays like r^-" + std::to_string(hint) +
                                     ", not integrable in dimension " + std::to_string(n));
  return radial_integrate(RadialProfile{f, hint}, n, qs);
}

}  // namespace

StereographicResult stereographic_energy(int n, const RadialField& u, double tol) {
  const Dim dim(n);
  if (int(u.center.size()) != n) throw DomainError("field has the wrong dimension");
  if (!is_origin(u.center)) throw DomainError("stereographic identity needs u centered at the origin");
  QuadSpec qs;
  qs.tol = tol;
  qs.throw_on_failure = false;
  const double area = sphere_area(n);

  // Flat side.
  auto lap2 = [&](double r) {
    const auto a = u.eval(r);
    const double L = a[2] + (n - 1) * a[1] / r;
    return L * L;
  };
  const auto flat = radial_field_integral(lap2, n, u, 2.0 * (u.decay + 2.0), qs);

  // Sphere side: rho = cot(theta/2), v(theta) = u(rho) / w_0(rho).
  const double p = dim.p();
  const double kappa = (double(n) * n - 2.0 * n - 4.0) / 2.0;
  const double d0 = n * (n - 4.0) * (double(n) * n - 4.0) / 16.0;
  auto integrand = [&](double th) {
    const double h = 0.5 * th;
    const double sh = std::sin(h), ch = std::cos(h);
    const double rho = ch / sh;
    const double rho1 = -0.5 / (sh * sh);
    const double rho2 = 0.5 * ch / (sh * sh * sh);
    const auto a = u.eval(rho);
    const double q = 1.0 + rho * rho;
    const double inv_w = std::pow(0.5 * q, p);
    const double A = -2.0 * p * rho / q;                          // w_0'/w_0
    const double A1 = -2.0 * p * (1.0 - rho * rho) / (q * q);      // A'
    const double g0 = a[0] * inv_w;
    const double g1 = (a[1] - a[0] * A) * inv_w;
    const double g2 = (a[2] - 2.0 * a[1] * A + a[0] * (A * A - A1)) * inv_w;
    const double v1 = g1 * rho1;
    const double v2 = g2 * rho1 * rho1 + g1 * rho2;
    const double st = std::sin(th), ct = std::cos(th);
    const double lap = v2 + (n - 1) * (ct / st) * v1;
    return (lap * lap + kappa * v1 * v1 + d0 * g0 * g0) * std::pow(st, n - 1);
  };
  std::vector<double> br;
  if (u.support > 0) br.push_back(2.0 * std::atan(1.0 / u.support));
  const auto sph = integrate(integrand, 0.0, M_PI, qs, br);

  StereographicResult out;
  out.flat = area * flat.value;
  out.flat_error = area * flat.error;
  out.sphere = area * sph.value;
  out.sphere_error = area * sph.error;
  const double s = std::max(std::abs(out.flat), std::abs(out.sphere));
  out.relative_gap = s > 0 ? std::abs(out.flat - out.sphere) / s : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Spectral bound

namespace {

// Sparse monomial: sorted (variable, exponent) pairs.
using Mono = std::vector<std::pair<int, int>>;

struct SparsePoly {
  std::map<Mono, double> t;
  void add(const Mono& m, double c) {
    if (c == 0.0) return;
    auto& v = t[m];
    v += c;
  }
};

Mono to_mono(const std::vector<int>& e) {
  Mono m;
  for (int i = 0; i < int(e.size()); ++i)
    if (e[i] != 0) m.push_back({i, e[i]});
  return m;
}

int mono_degree(const Mono& m) {
  int d = 0;
  for (auto [v, e] : m) d += e;
  return d;
}

SparsePoly from_sphere_poly(const SpherePoly& p) {
  SparsePoly s;
  for (const auto& [e, c] : p.terms) {
    if (int(e.size()) != p.N) throw DomainError("sphere polynomial exponent has the wrong length");
    s.add(to_mono(e), c);
  }
  return s;
}

SparsePoly diff(const SparsePoly& p, int v) {
  SparsePoly out;
  for (const auto& [m, c] : p.t)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i].first == v) {
        Mono d = m;
        const int e = d[i].second;
        if (e == 1)
          d.erase(d.begin() + i);
        else
          d[i].second -= 1;
        out.add(d, c * e);
      }
  return out;
}

// Integral over S^(N-1) of the product of two polynomials.
class MomentTable {
 public:
  explicit MomentTable(int N) : N_(N) {}
  double pair(const SparsePoly& a, const SparsePoly& b) {
    double s = 0;
    for (const auto& [ma, ca] : a.t)
      for (const auto& [mb, cb] : b.t) s += ca * cb * moment(ma, mb);
    return s;
  }

 private:
  int N_;
  std::unordered_map<std::string, double> cache_;
  double moment(const Mono& a, const Mono& b) {
    // Merge exponents; zero unless all are even.
    std::vector<std::pair<int, int>> m;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
        m.push_back(a[i++]);
      else if (i == a.size() || b[j].first < a[i].first)
        m.push_back(b[j++]);
      else {
        m.push_back({a[i].first, a[i].second + b[j].second});
        ++i;
        ++j;
      }
    }
    std::vector<int> ex;
    int deg = 0;
    for (auto [v, e] : m) {
      if (e % 2) return 0.0;
      ex.push_back(e);
      deg += e;
    }
    std::sort(ex.begin(), ex.end());
    std::string key(ex.begin(), ex.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    // 2 prod Gamma((e_i+1)/2) / Gamma((deg + N)/2) with Gamma(1/2) for the absent variables.
    double lg = std::log(2.0) + (N_ - int(ex.size())) * std::lgamma(0.5) - std::lgamma(0.5 * (deg + N_));
    for (int e : ex) lg += std::lgamma(0.5 * (e + 1));
    const double v = std::exp(lg);
    cache_.emplace(key, v);
    return v;
  }
};

}  // namespace

SpherePoly operator+(const SpherePoly& a, const SpherePoly& b) {
  if (a.N != b.N && a.N && b.N) throw DomainError("sphere polynomials of different dimension");
  SpherePoly c = a;
  c.N = std::max(a.N, b.N);
  c.terms.insert(c.terms.end(), b.terms.begin(), b.terms.end());
  return c;
}

SpherePoly operator*(double s, const SpherePoly& a) {
  SpherePoly c = a;
  for (auto& t : c.terms) t.second *= s;
  return c;
}

SpherePoly random_harmonic(int n, int degree, std::uint64_t seed, int cubic_terms) {
  const int N = n + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SpherePoly out;
  out.N = N;
  auto mono = [&](std::initializer_list<int> vars) {
    std::vector<int> e(N, 0);
    for (int v : vars) e[v] += 1;
    return e;
  };
  if (degree == 2) {
    // x^T A x with trace A = 0.
    Eigen::MatrixXd A(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) A(i, j) = A(j, i) = g(rng);
    A.diagonal().array() -= A.trace() / N;
    for (int i = 0; i < N; ++i) {
      out.terms.push_back({mono({i, i}), A(i, i)});
      for (int j = i + 1; j < N; ++j) out.terms.push_back({mono({i, j}), 2 * A(i, j)});
    }
    return out;
  }
  if (degree == 3) {
    // c - |x|^2 Delta c / (2N + 4) for a random sparse cubic c.
    std::uniform_int_distribution<int> pick(0, N - 1);
    SparsePoly c;
    for (int t = 0; t < cubic_terms; ++t) {
      std::vector<int> e = mono({pick(rng), pick(rng), pick(rng)});
      c.add(to_mono(e), g(rng));
    }
    SparsePoly lap;
    for (int v = 0; v < N; ++v)
      for (const auto& [m, cc] : diff(diff(c, v), v).t) lap.add(m, cc);
    for (const auto& [m, cc] : c.t) {
      std::vector<int> e(N, 0);
      for (auto [v, k] : m) e[v] = k;
      out.terms.push_back({e, cc});
    }
    for (const auto& [m, cc] : lap.t)
      for (int v = 0; v < N; ++v) {
        std::vector<int> e(N, 0);
        for (auto [u, k] : m) e[u] = k;
        e[v] += 2;
        out.terms.push_back({e, -cc / (2.0 * N + 4.0)});
      }
    return out;
  }
  throw DomainError("random harmonics are provided for degrees 2 and 3");
}

SpectralBoundResult spectral_bound_check(int n, const SpherePoly& v) {
  const Dim dim(n);
  const int N = n + 1;
  if (v.N != N) throw DomainError("sphere polynomial must live on R^(n+1)");
  const SparsePoly P = from_sphere_poly(v);
  MomentTable M(N);

  // Homogeneous parts and the sphere operators.
  SparsePoly lapS, euler;
  std::map<int, SparsePoly> parts;
  for (const auto& [m, c] : P.t) parts[mono_degree(m)].add(m, c);
  for (const auto& [k, Pk] : parts) {
    for (const auto& [m, c] : Pk.t) {
      lapS.add(m, -double(k) * (k + N - 2) * c);
      euler.add(m, k * c);
    }
    for (int i = 0; i < N; ++i)
      for (const auto& [m, c] : diff(diff(Pk, i), i).t) lapS.add(m, c);
  }
  double grad2 = 0;
  for (int i = 0; i < N; ++i) {
    const SparsePoly d = diff(P, i);
    grad2 += M.pair(d, d);
  }
  grad2 -= M.pair(euler, euler);

  SpectralBoundResult out;
  out.l2 = M.pair(P, P);
  const double lap2 = M.pair(lapS, lapS);
  const double kappa = (double(n) * n - 2.0 * n - 4.0) / 2.0;
  const double d0 = n * (n - 4.0) * (double(n) * n - 4.0) / 16.0;
  const double l2e = 2.0 * (n + 1);
  out.lhs = lap2 + kappa * grad2 + d0 * out.l2;
  out.rhs = (l2e * l2e + kappa * l2e + d0) * out.l2;
  out.margin = out.lhs - out.rhs;

  // Projections on 1 and x_i.
  SparsePoly one;
  one.add({}, 1.0);
  const double vn = std::sqrt(out.l2);
  const double area = M.pair(one, one);
  double proj = vn > 0 ? std::abs(M.pair(P, one)) / (vn * std::sqrt(area)) : 1.0;
  for (int i = 0; i < N && vn > 0; ++i) {
    SparsePoly xi;
    xi.add({{i, 1}}, 1.0);
    proj = std::max(proj, std::abs(M.pair(P, xi)) / (vn * std::sqrt(M.pair(xi, xi))));
  }
  out.projection = proj;
  out.precondition_ok = vn > 0 && proj < 1e-10;

  const double lin = dim.lin_potential();
  out.variant_a = (n - 2.0) / (n + 6.0) * out.lhs - lin * out.l2;
  out.variant_b = lin * out.l2 - (n - 6.0) / (n - 2.0) * out.lhs;
  return out;
}

// ---------------------------------------------------------------------------
// Residual norms

EquivariantBump::EquivariantBump(int n, Point c, double s, double amplitude)
    : n_(n), c_(std::move(c)), s_(s), amp_(amplitude) {
  if (int(c_.size()) != n) throw DomainError("bump center has the wrong dimension");
  if (!(s > 0)) throw DomainError("bump width must be positive");
}

JetMatrix EquivariantBump::jets(const Point& x, int degree) const {
  const int n = n_;
  const Jet g = gaussian_field(c_, s_)(x, degree) * (amp_ / (s_ * s_));
  const auto sp = g.space_ptr();
  std::vector<Jet> z;
  for (int i = 0; i < n; ++i) z.push_back(Jet::variable(sp, i, x[i] - c_[i]));
  Jet r2(sp);
  for (int i = 0; i < n; ++i) r2 += z[i] * z[i];
  JetMatrix out(std::size_t(n) * n, Jet(sp));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet q = z[i] * z[j];
      if (i == j) q.axpy(-1.0 / n, r2);
      out[i * n + j] = out[j * n + i] = g * q;
    }
  return out;
}

JetMatrix ScaledField::jets(const Point& x, int degree) const {
  JetMatrix J = h_->jets(x, degree);
  for (auto& j : J) j *= c_;
  return J;
}

namespace {

struct Ball {
  Point c;
  double r;
  std::vector<double> breaks;
};

std::vector<Ball> residual_balls(const MultiBubbleConfig& cfg, const PerturbationSpec* spec, ResidualRegion region) {
  std::vector<Ball> out;
  if (region == ResidualRegion::Support) {
    for (const auto& b : cfg.bubbles) out.push_back({b.xi, 2 * b.r, {b.eps, 10 * b.eps, b.r}});
  } else {
    if (!spec) throw DomainError("the core region needs a perturbation spec");
    for (const auto& s : spec->sites) out.push_back({s.y, s.rho, {s.lambda}});
  }
  return out;
}

}  // namespace

ResidualNormResult multibubble_residual_norm(int n, const MultiBubbleConfig& cfg,
                                             std::shared_ptr<const TensorField> h,
                                             const PerturbationSpec* spec, const ResidualOptions& opt) {
  const Dim dim(n);
  check_multibubble(dim, cfg);
  if (h && h->dim() != n) throw DomainError("perturbation has the wrong dimension");
  if (opt.mode == ResidualMode::GammaCorrected) {
    if (!spec) throw DomainError("gamma-corrected mode needs a perturbation spec");
    if (spec->sites.size() != cfg.bubbles.size()) throw DomainError("gamma-corrected mode needs one site per bubble");
  }
  const auto wf = multibubble_field(dim, cfg);
  std::shared_ptr<ExpMetric> g;
  if (h) g = std::make_shared<ExpMetric>(h);
  const double crit = dim.crit();
  auto residual = [&](const Point& x) {
    double v;
    if (g) {
      v = paneitz_apply(*g, wf, x);
      const double W = multibubble_value(dim, cfg, x);
      v -= dim.d * std::pow(std::max(W, 0.0), crit);
    } else {
      const Jet j = wf(x, 4);
      v = flat_bilaplacian(j) - dim.d * std::pow(std::max(j.value(), 0.0), crit);
    }
    if (opt.mode == ResidualMode::GammaCorrected)
      for (std::size_t t = 0; t < cfg.bubbles.size(); ++t) {
        const auto& b = cfg.bubbles[t];
        const double eta = cutoff_value({b.r, b.xi}, x);
        if (eta != 0.0) v += eta * gamma_eval(*spec, int(t), {b.xi, b.eps}, x);
      }
    return v;
  };

  ResidualNormResult out;
  out.p = 2.0 * n / (n + 4.0);
  out.region = opt.region == ResidualRegion::Support ? "support" : "cores";
  const auto balls = residual_balls(cfg, spec, opt.region);
  double total = 0, err = 0;
  for (const auto& b : balls) {
    Region reg = Region::ball(b.c, b.r);
    reg.breaks = b.breaks;
    QuadResult q;
    if (opt.radial) {
      q = lp_power_radial(
          [&](double r) {
            Point x = b.c;
            x[0] += r;
            return residual(x);
          },
          n, out.p, reg, opt.lp.quad);
    } else {
      q = lp_power(residual, out.p, reg, opt.lp);
    }
    out.ball_powers.push_back(q.value);
    total += q.value;
    err += q.error;
  }
  out.norm = std::pow(total, 1.0 / out.p);
  out.error = total > 0 ? out.norm * err / (out.p * total) : 0.0;
  return out;
}

double residual_power_separate(int n, const MultiBubbleConfig& cfg, std::shared_ptr<const TensorField> h,
                               const ResidualOptions& opt) {
  if (opt.mode != ResidualMode::Raw || opt.region != ResidualRegion::Support)
    throw DomainError("separate powers are defined for the raw residual over the support");
  double s = 0;
  for (const auto& b : cfg.bubbles) {
    MultiBubbleConfig one = cfg;
    one.bubbles = {b};
    s += multibubble_residual_norm(n, one, h, nullptr, opt).ball_powers.at(0);
  }
  return s;
}

ResidualSweep residual_alpha_sweep(int n, const MultiBubbleConfig& cfg, std::shared_ptr<const TensorField> h0,
                                   const std::vector<double>& alphas, const ResidualOptions& opt) {
  if (alphas.size() < 2) throw DomainError("a sweep needs at least two parameter values");
  ResidualSweep s;
  s.variable = "alpha";
  s.params = alphas;
  s.norms.assign(alphas.size(), 0.0);
  s.errors.assign(alphas.size(), 0.0);
  parallel_for(alphas.size(), [&](std::size_t i) {
    auto h = std::make_shared<ScaledField>(h0, alphas[i]);
    const auto r = multibubble_residual_norm(n, cfg, h, nullptr, opt);
    s.norms[i] = r.norm;
    s.errors[i] = r.error;
  });
  s.slope = loglog_slope(s.params, s.norms);
  return s;
}

ResidualSweep residual_mu_sweep(const PerturbationSpec& spec, const std::vector<Point>& xi,
                                const std::vector<double>& eps, const std::vector<double>& mus,
                                const ResidualOptions& opt) {
  if (mus.size() < 2) throw DomainError("a sweep needs at least two parameter values");
  ResidualSweep s;
  s.variable = "mu";
  s.params = mus;
  s.norms.assign(mus.size(), 0.0);
  s.errors.assign(mus.size(), 0.0);
  parallel_for(mus.size(), [&](std::size_t i) {
    PerturbationSpec sp = spec;
    for (auto& st : sp.sites) st.mu = mus[i];
    if (auto v = omega_violation(sp, xi, eps)) throw DomainError("bubble parameters violate " + *v);
    auto h = std::make_shared<ModelPerturbation>(sp);
    const auto cfg = glue_config(sp, xi, eps);
    const auto r = multibubble_residual_norm(sp.n, cfg, h, &sp, opt);
    s.norms[i] = r.norm;
    s.errors[i] = r.error;
  });
  s.slope = loglog_slope(s.params, s.norms);
  return s;
}

// ---------------------------------------------------------------------------
// Total energy

TotalEnergyResult total_energy(int n, const RadialField& u, const std::optional<Bubble>& background, double tol) {
  const Dim dim(n);
  if (int(u.center.size()) != n) throw DomainError("field has the wrong dimension");
  QuadSpec qs;
  qs.tol = tol;
  qs.throw_on_failure = false;
  const double area = sphere_area(n);
  const double q = 2.0 * n / (n - 4.0);

  TotalEnergyResult out;
  if (!background) {
    auto lap2 = [&](double r) {
      const auto a = u.eval(r);
      const double L = a[2] + (n - 1) * a[1] / r;
      return L * L;
    };
    auto pw = [&](double r) { return std::pow(std::abs(u.eval(r)[0]), q); };
    out.pairing = area * radial_field_integral(lap2, n, u, 2.0 * (u.decay + 2.0), qs).value;
    const double m = area * radial_field_integral(pw, n, u, q * u.decay, qs).value;
    out.norm = std::pow(m, 1.0 / q);
  } else {
    const Bubble& b = *background;
    check_bubble(dim, b);
    if (dist2(b.xi, u.center) != 0.0) throw DomainError("background bubble must share the field center");
    // g = w^(4/(n-4)) delta is the unit round sphere for every bubble: Ric = (n-1) g, R = n(n-1),
    // Q = n(n^2-4)/8.
    const RadialField phi = radial_bubble(dim, b);
    const double ex = 4.0 / (n - 4.0);
    const double Rs = n * (n - 1.0), Qs = dim.q_sphere();
    auto pairing = [&](double r) {
      const auto a = u.eval(r);
      const auto f = phi.eval(r);
      const double e2f = std::pow(f[0], ex);
      const double df = 0.5 * ex * f[1] / f[0];  // f' with g = e^(2f) delta
      const double lapg = (a[2] + (n - 1) * a[1] / r + (n - 2) * df * a[1]) / e2f;
      const double grad2 = a[1] * a[1] / e2f;
      const double ric = (n - 1.0) * grad2;
      const double v = lapg * lapg - dim.a * ric + dim.b * Rs * grad2 + dim.c * Qs * a[0] * a[0];
      return v * std::pow(f[0], q);
    };
    auto pw = [&](double r) { return std::pow(std::abs(u.eval(r)[0]) * phi.eval(r)[0], q); };
    // The volume factor w^(2n/(n-4)) decays like r^(-2n).
    const double hint_p = 2.0 * n + 2.0 * u.decay;
    out.pairing = area * radial_field_integral(pairing, n, u, hint_p, qs).value;
    out.norm = std::pow(area * radial_field_integral(pw, n, u, q * (u.decay + n - 4.0), qs).value, 1.0 / q);
  }
  if (!(out.norm > 0)) throw DomainError("total energy needs a nonzero field");
  out.value = 2.0 / (n - 4.0) * out.pairing / (out.norm * out.norm);
  return out;
}

}  // namespace qcl
