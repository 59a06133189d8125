#include "polyfield.hpp"

#include <cmath>
#include <numeric>

#include "quadrature.hpp"

namespace qcl {

namespace {

using TermVec = std::vector<std::pair<MonoKey, double>>;

TermVec to_vec(const Poly::Map& m) {
  TermVec v;
  v.reserve(m.size());
  for (const auto& kv : m)
    if (kv.second != 0.0) v.push_back(kv);
  return v;
}

}  // namespace

Poly Poly::constant(double c) {
  Poly p;
  if (c != 0.0) p.terms_[MonoKey{}] = c;
  return p;
}

Poly Poly::var(int field) {
  Poly p;
  MonoKey k;
  k.add(field, 1);
  p.terms_[k] = 1.0;
  return p;
}

void Poly::add_term(const MonoKey& k, double c) {
  if (c != 0.0) terms_[k] += c;
}

Poly& Poly::operator+=(const Poly& o) { return axpy(1.0, o); }
Poly& Poly::operator-=(const Poly& o) { return axpy(-1.0, o); }

Poly& Poly::operator*=(double c) {
  if (c == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& kv : terms_) kv.second *= c;
  return *this;
}

Poly& Poly::axpy(double c, const Poly& o) {
  if (c == 0.0) return *this;
  for (const auto& kv : o.terms_) terms_[kv.first] += c * kv.second;
  return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly out;
  if (a.empty() || b.empty()) return out;
  const TermVec va = to_vec(a.terms_), vb = to_vec(b.terms_);
  out.terms_.reserve(va.size() * vb.size() / 4 + 16);
  for (const auto& x : va)
    for (const auto& y : vb) out.terms_[x.first + y.first] += x.second * y.second;
  return out;
}

Poly Poly::diff(int field) const {
  Poly out;
  for (const auto& kv : terms_) {
    const int e = kv.first.get(field);
    if (e == 0 || kv.second == 0.0) continue;
    MonoKey k = kv.first;
    k.add(field, -1);
    out.terms_[k] += e * kv.second;
  }
  return out;
}

Poly Poly::times_var(int field) const {
  Poly out;
  out.terms_.reserve(terms_.size());
  for (const auto& kv : terms_) {
    MonoKey k = kv.first;
    k.add(field, 1);
    out.terms_[k] += kv.second;
  }
  return out;
}

int Poly::degree() const {
  int d = 0;
  for (const auto& kv : terms_) {
    int t = 0;
    for (int f = 0; f < kFieldS; ++f) t += kv.first.get(f);
    t += 2 * kv.first.get(kFieldS);
    d = std::max(d, t);
  }
  return d;
}

PolyField PolyField::poly(const Poly& p, int e2) {
  PolyField f;
  if (!p.empty()) f.parts[e2] = p;
  return f;
}

bool PolyField::empty() const {
  for (const auto& kv : parts)
    if (!kv.second.empty()) return false;
  return true;
}

std::size_t PolyField::size() const {
  std::size_t s = 0;
  for (const auto& kv : parts) s += kv.second.size();
  return s;
}

PolyField& PolyField::operator+=(const PolyField& o) { return axpy(1.0, o); }
PolyField& PolyField::operator-=(const PolyField& o) { return axpy(-1.0, o); }

PolyField& PolyField::operator*=(double c) {
  for (auto& kv : parts) kv.second *= c;
  return *this;
}

PolyField& PolyField::axpy(double c, const PolyField& o) {
  for (const auto& kv : o.parts) parts[kv.first].axpy(c, kv.second);
  return *this;
}

PolyField operator*(const PolyField& a, const PolyField& b) {
  PolyField out;
  for (const auto& x : a.parts)
    for (const auto& y : b.parts) {
      if (x.second.empty() || y.second.empty()) continue;
      out.parts[x.first + y.first] += x.second * y.second;
    }
  return out;
}

PolyField pf_d(const PolyContext& ctx, const PolyField& f, int a) {
  PolyField out;
  const double va = ctx.v[a];
  for (const auto& [e2, P] : f.parts) {
    if (P.empty()) continue;
    Poly d = P.diff(a);
    if (va != 0.0) d.axpy(va, P.diff(kFieldL));
    d.axpy(2.0, P.diff(kFieldS).times_var(a));
    out.parts[e2] += d;
    if (e2 != 0) out.parts[e2 + 2].axpy(-double(e2), P.times_var(a));
  }
  return out;
}

PolyField pf_ds(const PolyContext&, const PolyField& f) {
  PolyField out;
  for (const auto& [e2, P] : f.parts) {
    if (P.empty()) continue;
    out.parts[e2] += P.diff(kFieldS);
    if (e2 != 0) out.parts[e2 + 2].axpy(-0.5 * e2, P);
  }
  return out;
}

PolyField pf_passive_norm2(const PolyContext& ctx) {
  Poly q = Poly::var(kFieldS);
  for (int a = 0; a < ctx.m(); ++a) {
    MonoKey k;
    k.add(a, 2);
    q.add_term(k, -1.0);
  }
  return PolyField::poly(q);
}

PolyField pf_laplacian(const PolyContext& ctx, const PolyField& f) {
  PolyField out;
  for (int a = 0; a < ctx.m(); ++a) out += pf_d(ctx, pf_d(ctx, f, a), a);
  const PolyField fs = pf_ds(ctx, f);
  if (ctx.passive() > 0) {
    out += 4.0 * (pf_passive_norm2(ctx) * pf_ds(ctx, fs));
    out.axpy(2.0 * ctx.passive(), fs);
  }
  return out;
}

PolyField pf_grad_dot(const PolyContext& ctx, const PolyField& f, const PolyField& g) {
  PolyField out;
  for (int a = 0; a < ctx.m(); ++a) out += pf_d(ctx, f, a) * pf_d(ctx, g, a);
  if (ctx.passive() > 0) out += 4.0 * (pf_passive_norm2(ctx) * (pf_ds(ctx, f) * pf_ds(ctx, g)));
  return out;
}

PolyField pf_hess_dot(const PolyContext& ctx, const PolyField& f, const PolyField& g) {
  const int m = ctx.m();
  std::vector<PolyField> df(m), dg(m);
  for (int a = 0; a < m; ++a) {
    df[a] = pf_d(ctx, f, a);
    dg[a] = pf_d(ctx, g, a);
  }
  PolyField out;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out += pf_d(ctx, df[a], b) * pf_d(ctx, dg[a], b);
  if (ctx.passive() > 0) {
    const PolyField Q = pf_passive_norm2(ctx);
    const PolyField fs = pf_ds(ctx, f), gs = pf_ds(ctx, g);
    const PolyField fss = pf_ds(ctx, fs), gss = pf_ds(ctx, gs);
    PolyField mixed;
    for (int a = 0; a < m; ++a) mixed += pf_d(ctx, fs, a) * pf_d(ctx, gs, a);
    out += 8.0 * (Q * mixed);
    out += (4.0 * ctx.passive()) * (fs * gs);
    out += 8.0 * (Q * (fs * gss + fss * gs));
    out += 16.0 * (Q * Q * (fss * gss));
  }
  return out;
}

double pf_eval(const PolyContext& ctx, const PolyField& f, const std::vector<double>& y, double s) {
  double L = 0;
  for (int a = 0; a < ctx.m(); ++a) L += ctx.v[a] * y[a];
  const double base = ctx.eps * ctx.eps + s;
  double total = 0;
  for (const auto& [e2, P] : f.parts) {
    double acc = 0;
    for (const auto& [k, c] : P.terms()) {
      double t = c;
      for (int a = 0; a < ctx.m(); ++a) {
        const int e = k.get(a);
        if (e) t *= std::pow(y[a], e);
      }
      if (int e = k.get(kFieldL)) t *= std::pow(L, e);
      if (int e = k.get(kFieldS)) t *= std::pow(s, e);
      acc += t;
    }
    total += acc * std::pow(base, -0.5 * e2);
  }
  return total;
}

namespace {

// Sphere integral of theta^alpha (v.theta)^j via the multinomial expansion of (v.theta)^j.
class AngularTable {
 public:
  explicit AngularTable(const PolyContext& ctx) : ctx_(ctx) {}

  double get(const MonoKey& key) {
    MonoKey k = key;
    k.add(kFieldS, -key.get(kFieldS));
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    const int m = ctx_.m();
    std::vector<int> ab(m);
    for (int a = 0; a < m; ++a) ab[a] = k.get(a);
    const int j = k.get(kFieldL);
    double sum = 0;
    if (m == 0)
      sum = j == 0 ? sphere_moment({}, ctx_.n) : 0.0;
    else
      expand(0, j, std::tgamma(j + 1.0), ab, sum);
    cache_[k] = sum;
    return sum;
  }

 private:
  // Distributes the remaining power of L over slots a..m-1; coef carries j!/prod(beta!) prod(v^beta).
  void expand(int a, int rem, double coef, std::vector<int>& ab, double& sum) {
    const int m = ctx_.m();
    if (a == m - 1) {
      const double c = coef * std::pow(ctx_.v[a], rem) / std::tgamma(rem + 1.0);
      if (c == 0.0) return;
      ab[a] += rem;
      sum += c * moment(ab);
      ab[a] -= rem;
      return;
    }
    for (int t = 0; t <= rem; ++t) {
      const double c = coef * std::pow(ctx_.v[a], t) / std::tgamma(t + 1.0);
      if (c == 0.0) continue;
      ab[a] += t;
      expand(a + 1, rem - t, c, ab, sum);
      ab[a] -= t;
    }
  }

  double moment(const std::vector<int>& ab) {
    MonoKey k;
    for (std::size_t a = 0; a < ab.size(); ++a) k.add(int(a), ab[a]);
    auto it = moments_.find(k);
    if (it != moments_.end()) return it->second;
    const double v = sphere_moment(ab, ctx_.n);
    moments_[k] = v;
    return v;
  }

  const PolyContext& ctx_;
  std::unordered_map<MonoKey, double, MonoKeyHash> cache_, moments_;
};

}  // namespace

PfIntegral pf_integrate(const PolyContext& ctx, const PolyField& f) {
  AngularTable ang(ctx);
  PfIntegral res;
  const int n = ctx.n;
  const double eps = ctx.eps;
  // Group by (e2, radial power) after angular integration.
  std::map<std::pair<int, int>, std::pair<double, double>> groups;
  for (const auto& [e2, P] : f.parts)
    for (const auto& [k, c] : P.terms()) {
      if (c == 0.0) continue;
      int deg = k.get(kFieldL) + 2 * k.get(kFieldS);
      for (int a = 0; a < ctx.m(); ++a) deg += k.get(a);
      const double A = ang.get(k);
      auto& g = groups[{e2, deg}];
      g.first += c * A;
      g.second += std::abs(c * A);
    }
  for (const auto& [key, val] : groups) {
    const auto [e2, deg] = key;
    if (val.second == 0.0) continue;
    // Angular factors cancelling to rounding level are treated as exact zeros.
    if (std::abs(val.first) <= 1e-13 * val.second) {
      res.abs_sum += val.second * 1e-13;
      continue;
    }
    res.slowest_power = std::max(res.slowest_power, double(deg - e2));
    // int_0^inf r^(deg+n-1) (eps^2 + r^2)^(-e) dr = eps^(a+1-2e) B((a+1)/2, e-(a+1)/2) / 2.
    const double a1 = deg + n, e = 0.5 * e2;
    const double b = e - 0.5 * a1;
    if (!(b > 0))
      throw DomainError("convergence gate: integrand term decays like r^" + std::to_string(deg - e2) +
                        ", not integrable in dimension " + std::to_string(n));
    const double lr = (a1 - 2 * e) * std::log(eps) + std::lgamma(0.5 * a1) + std::lgamma(b) - std::lgamma(e) -
                      std::log(2.0);
    const double r = std::exp(lr);
    res.value += val.first * r;
    res.abs_sum += val.second * r;
  }
  return res;
}

std::vector<PfRadialTerm> pf_radial_profile(const PolyContext& ctx, const PolyField& f) {
  AngularTable ang(ctx);
  std::map<std::pair<int, int>, double> groups;
  for (const auto& [e2, P] : f.parts)
    for (const auto& [k, c] : P.terms()) {
      if (c == 0.0) continue;
      int deg = k.get(kFieldL) + 2 * k.get(kFieldS);
      for (int a = 0; a < ctx.m(); ++a) deg += k.get(a);
      groups[{e2, deg}] += c * ang.get(k);
    }
  std::vector<PfRadialTerm> out;
  for (const auto& [key, A] : groups)
    if (A != 0.0) out.push_back({key.first, key.second, A});
  return out;
}

double pf_radial_eval(const std::vector<PfRadialTerm>& terms, double eps, double r) {
  double v = 0;
  for (const auto& t : terms) v += t.coef * std::pow(r, t.deg) * std::pow(eps * eps + r * r, -0.5 * t.e2);
  return v;
}

double pf_sphere_integral(const PolyContext& ctx, const Poly& p) {
  AngularTable ang(ctx);
  double s = 0;
  for (const auto& [k, c] : p.terms()) s += c * ang.get(k);
  return s;
}

PolyField pf_bubble(const PolyContext& ctx) {
  const Dim dim(ctx.n);
  return PolyField::poly(Poly::constant(std::pow(2.0 * ctx.eps, dim.p())), ctx.n - 4);
}

PolyField pf_bubble_deps(const PolyContext& ctx) {
  // w = (2 eps)^p (eps^2 + s)^(-p): dw/deps = (p/eps) w - 2 p eps (eps^2 + s)^(-1) w.
  const Dim dim(ctx.n);
  const double p = dim.p(), c = std::pow(2.0 * ctx.eps, p);
  PolyField out = PolyField::poly(Poly::constant(c * p / ctx.eps), ctx.n - 4);
  out.parts[ctx.n - 2].axpy(-2.0 * p * ctx.eps * c, Poly::constant(1.0));
  return out;
}

BubbleFrame bubble_frame(const WeylTensor& W, const Point& xi, double eps) {
  const int n = W.dim();
  if (int(xi.size()) != n) throw DomainError("bubble center has the wrong dimension");
  if (!(eps > 0)) throw DomainError("bubble scale must be positive");
  BubbleFrame fr;
  const std::vector<int> S = W.support();
  std::vector<bool> in_s(n, false);
  for (int i : S) in_s[i] = true;
  Eigen::VectorXd perp = Eigen::VectorXd::Zero(n);
  int p0 = -1;
  for (int i = 0; i < n; ++i)
    if (!in_s[i]) {
      perp(i) = xi[i];
      if (p0 < 0) p0 = i;
    }
  const double pn = perp.norm();
  fr.rotation = Eigen::MatrixXd::Identity(n, n);
  std::vector<int> active = S;
  if (pn > 0.0) {
    // Householder reflection on the passive block sending perp to |perp| e_p0.
    Eigen::VectorXd u = perp;
    u(p0) -= pn;
    const double un = u.norm();
    if (un > 1e-14 * pn) {
      u /= un;
      fr.rotation -= 2.0 * u * u.transpose();
    }
    active.push_back(p0);
  }
  if (int(active.size()) > kMaxActive)
    throw DomainError("Weyl support too large for symbolic assembly (at most " + std::to_string(kMaxActive - 1) +
                      " coordinates)");
  fr.xi = xi;
  fr.ctx.n = n;
  fr.ctx.active = active;
  fr.ctx.eps = eps;
  Eigen::Map<const Eigen::VectorXd> ex(xi.data(), n);
  const Eigen::VectorXd xr = fr.rotation * ex;
  for (int i : active) fr.xi_active.push_back(xr(i));
  fr.ctx.v = fr.xi_active;
  fr.weyl_slots.resize(S.size());
  std::iota(fr.weyl_slots.begin(), fr.weyl_slots.end(), 0);
  std::vector<int> slot(n, -1);
  for (std::size_t a = 0; a < S.size(); ++a) slot[S[a]] = int(a);
  for (const auto& e : W.entries()) fr.w_entries.push_back({slot[e.i], slot[e.j], slot[e.k], slot[e.l], e.value});
  return fr;
}

void frame_coords(const BubbleFrame& fr, const Point& x, std::vector<double>& y_active, double& s) {
  const int n = fr.ctx.n;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = x[i] - fr.xi[i];
  const Eigen::VectorXd yr = fr.rotation * y;
  y_active.resize(fr.ctx.m());
  for (int a = 0; a < fr.ctx.m(); ++a) y_active[a] = yr(fr.ctx.active[a]);
  s = yr.squaredNorm();
}

std::vector<PolyField> pf_hbar(const BubbleFrame& fr, double tau, double lambda, double mu) {
  const int k = int(fr.weyl_slots.size());
  const Quartic f{tau};
  const double l2 = lambda * lambda;
  double a2 = 0;
  for (double v : fr.xi_active) a2 += v * v;
  // f(a2 + X), X = 2L + s.
  Poly X = 2.0 * Poly::var(kFieldL) + Poly::var(kFieldS);
  Poly fp, Xj = Poly::constant(1.0);
  double fact = 1.0;
  for (int j = 0; j <= 4; ++j) {
    if (j > 0) {
      fact *= j;
      Xj = Xj * X;
    }
    fp.axpy(mu * std::pow(lambda, 8) * f.deriv(a2 / l2, j) / (fact * std::pow(l2, j)), Xj);
  }
  // Linear factors xi_p + y_p on the Weyl slots.
  std::vector<Poly> lin(k);
  for (int p = 0; p < k; ++p) lin[p] = Poly::constant(fr.xi_active[p]) + Poly::var(p);
  std::vector<Poly> H(std::size_t(k) * k);
  for (const auto& e : fr.w_entries) H[e.i * k + e.k].axpy(e.value, lin[e.j] * lin[e.l]);
  std::vector<PolyField> out(std::size_t(k) * k);
  for (std::size_t e = 0; e < H.size(); ++e)
    if (!H[e].empty()) out[e] = PolyField::poly(fp * H[e]);
  return out;
}

}  // namespace qcl
