#include "perturbation.hpp"

#include <boost/rational.hpp>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcl {

namespace {

std::string tuple_str(int i, int j, int k, int l) {
  std::ostringstream os;
  os << "(" << i + 1 << "," << j + 1 << "," << k + 1 << "," << l + 1 << ")";
  return os.str();
}

double norm2(const Point& a) {
  double s = 0;
  for (double v : a) s += v * v;
  return s;
}

Point diff_pt(const Point& a, const Point& b) {
  Point d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double dot(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Taylor coefficients of s -> f(s / lambda^2) at s0.
std::vector<double> scaled_quartic_taylor(const Quartic& f, double lambda, double s0) {
  std::vector<double> t(5);
  const double l2 = lambda * lambda;
  double scale = 1.0, fact = 1.0;
  for (int k = 0; k <= 4; ++k) {
    if (k > 0) fact *= k;
    t[k] = f.deriv(s0 / l2, k) * scale / fact;
    scale /= l2;
  }
  return t;
}

// Jets of H_ik(x - y) and of |x - y|^2.
JetMatrix quadratic_jets(const WeylTensor& W, const std::vector<WeylTensor::Entry>& nz,
                         const std::shared_ptr<const JetSpace>& sp, const Point& z, Jet& s) {
  const int n = W.dim();
  std::vector<Jet> zv;
  zv.reserve(n);
  s = Jet(sp);
  for (int p = 0; p < n; ++p) {
    zv.push_back(Jet::variable(sp, p, z[p]));
    fma_trunc(s, 1.0, zv[p], zv[p], sp->degree());
  }
  JetMatrix H(std::size_t(n) * n, Jet(sp));
  for (const auto& e : nz) fma_trunc(H[e.i * n + e.k], e.value, zv[e.j], zv[e.l], sp->degree());
  return H;
}

}  // namespace

std::vector<WeylTensor::Entry> WeylTensor::entries() const {
  std::vector<Entry> out;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          const double v = at(i, j, k, l);
          if (v != 0.0) out.push_back({i, j, k, l, v});
        }
  return out;
}

std::vector<int> WeylTensor::support() const {
  std::vector<bool> used(n_, false);
  for (const auto& e : entries()) used[e.i] = used[e.j] = used[e.k] = used[e.l] = true;
  std::vector<int> out;
  for (int i = 0; i < n_; ++i)
    if (used[i]) out.push_back(i);
  return out;
}

bool WeylTensor::is_zero() const {
  for (double v : v_)
    if (v != 0.0) return false;
  return true;
}

double WeylTensor::max_abs() const {
  double m = 0;
  for (double v : v_) m = std::max(m, std::abs(v));
  return m;
}

double WeylTensor::contract(const double* a, const double* b, const double* c, const double* d) const {
  double s = 0;
  for (int i = 0; i < n_; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < n_; ++j) {
      if (b[j] == 0.0) continue;
      for (int k = 0; k < n_; ++k) {
        if (c[k] == 0.0) continue;
        const double* row = &v_[idx(i, j, k, 0)];
        double t = 0;
        for (int l = 0; l < n_; ++l) t += row[l] * d[l];
        s += a[i] * b[j] * c[k] * t;
      }
    }
  }
  return s;
}

WeylTensor WeylTensor::rotated(const Eigen::MatrixXd& O) const {
  if (O.rows() != n_ || O.cols() != n_) throw DomainError("rotation matrix has the wrong size");
  std::vector<double> cur = v_, next(v_.size());
  const std::size_t n = n_;
  // Transform one index slot at a time.
  for (int slot = 0; slot < 4; ++slot) {
    std::size_t stride = 1;
    for (int s = slot + 1; s < 4; ++s) stride *= n;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t flat = 0; flat < cur.size(); ++flat) {
      const double v = cur[flat];
      if (v == 0.0) continue;
      const std::size_t a = (flat / stride) % n;
      const std::size_t base = flat - a * stride;
      for (std::size_t i = 0; i < n; ++i) next[base + i * stride] += O(i, a) * v;
    }
    std::swap(cur, next);
  }
  WeylTensor out(n_);
  out.v_ = std::move(cur);
  return out;
}

WeylReport weyl_validate(const WeylTensor& W, double tol) {
  WeylReport rep;
  const int n = W.dim();
  const double scale = std::max(1.0, W.max_abs());
  const double t = tol * scale;
  for (int i = 0; i < n && rep.symmetries; ++i)
    for (int j = 0; j < n && rep.symmetries; ++j)
      for (int k = 0; k < n && rep.symmetries; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = W.at(i, j, k, l);
          if (std::abs(v + W.at(j, i, k, l)) > t || std::abs(v + W.at(i, j, l, k)) > t ||
              std::abs(v - W.at(k, l, i, j)) > t) {
            rep.symmetries = false;
            rep.symmetry_violation = std::array<int, 4>{i, j, k, l};
            break;
          }
        }
  for (int i = 0; i < n && rep.bianchi; ++i)
    for (int j = 0; j < n && rep.bianchi; ++j)
      for (int k = 0; k < n && rep.bianchi; ++k)
        for (int l = 0; l < n; ++l)
          if (std::abs(W.at(i, j, k, l) + W.at(i, k, l, j) + W.at(i, l, j, k)) > t) {
            rep.bianchi = false;
            rep.bianchi_violation = std::array<int, 4>{i, j, k, l};
            break;
          }
  for (int p = 0; p < n && rep.trace_free; ++p)
    for (int q = 0; q < n; ++q) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += W.at(i, p, i, q);
      if (std::abs(s) > t) {
        rep.trace_free = false;
        rep.trace_violation = std::array<int, 4>{0, p, 0, q};
        break;
      }
    }
  double nd = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = W.at(i, j, k, l) + W.at(i, l, k, j);
          nd += v * v;
        }
  rep.nondegeneracy = nd;
  rep.nondegenerate = nd > t * t;
  return rep;
}

WeylTensor weyl_from_seed(int n, const std::vector<WeylTensor::Entry>& seed) {
  if (n < 4) throw DomainError("dimension too small for a nonzero Weyl tensor");
  WeylTensor T(n);
  for (const auto& e : seed) {
    for (int v : {e.i, e.j, e.k, e.l})
      if (v < 0 || v >= n) throw DomainError("seed index " + tuple_str(e.i, e.j, e.k, e.l) + " out of range");
    if (!std::isfinite(e.value)) throw DomainError("seed value is not finite");
    T.ref(e.i, e.j, e.k, e.l) += e.value;
  }
  WeylTensor S(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          S.ref(i, j, k, l) = (T.at(i, j, k, l) - T.at(j, i, k, l) - T.at(i, j, l, k) + T.at(j, i, l, k) +
                               T.at(k, l, i, j) - T.at(l, k, i, j) - T.at(k, l, j, i) + T.at(l, k, j, i)) /
                              8.0;
  WeylTensor Rm(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          Rm.ref(i, j, k, l) =
              S.at(i, j, k, l) - (S.at(i, j, k, l) + S.at(i, k, l, j) + S.at(i, l, j, k)) / 3.0;
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int i = 0; i < n; ++i) ric(p, q) += Rm.at(i, p, i, q);
  const double scal = ric.trace();
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  WeylTensor W(n);
  const double c1 = 1.0 / (n - 2), c2 = scal / (2.0 * (n - 1) * (n - 2));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double kn_ric = ric(i, k) * delta(j, l) + ric(j, l) * delta(i, k) - ric(i, l) * delta(j, k) -
                                ric(j, k) * delta(i, l);
          const double kn_g = 2.0 * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k));
          double v = Rm.at(i, j, k, l) - c1 * kn_ric + c2 * kn_g;
          if (std::abs(v) < 1e-15) v = 0.0;
          W.ref(i, j, k, l) = v;
        }
  return W;
}

WeylTensor default_weyl(int n) {
  // Normalized so that W_1234 = 1.
  return weyl_from_seed(n, {{0, 1, 2, 3, 12.0}});
}

double Quartic::operator()(double s) const { return deriv(s, 0); }

double Quartic::deriv(double s, int k) const {
  const auto c = coeffs();
  double v = 0;
  for (int m = 4; m >= k; --m) {
    double fall = 1.0;
    for (int r = 0; r < k; ++r) fall *= (m - r);
    v = v * s + c[m] * fall;
  }
  return v;
}

std::optional<std::string> spec_violation(const PerturbationSpec& spec) {
  if (spec.n < 5) return "n >= 5";
  if (spec.W.dim() != spec.n) return "W has dimension n";
  if (!std::isfinite(spec.tau)) return "tau finite";
  if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) return "0 < alpha <= 1";
  if (!(spec.R > 0.0 && spec.R <= 2.0)) return "R/2 <= 1";
  for (std::size_t t = 0; t < spec.sites.size(); ++t) {
    const auto& s = spec.sites[t];
    const std::string tag = "site " + std::to_string(t + 1) + ": ";
    if (int(s.y.size()) != spec.n) return tag + "y has dimension n";
    if (!(s.mu > 0.0 && s.mu <= 1.0)) return tag + "0 < mu <= 1";
    if (!(s.lambda > 0.0 && 2.0 * s.lambda <= s.rho)) return tag + "2 lambda <= rho";
    if (!(s.rho <= spec.R / 2.0)) return tag + "rho <= R/2";
    if (!((1.5 - spec.alpha) * s.lambda < spec.alpha * s.rho)) return tag + "(3/2 - alpha) lambda < alpha rho";
    if (!(2.0 * s.rho + 3.0 * s.lambda < spec.R / 2.0)) return tag + "2 rho + 3 lambda < R/2";
    if (!(std::sqrt(norm2(s.y)) < spec.R / 2.0)) return tag + "|y| < R/2";
  }
  for (std::size_t i = 0; i < spec.sites.size(); ++i)
    for (std::size_t j = i + 1; j < spec.sites.size(); ++j) {
      const auto &a = spec.sites[i], &b = spec.sites[j];
      if (!(std::sqrt(dist2(a.y, b.y)) >= 3.0 * (a.lambda + b.lambda) + 2.0 * (a.rho + b.rho)))
        return "sites " + std::to_string(i + 1) + "," + std::to_string(j + 1) +
               ": |y_i - y_j| >= 3(lambda_i + lambda_j) + 2(rho_i + rho_j)";
    }
  return std::nullopt;
}

void check_spec(const PerturbationSpec& spec) {
  if (auto v = spec_violation(spec)) throw DomainError("perturbation parameters violate " + *v);
}

Eigen::MatrixXd weyl_quadratic(const WeylTensor& W, const Point& z) {
  const int n = W.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p) {
      if (z[p] == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int q = 0; q < n; ++q) H(i, k) += W.at(i, p, k, q) * z[p] * z[q];
    }
  return H;
}

ModelPerturbation::ModelPerturbation(PerturbationSpec spec, bool with_cutoff)
    : spec_(std::move(spec)), cutoff_(with_cutoff) {
  check_spec(spec_);
}

JetMatrix ModelPerturbation::jets(const Point& x, int degree) const {
  const int n = spec_.n;
  auto sp = JetSpace::get(n, degree);
  JetMatrix out(std::size_t(n) * n, Jet(sp));
  const auto nz = spec_.W.entries();
  const Quartic f{spec_.tau};
  for (const auto& site : spec_.sites) {
    const Point z = diff_pt(x, site.y);
    const double s0 = norm2(z);
    if (cutoff_ && s0 >= 4.0 * site.rho * site.rho) continue;
    Jet s;
    JetMatrix H = quadratic_jets(spec_.W, nz, sp, z, s);
    Jet scal = compose(s, scaled_quartic_taylor(f, site.lambda, s0));
    scal *= site.mu * std::pow(site.lambda, 8);
    if (cutoff_) scal = mul_trunc(scal, cutoff_jet({site.rho, site.y}, x, degree), degree);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const Jet& Hik = H[i * n + k];
        bool any = false;
        for (double c : Hik.coeffs())
          if (c != 0.0) {
            any = true;
            break;
          }
        if (any) fma_trunc(out[i * n + k], 1.0, scal, Hik, degree);
      }
  }
  return out;
}

JetMatrix NormalizedPerturbation::jets(const Point& x, int degree) const {
  const int n = W_.dim();
  auto sp = JetSpace::get(n, degree);
  Jet s;
  JetMatrix H = quadratic_jets(W_, W_.entries(), sp, x, s);
  Jet scal = compose(s, scaled_quartic_taylor(f_, 1.0, norm2(x)));
  JetMatrix out(std::size_t(n) * n, Jet(sp));
  for (std::size_t e = 0; e < out.size(); ++e) fma_trunc(out[e], 1.0, scal, H[e], degree);
  return out;
}

Eigen::MatrixXd h_value(const PerturbationSpec& spec, const Point& x) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec.n, spec.n);
  const Quartic f{spec.tau};
  for (const auto& site : spec.sites) {
    const Point z = diff_pt(x, site.y);
    const double s0 = norm2(z);
    const double eta = cutoff_value({site.rho, site.y}, x);
    if (eta == 0.0) continue;
    h += eta * site.mu * std::pow(site.lambda, 8) * f(s0 / (site.lambda * site.lambda)) * weyl_quadratic(spec.W, z);
  }
  return h;
}

namespace {

// The four-term contraction reduces to W(d, z, d, z) times a scalar factor,
// with z = x - y, d = y - xi, using trace-freeness and the gauge of H.
double gamma_closed(const WeylTensor& W, const Quartic& f, double mu, double lambda, const Point& ysite,
                    const Bubble& b, const Point& x) {
  const int n = W.dim();
  const Dim dim(n);
  const Point z = diff_pt(x, ysite), yv = diff_pt(x, b.xi), d = diff_pt(ysite, b.xi);
  const double wc = W.contract(d.data(), z.data(), d.data(), z.data());
  if (wc == 0.0) return 0.0;
  const double s = norm2(z), t = norm2(yv), l2 = lambda * lambda;
  const auto c = bubble_profile_taylor(dim, b.eps, t, 4);
  const double w2 = 2.0 * c[2], w3 = 6.0 * c[3], w4 = 24.0 * c[4];
  const double lap_w_dd = 4.0 * t * w4 + (2.0 * n + 8.0) * w3;
  const double phi = f(s / l2), F1 = f.deriv(s / l2, 1) / l2, F2 = f.deriv(s / l2, 2) / (l2 * l2);
  const double bracket = 8.0 * phi * lap_w_dd + 32.0 * F1 * w3 * dot(z, yv) +
                         (4.0 * n / (n - 2.0)) * (4.0 * s * F2 + (2.0 * n + 8.0) * F1) * w2;
  return mu * std::pow(lambda, 8) * wc * bracket;
}

}  // namespace

double gamma_eval(const PerturbationSpec& spec, int site, const Bubble& b, const Point& x) {
  if (site < 0 || site >= int(spec.sites.size())) throw DomainError("site index out of range");
  check_bubble(Dim(spec.n), b);
  const auto& st = spec.sites[site];
  return gamma_closed(spec.W, Quartic{spec.tau}, st.mu, st.lambda, st.y, b, x);
}

double gamma_bar(const WeylTensor& W, double tau, const Bubble& b, const Point& x) {
  check_bubble(Dim(W.dim()), b);
  return gamma_closed(W, Quartic{tau}, 1.0, 1.0, Point(W.dim(), 0.0), b, x);
}

double gamma_reference(const WeylTensor& W, double tau, double mu, double lambda, const Point& y, const Bubble& b,
                       const Point& x) {
  const int n = W.dim();
  const Dim dim(n);
  auto sp = JetSpace::get(n, 4);
  const Point z = diff_pt(x, y);
  Jet s;
  JetMatrix H = quadratic_jets(W, W.entries(), sp, z, s);
  Jet phi = compose(s, scaled_quartic_taylor(Quartic{tau}, lambda, norm2(z)));
  JetMatrix G(H.size(), Jet(sp));
  for (std::size_t e = 0; e < G.size(); ++e) G[e] = mul_trunc(phi, H[e], 4);
  Jet w = bubble_jet(dim, b, x, 4);
  auto D = [](const Jet& j, std::vector<int> v) { return j.derivative(v); };
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const Jet& g = G[k * n + j];
      for (int m = 0; m < n; ++m) {
        t1 += D(g, {}) * D(w, {k, j, m, m});
        t3 += D(g, {m, m}) * D(w, {k, j});
        t4 += D(g, {j, m, m}) * D(w, {k});
        t2 += D(g, {m}) * D(w, {k, j, m});
      }
    }
  return mu * std::pow(lambda, 8) * (2.0 * t1 + 2.0 * t2 + (n / (n - 2.0)) * t3 + (2.0 / (n - 2.0)) * t4);
}

double gamma_bound_ratio(const PerturbationSpec& spec, int site, const Bubble& b, const std::vector<Point>& pts) {
  const auto& st = spec.sites.at(site);
  const int n = spec.n;
  double best = 0;
  for (const auto& x : pts) {
    const double g = gamma_eval(spec, site, b, x);
    const double r = std::sqrt(dist2(x, st.y));
    best = std::max(best, std::abs(g) * std::pow(st.lambda + r, n - 10) / (st.mu * std::pow(st.lambda, 0.5 * (n - 4))));
  }
  return best;
}

double h_sup_norm(const TensorField& h, const std::vector<Point>& pts) {
  double best = 0;
  for (const auto& x : pts) {
    JetMatrix J = h.jets(x, 4);
    const auto& sp = J[0].space();
    std::array<double, 5> ord{};
    for (const auto& jet : J)
      for (std::size_t m = 0; m < sp.size(); ++m) {
        const double c = jet[m];
        if (c == 0.0) continue;
        const int k = sp.deg(m);
        double kf = 1;
        for (int r = 2; r <= k; ++r) kf *= r;
        ord[k] += kf * sp.factorial_weight(m) * c * c;
      }
    double total = 0;
    for (double v : ord) total += std::sqrt(v);
    best = std::max(best, total);
  }
  return best;
}

std::optional<std::string> omega_violation(const PerturbationSpec& spec, const std::vector<Point>& xi,
                                           const std::vector<double>& eps) {
  if (xi.size() != spec.sites.size() || eps.size() != spec.sites.size()) return "one bubble per site";
  for (std::size_t t = 0; t < xi.size(); ++t) {
    const auto& s = spec.sites[t];
    const std::string tag = "bubble " + std::to_string(t + 1) + ": ";
    if (int(xi[t].size()) != spec.n) return tag + "xi has dimension n";
    if (!(std::sqrt(dist2(xi[t], s.y)) < s.lambda)) return tag + "|xi - y| < lambda";
    if (!(s.lambda / 2.0 < eps[t] && eps[t] < 1.5 * s.lambda)) return tag + "lambda/2 < eps < 3 lambda/2";
  }
  for (std::size_t i = 0; i < eps.size(); ++i)
    for (std::size_t j = 0; j < eps.size(); ++j)
      if (i != j && !(eps[i] / eps[j] > 0.5 && eps[i] / eps[j] < 2.0))
        return "bubbles " + std::to_string(i + 1) + "," + std::to_string(j + 1) + ": 1/2 < eps_i/eps_j < 2";
  return std::nullopt;
}

MultiBubbleConfig glue_config(const PerturbationSpec& spec, const std::vector<Point>& xi,
                              const std::vector<double>& eps) {
  MultiBubbleConfig cfg;
  cfg.alpha = spec.alpha;
  cfg.R = spec.R;
  for (std::size_t t = 0; t < spec.sites.size(); ++t)
    cfg.bubbles.push_back({xi.at(t), eps.at(t), spec.sites[t].rho + spec.sites[t].lambda});
  return cfg;
}

FinalSequence final_sequence(int N, int n) {
  if (N < 1) throw DomainError("sequence index must be >= 1");
  if (n < 5) throw DomainError("n >= 5 required");
  FinalSequence fs;
  fs.N = N;
  fs.n = n;
  fs.y = Point(n, 0.0);
  fs.y[0] = 1.0 / N;
  fs.lambda = std::ldexp(1.0, -N);
  fs.mu = std::exp2(-N / 3.0);
  fs.rho = 1.0 / (4.0 * double(N) * N);
  fs.log2_smallness = -2.0 * std::log2(fs.mu) + (4.0 - n) * std::log2(fs.rho) + (n - 24.0) * std::log2(fs.lambda);
  const double log2_base = std::log2(4.0 * double(N) * N);
  fs.log2_closed_form = (74.0 / 3.0 - n) * N + (n - 4.0) * log2_base;
  // Exact powers of two: mu^-2 = 2^(2N/3), lambda^(n-24) = 2^(-N(n-24)); rho^(4-n) = (4N^2)^(n-4) in both.
  using Rat = boost::rational<long long>;
  const Rat from_parts = Rat(2LL * N, 3) + Rat(-(long long)N * (n - 24));
  const Rat closed = Rat(74LL - 3LL * n, 3) * Rat(N);
  fs.exact_match = from_parts == closed;
  fs.two_exp_num = closed.numerator();
  fs.two_exp_den = closed.denominator();
  return fs;
}

double smallness_turning_point(int n) {
  const double slope = 74.0 / 3.0 - n;
  if (slope >= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * (n - 4) / (-slope * std::log(2.0));
}

}  // namespace qcl
