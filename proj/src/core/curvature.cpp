#include "curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "util.hpp"

namespace qcl {

namespace {

std::shared_ptr<const JetSpace> space_for(int n, int degree) { return JetSpace::get(n, degree); }

double max_abs(const Jet& j) {
  double m = 0;
  for (double v : j.coeffs()) m = std::max(m, std::abs(v));
  return m;
}

// u^q as a jet.
Jet power_jet(const Jet& u, double q) {
  const int D = u.space().degree();
  std::vector<double> t(D + 1);
  double coef = 1.0;
  for (int k = 0; k <= D; ++k) {
    t[k] = coef * std::pow(u.value(), q - k);
    coef *= (q - k) / (k + 1.0);
  }
  return compose(u, t);
}

Eigen::MatrixXd values_of(const JetMatrix& m, int n) {
  Eigen::MatrixXd v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = m[i * n + j].value();
  return v;
}

// Christoffel symbols (degree D-1) and Ricci / scalar curvature (degree D-2).
struct CurvatureJets {
  int n = 0;
  std::vector<Jet> gamma;  // gamma[(k*n + i)*n + j] = Gamma^k_ij
  JetMatrix ric;
  Jet R;
  const Jet& G(int k, int i, int j) const { return gamma[(std::size_t(k) * n + i) * n + j]; }
};

CurvatureJets curvature_jets(int n, const JetMatrix& g, const JetMatrix& ginv) {
  const auto sp = g[0].space_ptr();
  const int D = sp->degree();
  CurvatureJets c;
  c.n = n;
  // dg[(m*n + i)*n + j] = d_m g_ij.
  std::vector<Jet> dg(std::size_t(n) * n * n, Jet(sp));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        dg[(m * n + i) * n + j] = diff(g[i * n + j], m);
        dg[(m * n + j) * n + i] = dg[(m * n + i) * n + j];
      }
  auto DG = [&](int m, int i, int j) -> const Jet& { return dg[(std::size_t(m) * n + i) * n + j]; };
  // Lowered symbols Gamma_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2.
  std::vector<Jet> low(std::size_t(n) * n * n, Jet(sp));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet t = DG(i, j, l) + DG(j, i, l) - DG(l, i, j);
        t *= 0.5;
        low[(l * n + i) * n + j] = t;
        low[(l * n + j) * n + i] = t;
      }
  c.gamma.assign(std::size_t(n) * n * n, Jet(sp));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet& out = c.gamma[(k * n + i) * n + j];
        for (int l = 0; l < n; ++l) fma_trunc(out, 1.0, ginv[k * n + l], low[(l * n + i) * n + j], D - 1);
        c.gamma[(k * n + j) * n + i] = out;
      }
  c.ric.assign(std::size_t(n) * n, Jet(sp));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet r(sp);
      for (int k = 0; k < n; ++k) {
        r += diff(c.G(k, i, j), k);
        r -= diff(c.G(k, i, k), j);
        for (int p = 0; p < n; ++p) {
          fma_trunc(r, 1.0, c.G(k, k, p), c.G(p, i, j), D - 2);
          fma_trunc(r, -1.0, c.G(k, j, p), c.G(p, i, k), D - 2);
        }
      }
      c.ric[i * n + j] = r;
      c.ric[j * n + i] = r;
    }
  c.R = Jet(sp);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fma_trunc(c.R, 1.0, ginv[i * n + j], c.ric[i * n + j], D - 2);
  return c;
}

// Delta_g f at the base point from a jet of f (degree >= 2).
double lb_value(const CurvatureJets& c, const JetMatrix& ginv, const Jet& f) {
  const int n = c.n;
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double h = f.derivative({i, j});
      for (int k = 0; k < n; ++k) h -= c.G(k, i, j).value() * f.derivative({k});
      s += ginv[i * n + j].value() * h;
    }
  return s;
}

void fill_curvature(const Dim& dim, const CurvatureJets& c, const JetMatrix& ginv, MetricSample& s) {
  const int n = c.n;
  s.ric = values_of(c.ric, n);
  s.R = c.R.value();
  s.grad_R.resize(n);
  for (int k = 0; k < n; ++k) s.grad_R(k) = c.R.derivative({k});
  s.lap_R = lb_value(c, ginv, c.R);
  Eigen::MatrixXd up = s.ginv * s.ric * s.ginv;
  s.ric_norm2 = (up.array() * s.ric.array()).sum();
  s.Q = q_curvature(dim, s.lap_R, s.R, s.ric_norm2);
}

void check_positive_definite(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (!(es.eigenvalues().minCoeff() > 0)) throw DomainError("metric is not positive definite");
}

}  // namespace

Eigen::MatrixXd TensorField::value(const Point& x) const {
  return values_of(jets(x, 0), dim());
}

JetMatrix ZeroTensorField::jets(const Point& x, int degree) const {
  (void)x;
  return JetMatrix(std::size_t(n_) * n_, Jet(space_for(n_, degree)));
}

ScaledTensorField::ScaledTensorField(Eigen::MatrixXd M, ScalarJetFn s) : M_(std::move(M)), s_(std::move(s)) {
  if (M_.rows() != M_.cols()) throw DomainError("tensor must be square");
  if ((M_ - M_.transpose()).norm() > 1e-14 * (1 + M_.norm())) throw DomainError("tensor must be symmetric");
}

JetMatrix ScaledTensorField::jets(const Point& x, int degree) const {
  const int n = dim();
  Jet s = s_(x, degree);
  JetMatrix out(std::size_t(n) * n, Jet(s.space_ptr()));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (M_(i, j) != 0.0) out[i * n + j] = s * M_(i, j);
  return out;
}

Eigen::MatrixXd MetricField::value(const Point& x) const {
  JetMatrix g, gi;
  jets(x, 0, g, gi);
  return values_of(g, dim());
}

Eigen::MatrixXd exp_symmetric(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
}

JetMatrix exp_jet_matrix(const JetMatrix& h, int n, double sign) {
  const auto sp = h[0].space_ptr();
  const int D = sp->degree();
  Eigen::MatrixXd h0 = values_of(h, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h0);
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(norm < 1.0))
    throw DomainError("metric perturbation has |h| = " + std::to_string(norm) + " >= 1");
  JetMatrix sum(std::size_t(n) * n, Jet(sp)), term(std::size_t(n) * n, Jet(sp));
  for (int i = 0; i < n; ++i) {
    sum[i * n + i][0] = 1.0;
    term[i * n + i][0] = 1.0;
  }
  for (int k = 1; k <= 80; ++k) {
    JetMatrix next(std::size_t(n) * n, Jet(sp));
    double mag = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet& out = next[i * n + j];
        for (int l = 0; l < n; ++l) fma_trunc(out, sign / k, term[i * n + l], h[l * n + j], D);
        next[j * n + i] = out;
        mag = std::max(mag, max_abs(out));
      }
    term.swap(next);
    for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += term[e];
    if (mag < 1e-18) return sum;
  }
  throw NumericError("exponential series did not converge");
}

void ExpMetric::jets(const Point& x, int degree, JetMatrix& g, JetMatrix& ginv) const {
  JetMatrix h = h_->jets(x, degree);
  g = exp_jet_matrix(h, dim(), 1.0);
  ginv = exp_jet_matrix(h, dim(), -1.0);
}

Eigen::MatrixXd ExpMetric::value(const Point& x) const {
  Eigen::MatrixXd h = h_->value(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(norm < 1.0)) throw DomainError("metric perturbation has |h| = " + std::to_string(norm) + " >= 1");
  return exp_symmetric(h);
}

void ConformalMetric::jets(const Point& x, int degree, JetMatrix& g, JetMatrix& ginv) const {
  Jet u = u_(x, degree);
  if (!(u.value() > 0)) throw DomainError("conformal factor must be positive");
  const double q = 4.0 / (n_ - 4);
  Jet f = power_jet(u, q), fi = power_jet(u, -q);
  g.assign(std::size_t(n_) * n_, Jet(u.space_ptr()));
  ginv.assign(std::size_t(n_) * n_, Jet(u.space_ptr()));
  for (int i = 0; i < n_; ++i) {
    g[i * n_ + i] = f;
    ginv[i * n_ + i] = fi;
  }
}

double q_curvature(const Dim& dim, double lapR, double R, double ric_norm2) {
  const double n = dim.n;
  return -lapR / (2.0 * (n - 1.0)) + dim.qr2 * R * R - 2.0 / ((n - 2.0) * (n - 2.0)) * ric_norm2;
}

MetricSample metric_at(const MetricField& g, const Point& x) {
  MetricSample s;
  s.n = g.dim();
  JetMatrix gi;
  g.jets(x, 4, s.g_jet, gi);
  s.g = values_of(s.g_jet, s.n);
  s.ginv = values_of(gi, s.n);
  check_positive_definite(s.g);
  return s;
}

MetricSample curvature_at(const MetricField& g, const Point& x) {
  Dim dim(g.dim());
  MetricSample s;
  s.n = dim.n;
  JetMatrix gi;
  g.jets(x, 4, s.g_jet, gi);
  s.g = values_of(s.g_jet, s.n);
  s.ginv = values_of(gi, s.n);
  check_positive_definite(s.g);
  CurvatureJets c = curvature_jets(s.n, s.g_jet, gi);
  fill_curvature(dim, c, gi, s);
  return s;
}

namespace {

// Richardson extrapolation of a central-difference estimate D(h) with error
// expansion in h^2, using steps h, h/2, ..., h/2^levels.
template <class F>
auto richardson(const F& D, double h, int levels) {
  using T = decltype(D(h));
  std::vector<T> col;
  for (int k = 0; k <= levels; ++k) col.push_back(D(h / double(1 << k)));
  double f = 4.0;
  for (int l = 1; l <= levels; ++l, f *= 4.0)
    for (int k = levels; k >= l; --k) col[k] = ((f * col[k] - col[k - 1]) / (f - 1.0));
  return T(col[levels]);
}

struct FdRicci {
  Eigen::MatrixXd g, ginv, ric;
  std::vector<double> gamma;  // (k*n + i)*n + j
  double R = 0;
};

FdRicci fd_ricci(const std::function<Eigen::MatrixXd(const Point&)>& gf, const Point& x, double h, int levels) {
  const int n = int(x.size());
  FdRicci out;
  out.g = gf(x);
  out.ginv = out.g.inverse();
  auto shifted = [&](int a, double da, int b, double db) {
    Point y = x;
    if (a >= 0) y[a] += da;
    if (b >= 0) y[b] += db;
    return gf(y);
  };
  // First and second derivatives with one Richardson level.
  std::vector<Eigen::MatrixXd> d1(n), d2(std::size_t(n) * n);
  for (int m = 0; m < n; ++m) {
    auto first = [&](double s) { return ((shifted(m, s, -1, 0) - shifted(m, -s, -1, 0)) / (2 * s)).eval(); };
    d1[m] = richardson(first, h, levels);
    auto second = [&](double s) {
      return ((shifted(m, s, -1, 0) - 2.0 * out.g + shifted(m, -s, -1, 0)) / (s * s)).eval();
    };
    d2[m * n + m] = richardson(second, h, levels);
  }
  for (int m = 0; m < n; ++m)
    for (int l = m + 1; l < n; ++l) {
      auto mixed = [&](double s) {
        return ((shifted(m, s, l, s) - shifted(m, s, l, -s) - shifted(m, -s, l, s) + shifted(m, -s, l, -s)) /
                (4 * s * s))
            .eval();
      };
      d2[m * n + l] = richardson(mixed, h, levels);
      d2[l * n + m] = d2[m * n + l];
    }
  auto low = [&](int l, int i, int j) { return 0.5 * (d1[i](j, l) + d1[j](i, l) - d1[l](i, j)); };
  auto dlow = [&](int m, int l, int i, int j) {
    return 0.5 * (d2[m * n + i](j, l) + d2[m * n + j](i, l) - d2[m * n + l](i, j));
  };
  out.gamma.assign(std::size_t(n) * n * n, 0.0);
  auto G = [&](int k, int i, int j) -> double& { return out.gamma[(std::size_t(k) * n + i) * n + j]; };
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += out.ginv(k, l) * low(l, i, j);
        G(k, i, j) = s;
      }
  // d_m g^kl = -g^ka d_m g_ab g^bl.
  std::vector<Eigen::MatrixXd> dginv(n);
  for (int m = 0; m < n; ++m) dginv[m] = -out.ginv * d1[m] * out.ginv;
  auto dG = [&](int m, int k, int i, int j) {
    double s = 0;
    for (int l = 0; l < n; ++l) s += dginv[m](k, l) * low(l, i, j) + out.ginv(k, l) * dlow(m, l, i, j);
    return s;
  };
  out.ric = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double r = 0;
      for (int k = 0; k < n; ++k) {
        r += dG(k, k, i, j) - dG(j, k, i, k);
        for (int p = 0; p < n; ++p) r += G(k, k, p) * G(p, i, j) - G(k, j, p) * G(p, i, k);
      }
      out.ric(i, j) = r;
    }
  out.R = (out.ginv.array() * out.ric.array()).sum();
  return out;
}

// Inner step h_in for metric derivatives, outer step h for derivatives of R.
MetricSample fd_sample(const std::function<Eigen::MatrixXd(const Point&)>& gf, const Point& x, double h_in,
                       double h, int levels) {
  const int n = int(x.size());
  Dim dim(n);
  FdRicci base = fd_ricci(gf, x, h_in, levels);
  auto Rat = [&](int a, double da, int b, double db) {
    Point y = x;
    if (a >= 0) y[a] += da;
    if (b >= 0) y[b] += db;
    return fd_ricci(gf, y, h_in, levels).R;
  };
  Eigen::VectorXd dR(n);
  Eigen::MatrixXd HR(n, n);
  for (int m = 0; m < n; ++m) {
    auto first = [&](double s) { return (Rat(m, s, -1, 0) - Rat(m, -s, -1, 0)) / (2 * s); };
    dR(m) = richardson(first, h, levels);
    auto second = [&](double s) { return (Rat(m, s, -1, 0) - 2.0 * base.R + Rat(m, -s, -1, 0)) / (s * s); };
    HR(m, m) = richardson(second, h, levels);
    for (int l = 0; l < m; ++l) {
      auto mixed = [&](double s) {
        return (Rat(m, s, l, s) - Rat(m, s, l, -s) - Rat(m, -s, l, s) + Rat(m, -s, l, -s)) / (4 * s * s);
      };
      HR(m, l) = HR(l, m) = richardson(mixed, h, levels);
    }
  }
  MetricSample s;
  s.n = n;
  s.g = base.g;
  s.ginv = base.ginv;
  s.ric = base.ric;
  s.R = base.R;
  s.grad_R = dR;
  double lap = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = HR(i, j);
      for (int k = 0; k < n; ++k) v -= base.gamma[(std::size_t(k) * n + i) * n + j] * dR(k);
      lap += base.ginv(i, j) * v;
    }
  s.lap_R = lap;
  Eigen::MatrixXd up = s.ginv * s.ric * s.ginv;
  s.ric_norm2 = (up.array() * s.ric.array()).sum();
  s.Q = q_curvature(dim, s.lap_R, s.R, s.ric_norm2);
  return s;
}

}  // namespace

MetricSample curvature_at_fd(const std::function<Eigen::MatrixXd(const Point&)>& g, const Point& x,
                             const FdOptions& opt) {
  // The metric-derivative step stays fixed (its error is smooth in x); the outer
  // step is halved and the pair of successive estimates that agree best is kept.
  double h = opt.step;
  MetricSample prev = fd_sample(g, x, opt.inner_step, h, opt.richardson_levels);
  check_positive_definite(prev.g);
  MetricSample best;
  best.fd_error = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.max_halvings; ++k) {
    h *= 0.5;
    MetricSample cur = fd_sample(g, x, opt.inner_step, h, opt.richardson_levels);
    cur.fd_error = std::abs(cur.Q - prev.Q);
    if (cur.fd_error < best.fd_error) best = cur;
    prev = cur;
    if (cur.fd_error <= opt.target * std::max(1.0, std::abs(cur.Q))) break;
  }
  return opt.max_halvings > 0 ? best : prev;
}

double PaneitzParts::total(const Dim& dim) const {
  return bilap + dim.a * ric_hess - dim.b * r_lap + (6.0 - dim.n) / (2.0 * (dim.n - 1.0)) * dr_du + dim.c * qu;
}

PaneitzParts paneitz_parts(const MetricField& g, const ScalarJetFn& uf, const Point& x) {
  const int n = g.dim();
  Dim dim(n);
  JetMatrix gj, gi;
  g.jets(x, 4, gj, gi);
  CurvatureJets c = curvature_jets(n, gj, gi);
  MetricSample s;
  s.n = n;
  s.g = values_of(gj, n);
  s.ginv = values_of(gi, n);
  fill_curvature(dim, c, gi, s);
  Jet u = uf(x, 4);
  const auto sp = u.space_ptr();
  std::vector<Jet> du(n);
  for (int k = 0; k < n; ++k) du[k] = diff(u, k);
  // Covariant Hessian (degree 2) and Delta_g u (degree 2).
  JetMatrix hess(std::size_t(n) * n, Jet(sp));
  Jet lap(sp);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet hij = diff(du[i], j);
      for (int k = 0; k < n; ++k) fma_trunc(hij, -1.0, c.G(k, i, j), du[k], 2);
      hess[i * n + j] = hij;
      hess[j * n + i] = hij;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fma_trunc(lap, 1.0, gi[i * n + j], hess[i * n + j], 2);
  PaneitzParts p;
  p.u = u.value();
  p.bilap = lb_value(c, gi, lap);
  Eigen::MatrixXd hv = values_of(hess, n);
  Eigen::MatrixXd up = s.ginv * s.ric * s.ginv;
  p.ric_hess = (up.array() * hv.array()).sum();
  p.r_lap = s.R * lap.value();
  Eigen::VectorXd duv(n);
  for (int k = 0; k < n; ++k) duv(k) = du[k].value();
  p.dr_du = s.grad_R.dot(s.ginv * duv);
  p.qu = s.Q * p.u;
  return p;
}

double paneitz_apply(const MetricField& g, const ScalarJetFn& u, const Point& x) {
  return paneitz_parts(g, u, x).total(Dim(g.dim()));
}

double flat_laplacian(const Jet& u) {
  double s = 0;
  for (int i = 0; i < u.space().n(); ++i) s += u.derivative({i, i});
  return s;
}

double flat_bilaplacian(const Jet& u) {
  double s = 0;
  const int n = u.space().n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += u.derivative({i, i, j, j});
  return s;
}

double conformal_q(int n, const ScalarJetFn& uf, const Point& x) {
  Dim dim(n);
  Jet u = uf(x, 4);
  if (!(u.value() > 0)) throw DomainError("conformal factor must be positive");
  return 2.0 / (n - 4) * std::pow(u.value(), -dim.crit()) * flat_bilaplacian(u);
}

ScalarJetFn bubble_field(const Dim& dim, const Bubble& b) {
  return [dim, b](const Point& x, int degree) { return bubble_jet(dim, b, x, degree); };
}

ScalarJetFn multibubble_field(const Dim& dim, const MultiBubbleConfig& cfg) {
  return [dim, cfg](const Point& x, int degree) { return multibubble_jet(dim, cfg, x, degree); };
}

ScalarJetFn gaussian_field(const Point& c, double s) {
  return [c, s](const Point& x, int degree) {
    const int n = int(x.size());
    auto sp = JetSpace::get(n, degree);
    Jet q(sp);
    q[0] = dist2(x, c);
    if (degree >= 1)
      for (int v = 0; v < n; ++v) q[sp->var_index(v)] = 2.0 * (x[v] - c[v]);
    if (degree >= 2)
      for (int v = 0; v < n; ++v) q[sp->index_of({v, v})] = 1.0;
    // exp(-q / (2 s^2)).
    const double a = -1.0 / (2 * s * s);
    std::vector<double> t(degree + 1);
    double f = 1.0;
    for (int k = 0; k <= degree; ++k) {
      t[k] = std::exp(a * q.value()) * std::pow(a, k) / f;
      f *= (k + 1);
    }
    return compose(q, t);
  };
}

ExpansionTerms expansion_terms(const TensorField& hf, const ScalarJetFn& wf, const Point& x) {
  const int n = hf.dim();
  JetMatrix h = hf.jets(x, 4);
  Jet w = wf(x, 4);
  auto H = [&](int i, int j, std::vector<int> d) { return h[i * n + j].derivative(d); };
  ExpansionTerms t;
  // Q leading part.
  double a1 = 0, a2 = 0;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) {
          const double v = H(m, k, {i, l});
          a1 += v * v + H(m, k, {l}) * H(m, k, {i, i, l});
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double lap = 0;
      for (int m = 0; m < n; ++m) lap += H(i, j, {m, m});
      a2 += lap * lap;
    }
  t.q_lead = a1 / (4.0 * (n - 1)) - a2 / (2.0 * (n - 2.0) * (n - 2.0));
  // Linear part of Delta_g^2 - Delta^2.
  double b = 0;
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        b -= H(i, j, {s, s}) * w.derivative({i, j}) + 2.0 * H(i, j, {s}) * w.derivative({s, i, j}) +
             2.0 * H(i, j, {}) * w.derivative({s, s, i, j});
  t.bilap_diff_lead = b;
  // Linear part of div_g(Ric(grad w)).
  double d = 0;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m)
        d -= 0.5 * H(i, l, {i, m, m}) * w.derivative({l}) + 0.5 * H(i, l, {m, m}) * w.derivative({i, l});
  t.div_ric_lead = d;

  ExpMetric g(std::shared_ptr<const TensorField>(&hf, [](const TensorField*) {}));
  PaneitzParts p = paneitz_parts(g, wf, x);
  MetricSample s = curvature_at(g, x);
  t.q_exact = s.Q;
  t.bilap_diff_exact = p.bilap - flat_bilaplacian(w);
  t.div_ric_exact = p.ric_hess + 0.5 * p.dr_du;
  return t;
}

ExpansionResidual expansion_residual(const std::function<std::shared_ptr<const TensorField>(double)>& h_of_mu,
                                     const ScalarJetFn& w, const Point& x, const std::vector<double>& mu) {
  ExpansionResidual r;
  r.mu = mu;
  r.q_remainder.resize(mu.size());
  r.bilap_remainder.resize(mu.size());
  r.div_ric_remainder.resize(mu.size());
  parallel_for(mu.size(), [&](std::size_t k) {
    auto h = h_of_mu(mu[k]);
    ExpansionTerms t = expansion_terms(*h, w, x);
    r.q_remainder[k] = std::abs(t.q_exact - t.q_lead);
    r.bilap_remainder[k] = std::abs(t.bilap_diff_exact - t.bilap_diff_lead);
    r.div_ric_remainder[k] = std::abs(t.div_ric_exact - t.div_ric_lead);
  });
  auto slope = [&](const std::vector<double>& y) {
    for (double v : y)
      if (!(v > 0)) return 0.0;
    return loglog_slope(mu, y);
  };
  r.q_slope = slope(r.q_remainder);
  r.bilap_slope = slope(r.bilap_remainder);
  r.div_ric_slope = slope(r.div_ric_remainder);
  return r;
}

}  // namespace qcl
