#include "linsolve.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "integrands.hpp"
#include "polyfield.hpp"
#include "quadrature.hpp"
#include "util.hpp"

namespace qcl {

namespace {

using LD = long double;
using SpLD = Eigen::SparseMatrix<LD>;
using VecLD = Eigen::Matrix<LD, Eigen::Dynamic, 1>;

constexpr int kGauss = 8;

double dot_pt(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Cubic Hermite shapes on [0, 1] for an element of length h: values, d/ds, d2/ds2.
template <class T>
void hermite(T xi, T h, T* v, T* d1, T* d2) {
  const T x2 = xi * xi, x3 = x2 * xi;
  v[0] = 1 - 3 * x2 + 2 * x3;
  v[1] = h * (xi - 2 * x2 + x3);
  v[2] = 3 * x2 - 2 * x3;
  v[3] = h * (-x2 + x3);
  d1[0] = (-6 * xi + 6 * x2) / h;
  d1[1] = 1 - 4 * xi + 3 * x2;
  d1[2] = (6 * xi - 6 * x2) / h;
  d1[3] = -2 * xi + 3 * x2;
  d2[0] = (-6 + 12 * xi) / (h * h);
  d2[1] = (-4 + 6 * xi) / h;
  d2[2] = (6 - 12 * xi) / (h * h);
  d2[3] = (-2 + 6 * xi) / h;
}

}  // namespace

RadialSector::RadialSector(int N, RadialFn V, double L, double beta, int elements, double r_trunc)
    : N_(N), V_(std::move(V)), L_(L), beta_(beta), r_trunc_(r_trunc), elements_(elements) {
  if (N < 1) throw DomainError("radial dimension must be positive");
  if (!(L > 0)) throw DomainError("grid map scale must be positive");
  if (elements < 4) throw DomainError("radial grid needs at least 5 nodes");
  if (r_trunc < 0) throw DomainError("truncation radius must be non-negative");
  s_end_ = r_trunc > 0 ? r_trunc / (L + r_trunc) : 1.0;
  build();
}

double RadialSector::omega(double r) const {
  return beta_ == 0.0 ? 1.0 : std::pow(1.0 + r * r / (L_ * L_), -0.5 * beta_);
}

void RadialSector::build() {
  const int nn = elements_ + 1;
  dof_.assign(2 * nn, 0);
  dof_[1] = -1;  // chi'(0) = 0
  if (truncated()) dof_[2 * nn - 2] = dof_[2 * nn - 1] = -1;
  ndof_ = 0;
  for (int& d : dof_)
    if (d >= 0) d = ndof_++;

  std::vector<double> gt, gw;
  gauss_jacobi(kGauss, 0.0, 0.0, gt, gw);
  // Assembly in extended precision: near the origin the weight r^(N-1) makes the
  // nodal values sensitive to rounding in the element contributions.
  const LD h = LD(s_end_) / elements_;
  qp_.clear();
  qp_.reserve(std::size_t(elements_) * kGauss);
  std::vector<Eigen::Triplet<LD>> tk, tv;
  const LD L = L_, b = beta_;
  for (int e = 0; e < elements_; ++e) {
    for (int g = 0; g < kGauss; ++g) {
      const LD xi = 0.5L * (LD(gt[g]) + 1.0L), wq = 0.5L * LD(gw[g]) * h;
      const LD s = (e + xi) * h;
      const LD r = L * s / (1 - s), rs = L / ((1 - s) * (1 - s)), rss = 2 * L / ((1 - s) * (1 - s) * (1 - s));
      const LD q2 = L * L + r * r;
      const LD g1 = -b * r / q2;
      const LD g2 = b * b * r * r / (q2 * q2) - b * (L * L - r * r) / (q2 * q2);
      const LD lw = (b == 0.0L ? 0.0L : -0.5L * b * std::log1p(r * r / (L * L)));
      const LD base = (N_ - 1) * std::log(r) + std::log(rs) + std::log(wq);
      QPoint p;
      p.r = double(r);
      p.elem = e;
      p.m1 = std::exp(base + lw);
      p.m2 = std::exp(base + 2 * lw);
      LD v[4], d1[4], d2[4];
      hermite(xi, h, v, d1, d2);
      for (int a = 0; a < 4; ++a) {
        const LD cr = d1[a] / rs;
        const LD crr = d2[a] / (rs * rs) - d1[a] * rss / (rs * rs * rs);
        p.B[a] = v[a];
        p.LB[a] = crr + (2 * g1 + (N_ - 1) / r) * cr + (g2 + (N_ - 1) * g1 / r) * v[a];
      }
      const LD Vr = V_(double(r));
      for (int a = 0; a < 4; ++a) {
        const int ia = dof_[2 * e + a];
        if (ia < 0) continue;
        for (int c = 0; c < 4; ++c) {
          const int ic = dof_[2 * e + c];
          if (ic < 0) continue;
          tk.emplace_back(ia, ic, p.m2 * p.LB[a] * p.LB[c]);
          tv.emplace_back(ia, ic, p.m2 * Vr * p.B[a] * p.B[c]);
        }
      }
      qp_.push_back(p);
    }
  }
  K0l_.resize(ndof_, ndof_);
  MVl_.resize(ndof_, ndof_);
  K0l_.setFromTriplets(tk.begin(), tk.end());
  MVl_.setFromTriplets(tv.begin(), tv.end());
  K0_ = K0l_.cast<double>();
  MV_ = MVl_.cast<double>();
}

Eigen::VectorXd RadialSector::project(const RadialFn& g) const {
  VecLD out = VecLD::Zero(ndof_);
  for (const QPoint& p : qp_) {
    const LD gv = LD(g(p.r)) * p.m1;
    if (gv == 0.0L) continue;
    for (int a = 0; a < 4; ++a) {
      const int i = dof_[2 * p.elem + a];
      if (i >= 0) out(i) += gv * p.B[a];
    }
  }
  return out.cast<double>();
}

double RadialSector::eval(const Eigen::VectorXd& coef, double r, int deriv) const {
  if (r < 0) throw DomainError("radius must be non-negative");
  if (truncated() && r >= r_trunc_) return 0.0;
  const double s = r / (L_ + r);
  const double h = s_end_ / elements_;
  const int e = std::min(elements_ - 1, int(s / h));
  const double xi = s / h - e;
  double v[4], d1[4], d2[4];
  hermite(xi, h, v, d1, d2);
  double chi = 0, chis = 0;
  for (int a = 0; a < 4; ++a) {
    const int i = dof_[2 * e + a];
    if (i < 0) continue;
    chi += coef(i) * v[a];
    chis += coef(i) * d1[a];
  }
  const double om = omega(r);
  if (deriv == 0) return om * chi;
  const double rs = L_ / ((1 - s) * (1 - s));
  const double g1 = -beta_ * r / (L_ * L_ + r * r);
  return om * (g1 * chi + chis / rs);
}

double RadialSector::integrate(const std::function<double(double, double)>& f, const Eigen::VectorXd& coef) const {
  double sum = 0;
  for (const QPoint& p : qp_) {
    double chi = 0;
    for (int a = 0; a < 4; ++a) {
      const int i = dof_[2 * p.elem + a];
      if (i >= 0) chi += coef(i) * double(p.B[a]);
    }
    // m2 / m1 = omega and m1 / omega = r^(N-1) r_s w.
    const double om = double(p.m2 / p.m1);
    sum += f(p.r, om * chi) * double(p.m1) / om;
  }
  return sum;
}

struct RadialSector::Factor::Impl {
  SpLD A;  // bordered matrix, unscaled
  VecLD D;  // symmetric diagonal scaling
  Eigen::SparseLU<SpLD, Eigen::COLAMDOrdering<int>> lu;
  int ndof = 0, nc = 0;
  Eigen::MatrixXd C;
};

RadialSector::Factor RadialSector::factor(const std::vector<RadialFn>& constraints) const {
  Factor f;
  auto im = std::make_shared<Factor::Impl>();
  const int nc = int(constraints.size()), tot = ndof_ + nc;
  im->ndof = ndof_;
  im->nc = nc;
  im->C.resize(ndof_, nc);
  for (int k = 0; k < nc; ++k) im->C.col(k) = project(constraints[k]);
  std::vector<Eigen::Triplet<LD>> t;
  const SpLD A = K0l_ - MVl_;
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpLD::InnerIterator it(A, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < nc; ++k)
    for (int i = 0; i < ndof_; ++i)
      if (im->C(i, k) != 0.0) {
        t.emplace_back(i, ndof_ + k, -LD(im->C(i, k)));
        t.emplace_back(ndof_ + k, i, -LD(im->C(i, k)));
      }
  im->A.resize(tot, tot);
  im->A.setFromTriplets(t.begin(), t.end());
  im->D.resize(tot);
  for (int i = 0; i < ndof_; ++i) {
    const LD d = std::abs(K0l_.coeff(i, i));
    im->D(i) = d > 0 ? 1.0L / std::sqrt(d) : 1.0L;
  }
  for (int k = 0; k < nc; ++k) {
    LD s = 0;
    for (int i = 0; i < ndof_; ++i) s += std::pow(im->D(i) * LD(im->C(i, k)), 2);
    im->D(ndof_ + k) = s > 0 ? 1.0L / std::sqrt(s) : 1.0L;
  }
  SpLD As = im->D.asDiagonal() * im->A * im->D.asDiagonal();
  As.makeCompressed();
  im->lu.compute(As);
  // Condition estimate of the scaled matrix by power iterations on As and its inverse.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  auto power = [&](bool inverse) {
    VecLD v(tot);
    for (int i = 0; i < tot; ++i) v(i) = nd(rng);
    LD lam = 0;
    for (int it = 0; it < 30; ++it) {
      v /= v.norm();
      VecLD w = inverse ? VecLD(im->lu.solve(v)) : VecLD(As * v);
      lam = w.norm();
      v = w;
    }
    return double(lam);
  };
  if (im->lu.info() == Eigen::Success) {
    f.cond_ = power(false) * power(true);
  } else {
    f.cond_ = std::numeric_limits<double>::infinity();
  }
  if (!(f.cond_ < 1e17)) {
    std::ostringstream os;
    os << "singular sector system (dimension " << N_ << ", condition estimate " << f.cond_ << ")";
    throw NumericError(os.str());
  }
  f.impl_ = im;
  return f;
}

RadialSector::Solution RadialSector::Factor::solve(const Eigen::VectorXd& load) const {
  const Impl& im = *impl_;
  const int tot = im.ndof + im.nc;
  VecLD rhs = VecLD::Zero(tot);
  for (int i = 0; i < im.ndof; ++i) rhs(i) = -LD(load(i));
  VecLD x = VecLD::Zero(tot);
  for (int it = 0; it < 4; ++it) {
    const VecLD r = rhs - im.A * x;
    const VecLD dy = im.lu.solve(VecLD(im.D.asDiagonal() * r));
    x += im.D.asDiagonal() * dy;
  }
  Solution s;
  s.coef.resize(im.ndof);
  for (int i = 0; i < im.ndof; ++i) s.coef(i) = double(x(i));
  for (int k = 0; k < im.nc; ++k) s.multipliers.push_back(double(x(im.ndof + k)));
  // Residual of the Galerkin equations for the computed solution.
  const VecLD res = im.A * x - rhs;
  const double fmax = load.cwiseAbs().maxCoeff();
  double rmax = 0;
  for (int i = 0; i < im.ndof; ++i) rmax = std::max(rmax, double(std::abs(res(i))));
  s.galerkin_residual = fmax > 0 ? rmax / fmax : rmax;
  double cmax = 0;
  for (int k = 0; k < im.nc; ++k) {
    const double scale = im.C.col(k).norm() * s.coef.norm();
    if (scale > 0) cmax = std::max(cmax, std::abs(im.C.col(k).dot(s.coef)) / scale);
  }
  s.constraint_residual = cmax;
  return s;
}

double RadialSector::min_relative_eigenvalue(const std::vector<RadialFn>& constraints) const {
  Eigen::MatrixXd K = Eigen::MatrixXd(K0_), A = Eigen::MatrixXd(K0_ - MV_);
  Eigen::VectorXd d = K.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
  K = d.asDiagonal() * K * d.asDiagonal();
  A = d.asDiagonal() * A * d.asDiagonal();
  const int nc = int(constraints.size());
  Eigen::MatrixXd Z;
  if (nc == 0) {
    Z = Eigen::MatrixXd::Identity(ndof_, ndof_);
  } else {
    Eigen::MatrixXd C(ndof_, nc);
    for (int k = 0; k < nc; ++k) C.col(k) = d.asDiagonal() * project(constraints[k]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
    Eigen::MatrixXd Q = qr.householderQ();
    Z = Q.rightCols(ndof_ - nc);
  }
  const Eigen::MatrixXd Az = Z.transpose() * A * Z, Kz = Z.transpose() * K * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Az, Kz, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("sector eigenvalue computation failed");
  return es.eigenvalues()(0);
}

std::vector<double> gegenbauer_coefficients(int k, double alpha) {
  std::vector<std::vector<double>> C{{1.0}, {0.0, 2.0 * alpha}};
  for (int j = 2; j <= k; ++j) {
    std::vector<double> c(j + 1, 0.0);
    for (int i = 0; i < j; ++i) c[i + 1] += 2.0 * (j + alpha - 1) * C[j - 1][i];
    for (int i = 0; i <= j - 2; ++i) c[i] -= (j + 2 * alpha - 2) * C[j - 2][i];
    for (double& v : c) v /= j;
    C.push_back(c);
  }
  return C[k];
}

std::vector<double> power_in_gegenbauer(int m, double alpha) {
  // Peel off the leading monomial with the highest remaining Gegenbauer polynomial.
  std::vector<double> rem(m + 1, 0.0), out(m + 1, 0.0);
  rem[m] = 1.0;
  for (int k = m; k >= 0; --k) {
    const auto c = gegenbauer_coefficients(k, alpha);
    const double beta = rem[k] / c[k];
    out[k] = beta;
    for (int i = 0; i <= k; ++i) rem[i] -= beta * c[i];
  }
  return out;
}

namespace {

// Coefficients c_m(t), m = 0..4, of Gamma = W(D, y, D, y) sum_m c_m(t) (D.y)^m for one site, with
// D = xi - y_site, y = x - xi and t = |y|^2.
struct GammaSectorLoad {
  int n;
  double eps, mu, lambda, a2;
  std::array<double, 5> g;  // f(s / lambda^2) as a polynomial in s

  std::array<double, 5> coeffs(double t) const {
    using P = std::array<double, 5>;
    auto mul = [](const P& x, const P& y) {
      P z{};
      for (int i = 0; i < 5; ++i)
        for (int j = 0; i + j < 5; ++j) z[i + j] += x[i] * y[j];
      return z;
    };
    const P S{a2 + t, 2.0, 0, 0, 0};
    P gS{}, g1S{}, g2S{}, Sj{1.0, 0, 0, 0, 0};
    std::array<P, 5> pw;
    for (int j = 0; j < 5; ++j) {
      pw[j] = Sj;
      Sj = mul(Sj, S);
    }
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 5; ++i) gS[i] += g[j] * pw[j][i];
      if (j >= 1)
        for (int i = 0; i < 5; ++i) g1S[i] += j * g[j] * pw[j - 1][i];
      if (j >= 2)
        for (int i = 0; i < 5; ++i) g2S[i] += j * (j - 1) * g[j] * pw[j - 2][i];
    }
    const auto c = bubble_profile_taylor(Dim(n), eps, t, 4);
    const double w2 = 2.0 * c[2], w3 = 6.0 * c[3], w4 = 24.0 * c[4];
    const double lap_w_dd = 4.0 * t * w4 + (2.0 * n + 8.0) * w3;
    const P ut{t, 1.0, 0, 0, 0};
    const P a = mul(g1S, ut), sg2 = mul(S, g2S);
    const double pre = mu * std::pow(lambda, 8);
    P out{};
    for (int i = 0; i < 5; ++i)
      out[i] = pre * (8.0 * gS[i] * lap_w_dd + 32.0 * a[i] * w3 +
                      (4.0 * n / (n - 2.0)) * (4.0 * sg2[i] + (2.0 * n + 8.0) * g1S[i]) * w2);
    return out;
  }
};

}  // namespace

struct ZbarSolution::Geometry {
  Point D;
  double dnorm = 0;
  Eigen::MatrixXd rotation;
  std::vector<int> active;
  std::vector<std::vector<double>> zk;  // Gegenbauer coefficients for Z_k
  std::vector<double> A;                // angular norms per sector
  std::vector<std::shared_ptr<RadialSector>> grids;  // per sector
  std::vector<RadialFn> loads;                        // per Gamma sector k
  std::vector<RadialFn> sector_loads;                 // per sector, radial load as solved
};

namespace {

int whole_space_threshold() { return 25; }

double sector_beta(int n, int ell, bool whole) { return whole ? double(n + ell - 14) : 0.0; }

}  // namespace

ZbarSolution solve_zbar(const PerturbationSpec& spec, int site_index, const Bubble& bub, const GridSpec& grid) {
  const int n = spec.n;
  const Dim dim(n);
  check_bubble(dim, bub);
  if (site_index < 0 || site_index >= int(spec.sites.size())) throw DomainError("site index out of range");
  if (grid.nodes < 5) throw DomainError("grid needs at least 5 nodes");
  const Site& st = spec.sites[site_index];
  if (!(st.lambda > 0) || !(st.mu > 0)) throw DomainError("site lambda and mu must be positive");
  const double eps = bub.eps;

  ZbarSolution sol;
  sol.n = n;
  sol.W = spec.W;
  sol.tau = spec.tau;
  sol.site = st;
  sol.bubble = bub;
  sol.grid = grid;
  sol.L = grid.map_scale > 0 ? grid.map_scale : eps;
  sol.r_max = grid.r_max > 0 ? grid.r_max : 1000.0 * std::max(eps, st.lambda);
  sol.whole_space = n >= whole_space_threshold();
  const double r_trunc = sol.whole_space ? 0.0 : sol.r_max;
  const int elements = grid.nodes - 1;

  auto geo = std::make_shared<ZbarSolution::Geometry>();
  geo->D.resize(n);
  for (int i = 0; i < n; ++i) geo->D[i] = bub.xi[i] - st.y[i];
  geo->dnorm = std::sqrt(dot_pt(geo->D, geo->D));

  const double vc = dim.lin_potential();
  RadialFn V = [vc, eps](double r) { return vc * std::pow(2.0 * eps / (eps * eps + r * r), 4); };
  const double area = sphere_area(n);

  // Frame about the bubble center and the symbolic Gamma for the degree-0/1 sectors.
  const BubbleFrame fr = bubble_frame(spec.W, geo->D, eps);
  geo->rotation = fr.rotation;
  geo->active = fr.ctx.active;
  PolyField G;
  if (!spec.W.is_zero()) G = gamma_bar_field(fr, pf_hbar(fr, spec.tau, st.lambda, st.mu));

  auto phi0 = [dim, bub](double r) {
    Point x = bub.xi;
    x[0] += r;
    return phi_eval(dim, bub, 0, x);
  };
  auto rho1 = [dim, bub](double r) {
    Point x = bub.xi;
    x[0] += r;
    return phi_eval(dim, bub, 1, x) / r;
  };

  std::vector<double> b_frame(n + 1, 0.0);
  double cond = 0;

  // ell = 0: radial part, constraint phi_0.
  {
    auto sec = std::make_shared<RadialSector>(n, V, sol.L, sector_beta(n, 0, sol.whole_space), elements, r_trunc);
    const auto prof = pf_radial_profile(fr.ctx, G);
    RadialFn load = [prof, eps, area](double r) { return pf_radial_eval(prof, eps, r) / area; };
    auto fac = sec->factor({phi0});
    cond = std::max(cond, fac.condition_estimate());
    auto s = fac.solve(sec->project(load));
    b_frame[0] = s.multipliers[0];
    sol.sectors.push_back({0, n, -1, -1, s.coef, s.galerkin_residual});
    geo->grids.push_back(sec);
    geo->sector_loads.push_back(load);
    geo->A.push_back(area);
  }
  // ell = 1: one radial problem per active frame axis, constraint phi_a = rho_1(r) y_a.
  {
    auto sec = std::make_shared<RadialSector>(n + 2, V, sol.L, sector_beta(n, 1, sol.whole_space), elements, r_trunc);
    auto fac = sec->factor({rho1});
    cond = std::max(cond, fac.condition_estimate());
    for (int a = 0; a < fr.ctx.m(); ++a) {
      PolyField Gy;
      if (!G.empty()) Gy = G * PolyField::poly(Poly::var(a));
      const auto prof = pf_radial_profile(fr.ctx, Gy);
      RadialFn load = [prof, eps, area, n](double r) { return pf_radial_eval(prof, eps, r) / (r * r * area / n); };
      auto s = fac.solve(sec->project(load));
      b_frame[1 + fr.ctx.active[a]] = s.multipliers[0];
      sol.sectors.push_back({1, n + 2, -1, a, s.coef, s.galerkin_residual});
      geo->grids.push_back(sec);
      geo->sector_loads.push_back(load);
      geo->A.push_back(area / n);
    }
  }
  // ell = 2..6: the Gamma sectors q(y) psi_k(r) Z_k(y), no constraints.
  const double alpha = 0.5 * (n + 2);
  std::vector<std::vector<double>> beta_mk(5);
  for (int m = 0; m <= 4; ++m) beta_mk[m] = power_in_gegenbauer(m, alpha);
  const Quartic fq{spec.tau};
  const auto fc = fq.coeffs();
  GammaSectorLoad gl{n, eps, st.mu, st.lambda, geo->dnorm * geo->dnorm, {}};
  for (int j = 0; j < 5; ++j) gl.g[j] = fc[j] / std::pow(st.lambda, 2 * j);
  const bool trivial = spec.W.is_zero() || geo->dnorm == 0.0;
  // Angular norms of q Z_k on the unit sphere via the frame polynomials.
  Poly qpoly;
  for (const auto& e : fr.w_entries)
    qpoly.axpy(e.value * fr.xi_active[e.i] * fr.xi_active[e.k], Poly::var(e.j) * Poly::var(e.l));
  for (int k = 0; k <= 4; ++k) {
    const int ell = k + 2, N = n + 2 * ell;
    geo->zk.push_back(gegenbauer_coefficients(k, alpha));
    double Ak = 0;
    if (!trivial) {
      Poly Zk;
      const auto& c = geo->zk.back();
      for (int j = 0; j <= k; ++j) {
        if (c[j] == 0.0) continue;
        Poly t = Poly::constant(c[j] / std::pow(geo->dnorm, j));
        for (int i = 0; i < j; ++i) t = t * Poly::var(kFieldL);
        for (int i = 0; i < (k - j) / 2; ++i) t = t * Poly::var(kFieldS);
        Zk += t;
      }
      const Poly qz = qpoly * Zk;
      Ak = pf_sphere_integral(fr.ctx, qz * qz);
    }
    geo->A.push_back(Ak);
    auto sec = std::make_shared<RadialSector>(N, V, sol.L, sector_beta(n, ell, sol.whole_space), elements, r_trunc);
    geo->grids.push_back(sec);
    if (trivial) {
      geo->loads.push_back([](double) { return 0.0; });
      geo->sector_loads.push_back(geo->loads.back());
      sol.sectors.push_back({ell, N, k, -1, Eigen::VectorXd::Zero(sec->size()), 0.0});
      continue;
    }
    const double dn = geo->dnorm;
    RadialFn load = [gl, k, dn, beta_mk](double r) {
      const auto c = gl.coeffs(r * r);
      double v = 0;
      for (int m = k; m <= 4; m += 2) v += c[m] * std::pow(dn, m) * beta_mk[m][k] * std::pow(r, m - k);
      return v;
    };
    geo->loads.push_back(load);
    geo->sector_loads.push_back(load);
    auto fac = sec->factor({});
    cond = std::max(cond, fac.condition_estimate());
    auto s = fac.solve(sec->project(load));
    sol.sectors.push_back({ell, N, k, -1, s.coef, s.galerkin_residual});
  }
  sol.condition_estimate = cond;

  // Multipliers back to original coordinates.
  sol.b.assign(n + 1, 0.0);
  sol.b[0] = b_frame[0];
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sol.b[1 + j] += fr.rotation(i, j) * b_frame[1 + i];
  for (const auto& s : sol.sectors) sol.galerkin_residual = std::max(sol.galerkin_residual, s.galerkin_residual);
  sol.geo = geo;

  // Norms over B_rmax.
  QuadSpec qs;
  qs.tol = 1e-9;
  qs.throw_on_failure = false;
  const std::vector<double> breaks{eps, st.lambda, 10 * st.lambda, 100 * st.lambda};
  std::vector<double> br;
  for (double v : breaks)
    if (v < sol.r_max) br.push_back(v);
  double g2 = 0, z2 = 0;
  for (std::size_t i = 0; i < sol.sectors.size(); ++i) {
    const auto& s = sol.sectors[i];
    const double Ai = geo->A[i];
    if (Ai == 0.0) continue;
    const RadialSector& sec = *geo->grids[i];
    z2 += Ai * integrate([&](double r) { return std::pow(sec.eval(s.coef, r), 2) * std::pow(r, s.N - 1); }, 0.0,
                         sol.r_max, qs, br)
                   .value;
  }
  // Gamma sectors: the loads themselves.
  for (int k = 0; k <= 4 && !trivial; ++k) {
    const int N = n + 4 + 2 * k;
    const double Ak = geo->A[geo->A.size() - 5 + k];
    const double dn = geo->dnorm;
    g2 += Ak * integrate(
                   [&](double r) {
                     const auto c = gl.coeffs(r * r);
                     double v = 0;
                     for (int m = k; m <= 4; m += 2) v += c[m] * std::pow(dn, m) * beta_mk[m][k] * std::pow(r, m - k);
                     return v * v * std::pow(r, N - 1);
                   },
                   0.0, sol.r_max, qs, br)
                   .value;
  }
  sol.gamma_norm = std::sqrt(g2);
  sol.z_norm = std::sqrt(z2);

  // Constraint values: ell = 0/1 sectors directly, Gamma sectors through their angular moments.
  std::vector<double> cons(n + 1, 0.0);
  const double phi0_norm = std::sqrt(
      area * radial_integrate(RadialProfile{[&](double r) { return std::pow(phi0(r), 2); }, 2.0 * (n + 4)}, n, qs).value);
  const double phi1_norm = std::sqrt(
      area / n *
      radial_integrate(RadialProfile{[&](double r) { return std::pow(rho1(r) * r, 2); }, 2.0 * (n + 4)}, n, qs).value);
  for (std::size_t i = 0; i < sol.sectors.size(); ++i) {
    const auto& s = sol.sectors[i];
    const RadialSector& sec = *geo->grids[i];
    if (s.ell == 0) {
      cons[0] += area * sec.integrate([&](double r, double psi) { return phi0(r) * psi; }, s.coef);
    } else if (s.ell == 1) {
      cons[1 + geo->active[s.slot]] +=
          area / n * sec.integrate([&](double r, double psi) { return rho1(r) * psi * r * r; }, s.coef);
    } else if (!trivial) {
      // Angular moments of q Z_k against 1 and y_a on the unit sphere.
      Poly Zk;
      const auto& c = geo->zk[s.gegenbauer];
      for (int j = 0; j <= s.gegenbauer; ++j) {
        if (c[j] == 0.0) continue;
        Poly t = Poly::constant(c[j] / std::pow(geo->dnorm, j));
        for (int q = 0; q < j; ++q) t = t * Poly::var(kFieldL);
        for (int q = 0; q < (s.gegenbauer - j) / 2; ++q) t = t * Poly::var(kFieldS);
        Zk += t;
      }
      const Poly qz = qpoly * Zk;
      const int deg = s.ell;
      const double m0 = pf_sphere_integral(fr.ctx, qz);
      if (m0 != 0.0)
        cons[0] += m0 * sec.integrate([&](double r, double psi) { return phi0(r) * psi * std::pow(r, deg); }, s.coef);
      for (int a = 0; a < fr.ctx.m(); ++a) {
        const double m1 = pf_sphere_integral(fr.ctx, qz * Poly::var(a));
        if (m1 != 0.0)
          cons[1 + geo->active[a]] +=
              m1 * sec.integrate([&](double r, double psi) { return rho1(r) * psi * std::pow(r, deg + 1); }, s.coef);
      }
    }
  }
  double cr = 0;
  if (sol.z_norm > 0) {
    cr = std::abs(cons[0]) / (phi0_norm * sol.z_norm);
    for (int j = 1; j <= n; ++j) cr = std::max(cr, std::abs(cons[j]) / (phi1_norm * sol.z_norm));
  }
  sol.constraint_residual = cr;
  return sol;
}

ZbarSolution solve_zbar_normalized(const WeylTensor& W, double tau, const Bubble& b, const GridSpec& grid) {
  PerturbationSpec spec;
  spec.n = W.dim();
  spec.W = W;
  spec.tau = tau;
  Site s;
  s.y = Point(W.dim(), 0.0);
  spec.sites.push_back(s);
  return solve_zbar(spec, 0, b, grid);
}

double ZbarSolution::value(const Point& x) const {
  if (int(x.size()) != n) throw DomainError("point has the wrong dimension");
  Point y(n);
  for (int i = 0; i < n; ++i) y[i] = x[i] - bubble.xi[i];
  const double r = std::sqrt(dot_pt(y, y));
  Eigen::VectorXd yf = geo->rotation * Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  double z = 0;
  const double q = W.is_zero() ? 0.0 : W.contract(geo->D.data(), y.data(), geo->D.data(), y.data());
  const double u = dot_pt(geo->D, y);
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    const auto& s = sectors[i];
    const double psi = geo->grids[i]->eval(s.coef, r);
    if (psi == 0.0) continue;
    if (s.ell == 0) {
      z += psi;
    } else if (s.ell == 1) {
      z += psi * yf(geo->active[s.slot]);
    } else if (q != 0.0) {
      const auto& c = geo->zk[s.gegenbauer];
      double Z = 0;
      for (int j = 0; j <= s.gegenbauer; ++j)
        if (c[j] != 0.0) Z += c[j] * std::pow(u / geo->dnorm, j) * std::pow(r, s.gegenbauer - j);
      z += q * psi * Z;
    }
  }
  return z;
}

double ZbarSolution::gamma_value(const Point& x) const {
  if (int(x.size()) != n) throw DomainError("point has the wrong dimension");
  if (W.is_zero() || geo->dnorm == 0.0) return 0.0;
  Point y(n);
  for (int i = 0; i < n; ++i) y[i] = x[i] - bubble.xi[i];
  const double r = std::sqrt(dot_pt(y, y)), u = dot_pt(geo->D, y);
  const double q = W.contract(geo->D.data(), y.data(), geo->D.data(), y.data());
  double g = 0;
  for (int k = 0; k <= 4; ++k) {
    const auto& c = geo->zk[k];
    double Z = 0;
    for (int j = 0; j <= k; ++j)
      if (c[j] != 0.0) Z += c[j] * std::pow(u / geo->dnorm, j) * std::pow(r, k - j);
    g += q * geo->loads[k](r) * Z;
  }
  return g;
}

double ZbarSolution::gamma_z_integral() const {
  double sum = 0;
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    if (geo->A[i] == 0.0) continue;
    const RadialFn& g = geo->sector_loads[i];
    sum += geo->A[i] * geo->grids[i]->integrate([&](double r, double psi) { return g(r) * psi; }, sectors[i].coef);
  }
  return sum;
}

double ZbarSolution::sphere_rms(double r) const {
  const double area = sphere_area(n);
  double sum = 0;
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    const double psi = geo->grids[i]->eval(sectors[i].coef, r);
    sum += geo->A[i] * psi * psi * std::pow(r, 2 * sectors[i].ell);
  }
  return std::sqrt(sum / area);
}

ZbarVerification verify_zbar(const ZbarSolution& sol) {
  ZbarVerification v;
  const int n = sol.n;
  const double lam = sol.site.lambda;
  // Decay of the spherical mean square against lambda + r.
  v.decay_r0 = 10 * lam;
  v.decay_r1 = 0.5 * sol.r_max;
  v.decay_target = 14.0 - n;
  v.decay_leading = 12.0 - n;
  std::vector<double> xs, ys;
  const int np = 24;
  for (int i = 0; i < np; ++i) {
    const double r = v.decay_r0 * std::pow(v.decay_r1 / v.decay_r0, double(i) / (np - 1));
    const double z = sol.sphere_rms(r);
    if (z > 0) {
      xs.push_back(lam + r);
      ys.push_back(z);
    }
  }
  if (xs.size() >= 2) {
    v.decay_slope = loglog_slope(xs, ys);
    v.decay_ok = std::abs(v.decay_slope - v.decay_target) <= 0.5;
    v.decay_bound_ok = v.decay_slope <= v.decay_target + 0.5;
  }
  // Two-scale comparison: site scale halved, bubble mapped, different node count.
  {
    PerturbationSpec spec;
    spec.n = n;
    spec.W = sol.W;
    spec.tau = sol.tau;
    Site s2 = sol.site;
    s2.lambda = 0.5 * lam;
    spec.sites.push_back(s2);
    Bubble b2 = sol.bubble;
    for (int i = 0; i < n; ++i) b2.xi[i] = sol.site.y[i] + 0.5 * (sol.bubble.xi[i] - sol.site.y[i]);
    b2.eps = 0.5 * sol.bubble.eps;
    GridSpec g2 = sol.grid;
    g2.nodes = std::max(5, (sol.grid.nodes * 3) / 4);
    g2.map_scale = 0.5 * sol.L;
    g2.r_max = 0.5 * sol.r_max;
    const ZbarSolution z2 = solve_zbar(spec, 0, b2, g2);
    const double factor = std::pow(0.5, 0.5 * (24 - n));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double emax = 0, zmax = 0;
    for (int i = 0; i < 16; ++i) {
      Point dir(n);
      double nn = 0;
      for (auto& d : dir) {
        d = nd(rng);
        nn += d * d;
      }
      const double r = sol.bubble.eps * std::pow(10.0, -1.0 + 2.5 * i / 15.0);
      Point x1(n), x2(n);
      for (int k = 0; k < n; ++k) {
        x1[k] = sol.bubble.xi[k] + r * dir[k] / std::sqrt(nn);
        x2[k] = sol.site.y[k] + 0.5 * (x1[k] - sol.site.y[k]);
      }
      const double a = factor * sol.value(x1), b = z2.value(x2);
      emax = std::max(emax, std::abs(a - b));
      zmax = std::max(zmax, std::abs(a));
    }
    v.scaling_error = zmax > 0 ? emax / zmax : emax;
    v.scaling_ok = v.scaling_error <= 1e-4;
  }
  v.constraint_residual = sol.constraint_residual;
  v.constraint_ok = sol.constraint_residual <= 1e-10;
  double bmax = 0;
  for (double b : sol.b) bmax = std::max(bmax, std::abs(b));
  v.max_multiplier_ratio = sol.gamma_norm > 0 ? bmax / sol.gamma_norm : bmax;
  v.multipliers_ok = sol.gamma_norm > 0 ? v.max_multiplier_ratio < 1e-8 : bmax == 0.0;
  return v;
}

std::vector<double> sector_coercivity(int n, double eps, int elements) {
  const Dim dim(n);
  const bool whole = n >= whole_space_threshold();
  const double vc = dim.lin_potential();
  RadialFn V = [vc, eps](double r) { return vc * std::pow(2.0 * eps / (eps * eps + r * r), 4); };
  const Bubble bub{Point(n, 0.0), eps};
  auto phi0 = [dim, bub](double r) {
    Point x = bub.xi;
    x[0] += r;
    return phi_eval(dim, bub, 0, x);
  };
  auto rho1 = [dim, bub](double r) {
    Point x = bub.xi;
    x[0] += r;
    return phi_eval(dim, bub, 1, x) / r;
  };
  auto wcrit = [dim, bub](double r) {
    Point x = bub.xi;
    x[0] += r;
    return std::pow(bubble_value(dim, bub, x), dim.crit());
  };
  std::vector<double> out;
  for (int ell = 0; ell <= 6; ++ell) {
    RadialSector sec(n + 2 * ell, V, eps, sector_beta(n, ell, whole), elements, whole ? 0.0 : 200.0 * eps);
    std::vector<RadialFn> cons;
    if (ell == 0) cons = {phi0, wcrit};
    if (ell == 1) cons = {rho1};
    out.push_back(sec.min_relative_eigenvalue(cons));
  }
  return out;
}

ManufacturedResult manufactured_check(int n, double eps, double R, int nodes, bool whole_space) {
  const Dim dim(n);
  const int N = n + 4;
  const double vc = dim.lin_potential();
  RadialFn V = [vc, eps](double r) { return vc * std::pow(2.0 * eps / (eps * eps + r * r), 4); };
  // psi* = p(u), u = r^2, p = (1 - u/R^2)^8; Delta_N p(u) = 4 u p'' + 2 N p'.
  std::vector<double> p(9);
  for (int j = 0; j <= 8; ++j) {
    double bin = 1;
    for (int i = 0; i < j; ++i) bin = bin * (8 - i) / (i + 1);
    p[j] = bin * std::pow(-1.0 / (R * R), j);
  }
  auto lap = [N](const std::vector<double>& c) {
    std::vector<double> o(c.size(), 0.0);
    for (std::size_t j = 1; j < c.size(); ++j) {
      o[j - 1] += 2.0 * N * j * c[j];
      if (j >= 2) o[j - 1] += 4.0 * j * (j - 1) * c[j];
    }
    return o;
  };
  const std::vector<double> bl = lap(lap(p));
  auto horner = [](const std::vector<double>& c, double u) {
    double v = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
    return v;
  };
  auto psi_star = [=](double r) { return r < R ? horner(p, r * r) : 0.0; };
  RadialFn load = [=](double r) { return r < R ? V(r) * horner(p, r * r) - horner(bl, r * r) : 0.0; };
  const int ell = 2;
  RadialSector sec(N, V, eps, whole_space ? double(n + ell - 14) : 0.0, nodes - 1, whole_space ? 0.0 : 2.0 * R);
  auto fac = sec.factor({});
  auto s = fac.solve(sec.project(load));
  ManufacturedResult res;
  res.galerkin_residual = s.galerkin_residual;
  for (int i = 0; i <= 600; ++i) {
    const double r = 1.5 * R * i / 600.0;
    res.max_error = std::max(res.max_error, std::abs(sec.eval(s.coef, r) - psi_star(r)));
  }
  return res;
}

}  // namespace qcl
