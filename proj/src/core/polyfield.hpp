#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "bubbles.hpp"
#include "constants.hpp"
#include "perturbation.hpp"

namespace qcl {

// Symbolic fields on R^n of the form sum_e P_e(y_A, L, s) (eps^2 + s)^(-e/2), where
// y_A are the active coordinates, L = v.y for a fixed vector v supported on them,
// and s = |y|^2 over all n coordinates. Passive coordinates enter only through s.

constexpr int kMaxActive = 14;
constexpr int kFieldL = 14;
constexpr int kFieldS = 15;

// Exponents packed one byte per field.
struct MonoKey {
  std::uint64_t lo = 0, hi = 0;
  int get(int f) const { return int(((f < 8 ? lo : hi) >> (8 * (f & 7))) & 0xff); }
  void add(int f, int k) {
    const std::uint64_t d = std::uint64_t(k) << (8 * (f & 7));
    if (f < 8)
      lo += d;
    else
      hi += d;
  }
  MonoKey operator+(const MonoKey& o) const { return {lo + o.lo, hi + o.hi}; }
  bool operator==(const MonoKey& o) const { return lo == o.lo && hi == o.hi; }
};

struct MonoKeyHash {
  std::size_t operator()(const MonoKey& k) const {
    std::uint64_t z = k.lo * 0x9e3779b97f4a7c15ULL ^ (k.hi + 0x632be59bd9b4e019ULL + (k.lo << 6) + (k.lo >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return std::size_t(z ^ (z >> 31));
  }
};

class Poly {
 public:
  using Map = std::unordered_map<MonoKey, double, MonoKeyHash>;

  static Poly constant(double c);
  // The variable in the given field (active slot, kFieldL or kFieldS).
  static Poly var(int field);

  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const Map& terms() const { return terms_; }
  void add_term(const MonoKey& k, double c);

  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly& operator*=(double c);
  Poly& axpy(double c, const Poly& o);
  friend Poly operator*(const Poly& a, const Poly& b);
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, double c) { return a *= c; }
  friend Poly operator*(double c, Poly a) { return a *= c; }

  // Partial derivative with respect to one field.
  Poly diff(int field) const;
  Poly times_var(int field) const;
  // Largest total y-degree (active exponents + L exponent + 2 * s exponent).
  int degree() const;

 private:
  Map terms_;
};

// Geometry shared by all fields of one assembly.
struct PolyContext {
  int n = 0;
  // Original coordinate index of each active slot.
  std::vector<int> active;
  // Components of v on the active slots.
  std::vector<double> v;
  double eps = 1.0;
  int m() const { return int(active.size()); }
  int passive() const { return n - m(); }
};

class PolyField {
 public:
  // Keyed by e2 = twice the exponent e of (eps^2 + s)^(-e).
  std::map<int, Poly> parts;

  static PolyField poly(const Poly& p, int e2 = 0);
  bool empty() const;
  std::size_t size() const;

  PolyField& operator+=(const PolyField& o);
  PolyField& operator-=(const PolyField& o);
  PolyField& operator*=(double c);
  PolyField& axpy(double c, const PolyField& o);
  friend PolyField operator*(const PolyField& a, const PolyField& b);
  friend PolyField operator+(PolyField a, const PolyField& b) { return a += b; }
  friend PolyField operator-(PolyField a, const PolyField& b) { return a -= b; }
  friend PolyField operator*(PolyField a, double c) { return a *= c; }
  friend PolyField operator*(double c, PolyField a) { return a *= c; }
};

// Total derivative along active slot a.
PolyField pf_d(const PolyContext& ctx, const PolyField& f, int a);
// Derivative with respect to s.
PolyField pf_ds(const PolyContext& ctx, const PolyField& f);
// s - |y_A|^2, the squared norm of the passive part.
PolyField pf_passive_norm2(const PolyContext& ctx);
PolyField pf_laplacian(const PolyContext& ctx, const PolyField& f);
// sum over all n coordinates of d_k f d_k g.
PolyField pf_grad_dot(const PolyContext& ctx, const PolyField& f, const PolyField& g);
// sum over all n^2 coordinate pairs of d_k d_l f d_k d_l g.
PolyField pf_hess_dot(const PolyContext& ctx, const PolyField& f, const PolyField& g);

// Value at y given by its active components (slot order) and s = |y|^2.
double pf_eval(const PolyContext& ctx, const PolyField& f, const std::vector<double>& y_active, double s);

struct PfIntegral {
  double value = 0;
  // Sum of absolute contributions; value is accurate to about 1e-15 times this.
  double abs_sum = 0;
  // Most slowly decaying radial power r^(deg - 2e) found (before the n-1 volume factor).
  double slowest_power = -1e300;
};
// Integral over R^n; throws DomainError when some part is not integrable.
PfIntegral pf_integrate(const PolyContext& ctx, const PolyField& f);
// Sphere integral of f over |y| = r as sum coef r^deg (eps^2 + r^2)^(-e2/2).
struct PfRadialTerm {
  int e2 = 0, deg = 0;
  double coef = 0;
};
std::vector<PfRadialTerm> pf_radial_profile(const PolyContext& ctx, const PolyField& f);
double pf_radial_eval(const std::vector<PfRadialTerm>& terms, double eps, double r);
// Integral of a polynomial over the unit sphere S^(n-1) (s = 1).
double pf_sphere_integral(const PolyContext& ctx, const Poly& p);

// Bubble w_(xi, eps) about its own center.
PolyField pf_bubble(const PolyContext& ctx);
// d w_(xi,eps) / d eps.
PolyField pf_bubble_deps(const PolyContext& ctx);

// Frame for a normalized perturbation seen from a bubble center xi: the active set is
// supp W plus one passive axis carrying the part of xi outside supp W.
struct BubbleFrame {
  PolyContext ctx;
  // Orthogonal map from original coordinates to frame coordinates (fixes supp W).
  Eigen::MatrixXd rotation;
  Point xi;
  // xi in frame coordinates, restricted to the active slots.
  std::vector<double> xi_active;
  // Weyl tensor restricted to active slots, indexed by slot.
  std::vector<WeylTensor::Entry> w_entries;
  std::vector<int> weyl_slots;
};
BubbleFrame bubble_frame(const WeylTensor& W, const Point& xi, double eps);
// Maps x to (y_active, s) in the frame, y = x - xi.
void frame_coords(const BubbleFrame& fr, const Point& x, std::vector<double>& y_active, double& s);

// mu lambda^8 f(|xi + y|^2 / lambda^2) H_ij(xi + y) for i, j in the Weyl support (slot indices), with
// L = xi.y. The defaults give the normalized tensor Hbar.
std::vector<PolyField> pf_hbar(const BubbleFrame& fr, double tau, double lambda = 1.0, double mu = 1.0);

}  // namespace qcl
