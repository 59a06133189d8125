#include "jet.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qcl {

namespace {

void gen_monomials(int n, int degree, std::vector<std::vector<int>>& out) {
  out.push_back({});
  std::vector<std::vector<int>> prev{{}};
  for (int d = 1; d <= degree; ++d) {
    std::vector<std::vector<int>> cur;
    for (const auto& m : prev) {
      int start = m.empty() ? 0 : m.back();
      for (int v = start; v < n; ++v) {
        auto mm = m;
        mm.push_back(v);
        cur.push_back(std::move(mm));
      }
    }
    for (const auto& m : cur) out.push_back(m);
    prev = std::move(cur);
  }
}

}  // namespace

std::shared_ptr<const JetSpace> JetSpace::get(int n, int degree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto sp = std::make_shared<const JetSpace>(n, degree);
  cache.emplace(key, sp);
  return sp;
}

std::uint64_t JetSpace::key_of(const std::vector<int>& v) const {
  std::uint64_t k = 0;
  for (int x : v) k = k * std::uint64_t(n_ + 1) + std::uint64_t(x + 1);
  return k;
}

JetSpace::JetSpace(int n, int degree) : n_(n), degree_(degree) {
  if (n < 1 || degree < 0 || degree > 8) throw std::invalid_argument("JetSpace: bad size");
  std::vector<std::vector<int>> mons;
  gen_monomials(n, degree, mons);
  const std::size_t m = mons.size();
  exps_.assign(m * n, 0);
  deg_.resize(m);
  fact_.resize(m);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> kv(m);
  for (std::size_t k = 0; k < m; ++k) {
    deg_[k] = int(mons[k].size());
    for (int v : mons[k]) exps_[k * n + v]++;
    double f = 1.0;
    for (int v = 0; v < n; ++v)
      for (int e = 2; e <= exps_[k * n + v]; ++e) f *= e;
    fact_[k] = f;
    kv[k] = {key_of(mons[k]), std::uint32_t(k)};
  }
  std::sort(kv.begin(), kv.end());
  keys_.resize(m);
  std::vector<std::uint32_t> ord(m);
  for (std::size_t k = 0; k < m; ++k) {
    keys_[k] = kv[k].first;
    ord[k] = kv[k].second;
  }
  auto lookup = [&](const std::vector<int>& v) -> std::uint32_t {
    auto key = key_of(v);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    return ord[it - keys_.begin()];
  };
  // Multiplication triples sorted by result degree.
  std::vector<std::vector<Triple>> by_deg(degree + 1);
  std::vector<std::size_t> count_le(degree + 1, 0);
  for (std::size_t k = 0; k < m; ++k)
    for (int d = deg_[k]; d <= degree; ++d) count_le[d]++;
  std::vector<int> v;
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t bend = count_le[degree - deg_[a]];
    for (std::size_t b = 0; b < bend; ++b) {
      v.resize(mons[a].size() + mons[b].size());
      std::merge(mons[a].begin(), mons[a].end(), mons[b].begin(), mons[b].end(), v.begin());
      by_deg[v.size()].push_back({std::uint32_t(a), std::uint32_t(b), lookup(v)});
    }
  }
  prod_end_.resize(degree + 1);
  for (int d = 0; d <= degree; ++d) {
    triples_.insert(triples_.end(), by_deg[d].begin(), by_deg[d].end());
    prod_end_[d] = triples_.size();
  }
  deriv_.resize(n);
  for (std::size_t k = 0; k < m; ++k) {
    for (int v = 0; v < n; ++v) {
      int e = exps_[k * n + v];
      if (e == 0) continue;
      std::vector<int> w = mons[k];
      w.erase(std::find(w.begin(), w.end(), v));
      deriv_[v].push_back({std::uint32_t(k), lookup(w), double(e)});
    }
  }
  // Store sorted-key lookup data for index_of.
  index_order_ = std::move(ord);
}

std::size_t JetSpace::index_of(const std::vector<int>& vars) const {
  std::vector<int> v = vars;
  std::sort(v.begin(), v.end());
  if (int(v.size()) > degree_) throw std::out_of_range("JetSpace::index_of: degree too high");
  auto key = key_of(v);
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) throw std::out_of_range("JetSpace::index_of: bad monomial");
  return index_order_[it - keys_.begin()];
}

Jet Jet::constant(std::shared_ptr<const JetSpace> sp, double v) {
  Jet j(std::move(sp));
  j.c_[0] = v;
  return j;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> sp, int v, double x0v) {
  Jet j(std::move(sp));
  j.c_[0] = x0v;
  if (j.sp_->degree() >= 1) j.c_[j.sp_->var_index(v)] = 1.0;
  return j;
}

double Jet::derivative(const std::vector<int>& vars) const {
  std::size_t k = sp_->index_of(vars);
  return c_[k] * sp_->factorial_weight(k);
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}
Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}
Jet& Jet::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}
Jet& Jet::axpy(double s, const Jet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += s * o.c_[k];
  return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }

void fma_trunc(Jet& out, double s, const Jet& a, const Jet& b, int t) {
  const auto& sp = a.space();
  const auto& tr = sp.triples();
  std::size_t end = sp.prod_end(std::min(t, sp.degree()));
  const double* pa = a.coeffs().data();
  const double* pb = b.coeffs().data();
  double* po = out.coeffs().data();
  for (std::size_t i = 0; i < end; ++i) {
    const auto& x = tr[i];
    po[x.c] += s * pa[x.a] * pb[x.b];
  }
}

Jet mul_trunc(const Jet& a, const Jet& b, int t) {
  Jet r(a.space_ptr());
  fma_trunc(r, 1.0, a, b, t);
  return r;
}

Jet operator*(const Jet& a, const Jet& b) { return mul_trunc(a, b, a.space().degree()); }

Jet diff(const Jet& a, int v) {
  Jet r(a.space_ptr());
  for (const auto& e : a.space().deriv_table(v)) r[e.dst] += e.factor * a[e.src];
  return r;
}

Jet compose(const Jet& a, const std::vector<double>& t) {
  const int D = a.space().degree();
  Jet delta = a;
  delta[0] = 0.0;
  int top = std::min<int>(D, int(t.size()) - 1);
  Jet r = Jet::constant(a.space_ptr(), top >= 0 ? t[top] : 0.0);
  for (int k = top - 1; k >= 0; --k) {
    r = mul_trunc(r, delta, D);
    r[0] += t[k];
  }
  return r;
}

}  // namespace qcl
