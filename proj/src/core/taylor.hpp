#pragma once

#include <array>
#include <cmath>

namespace qcl {

// Truncated univariate Taylor series: c[k] = f^(k)(t0) / k!.
template <int K>
struct Taylor {
  std::array<double, K + 1> c{};

  static Taylor constant(double v) {
    Taylor t;
    t.c[0] = v;
    return t;
  }
  static Taylor variable(double v) {
    Taylor t;
    t.c[0] = v;
    if constexpr (K >= 1) t.c[1] = 1.0;
    return t;
  }

  double value() const { return c[0]; }
  // k-th derivative.
  double deriv(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }

  Taylor& operator+=(const Taylor& o) {
    for (int i = 0; i <= K; ++i) c[i] += o.c[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int i = 0; i <= K; ++i) c[i] -= o.c[i];
    return *this;
  }
  Taylor& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <int K>
Taylor<K> operator+(Taylor<K> a, const Taylor<K>& b) { return a += b; }
template <int K>
Taylor<K> operator-(Taylor<K> a, const Taylor<K>& b) { return a -= b; }
template <int K>
Taylor<K> operator-(Taylor<K> a) { return a *= -1.0; }
template <int K>
Taylor<K> operator*(Taylor<K> a, double s) { return a *= s; }
template <int K>
Taylor<K> operator*(double s, Taylor<K> a) { return a *= s; }
template <int K>
Taylor<K> operator+(Taylor<K> a, double s) { a.c[0] += s; return a; }
template <int K>
Taylor<K> operator+(double s, Taylor<K> a) { a.c[0] += s; return a; }
template <int K>
Taylor<K> operator-(Taylor<K> a, double s) { a.c[0] -= s; return a; }
template <int K>
Taylor<K> operator-(double s, const Taylor<K>& a) { return (-a) + s; }

template <int K>
Taylor<K> operator*(const Taylor<K>& a, const Taylor<K>& b) {
  Taylor<K> r;
  for (int i = 0; i <= K; ++i)
    for (int j = 0; i + j <= K; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

template <int K>
Taylor<K> operator/(const Taylor<K>& a, const Taylor<K>& b) {
  Taylor<K> r;
  for (int k = 0; k <= K; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}
template <int K>
Taylor<K> operator/(double s, const Taylor<K>& b) { return Taylor<K>::constant(s) / b; }
template <int K>
Taylor<K> operator/(Taylor<K> a, double s) { return a *= 1.0 / s; }

template <int K>
Taylor<K> exp(const Taylor<K>& a) {
  Taylor<K> e;
  e.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * e.c[k - j];
    e.c[k] = s / k;
  }
  return e;
}

template <int K>
Taylor<K> log(const Taylor<K>& a) {
  Taylor<K> l;
  l.c[0] = std::log(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= double(j) / k * l.c[j] * a.c[k - j];
    l.c[k] = s / a.c[0];
  }
  return l;
}

// a^p for a(t0) > 0.
template <int K>
Taylor<K> pow(const Taylor<K>& a, double p) {
  Taylor<K> b;
  b.c[0] = std::pow(a.c[0], p);
  for (int k = 1; k <= K; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += (p * j - (k - j)) * a.c[j] * b.c[k - j];
    b.c[k] = s / (k * a.c[0]);
  }
  return b;
}

template <int K>
Taylor<K> sqrt(const Taylor<K>& a) { return pow(a, 0.5); }

}  // namespace qcl
