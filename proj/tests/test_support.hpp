#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace qcl::test {

inline double rel_err(double a, double b) {
  double s = std::max(std::abs(a), std::abs(b));
  return s == 0 ? 0.0 : std::abs(a - b) / s;
}

inline std::vector<double> random_point(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  double s = 0;
  for (auto& v : x) {
    v = g(rng);
    s += v * v;
  }
  double r = radius * std::pow(u(rng), 1.0 / n) / std::sqrt(s);
  for (auto& v : x) v *= r;
  return x;
}

}  // namespace qcl::test
