#pragma once

#include <cstddef>
#include <vector>

#include "jet.hpp"

namespace qcl {

// Full k-th derivative tensor, stored row-major over n^k index tuples.
struct DerivTensor {
  int n = 0;
  int order = 0;
  std::vector<double> v;

  double at(const std::vector<int>& idx) const {
    std::size_t k = 0;
    for (int i : idx) k = k * n + i;
    return v[k];
  }
  double scalar() const { return v.at(0); }
};

// Extract the order-k derivative tensor from a jet of degree >= k.
DerivTensor tensor_from_jet(const Jet& j, int order);

}  // namespace qcl
