#include "tensor.hpp"

#include <algorithm>

namespace qcl {

DerivTensor tensor_from_jet(const Jet& j, int order) {
  const int n = j.space().n();
  DerivTensor t;
  t.n = n;
  t.order = order;
  std::size_t total = 1;
  for (int i = 0; i < order; ++i) total *= n;
  t.v.resize(total);
  std::vector<int> idx(order, 0), sorted;
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (int i = order - 1; i >= 0; --i) {
      idx[i] = int(r % n);
      r /= n;
    }
    sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    t.v[k] = j.derivative(sorted);
  }
  return t;
}

}  // namespace qcl
