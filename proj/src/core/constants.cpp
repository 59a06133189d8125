#include "constants.hpp"

namespace qcl {

Dim::Dim(int dim) : n(dim) {
  if (dim < 5)
    throw DomainError("dimension n = " + std::to_string(dim) + " rejected: n >= 5 required");
  const double nn = dim;
  a = 4.0 / (nn - 2.0);
  b = ((nn - 2.0) * (nn - 2.0) + 4.0) / (2.0 * (nn - 1.0) * (nn - 2.0));
  c = (nn - 4.0) / 2.0;
  d = nn * (nn - 4.0) * (nn * nn - 4.0) / 16.0;
  qr2 = (nn * nn * nn - 4.0 * nn * nn + 16.0 * nn - 16.0) /
        (8.0 * (nn - 1.0) * (nn - 1.0) * (nn - 2.0) * (nn - 2.0));
}

}  // namespace qcl
