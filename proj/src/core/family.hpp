#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "bubbles.hpp"

namespace qcl {

// Pairing matrix of the cut-off family phi-bar_(i,k) with the parameter derivatives of the
// glued bubbles: entry ((i,k),(j,m)) = eps_j int phi-bar_(i,k) d_m w-bar_j, where d_0 = d/d eps_j
// and d_m = d/d xi_(j,m). Rows and columns are ordered i * (n+1) + k.
struct BetaMatrix {
  Eigen::MatrixXd beta;
  double max_diagonal = 0;
  double min_diagonal = 0;   // smallest |diagonal entry|
  double max_offdiagonal = 0;
  // Largest radial quadrature error estimate over the computed entries.
  double quad_error = 0;
};

// Same-bubble entries use radial quadrature over B_(2 r_i) times exact sphere moments;
// entries of distinct bubbles vanish because the supports are disjoint.
BetaMatrix beta_matrix(const Dim& dim, const MultiBubbleConfig& cfg, double tol = 1e-12);

// |<phi_k, w>| / (||phi_k||_(2n/(n+4)) ||w||_(2n/(n-4))) for the unit bubble, k = 0 (scale) and
// k = 1 (translation; the others follow by symmetry).
struct OrthogonalityResult {
  double scale_ratio = 0;
  double translation_ratio = 0;
  double max_ratio() const { return std::max(scale_ratio, translation_ratio); }
};
OrthogonalityResult phi_orthogonality(const Dim& dim);

}  // namespace qcl
