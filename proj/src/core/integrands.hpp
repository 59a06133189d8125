#pragma once

#include <array>
#include <string>

#include "curvature.hpp"
#include "polyfield.hpp"

namespace qcl {

// The nine integrands quadratic in the perturbation that make up the reduced energy
// (and the local energy expansion), each with unit coefficient:
//   0  h_il h_jl d_i Lap w d_j w
//   1  (h_ij d_i d_j w)^2
//   2  |dh|^2 |dw|^2
//   3  (h_ms d_s h_ij - h_si d_s h_mj + h_sj d_i h_ms - h_ms d_i h_sj) d_m(d_i w d_j w)
//   4  d_j h_ms d_i h_sm d_i w d_j w
//   5  Lap h_ij Lap h_ij w^2
//   6  (d_i d_l h_mk)^2 w^2
//   7  d_l h_mk d_l Lap h_mk w^2
//   8  h_is Lap h_js d_i w d_j w
constexpr int kQuadTerms = 9;
using TermArray = std::array<double, kQuadTerms>;

const char* quad_term_name(int k);

// Coefficients of the reduced energy functional.
TermArray reduced_energy_coefficients(int n);
// Coefficients of the local energy expansion around one bubble.
TermArray expansion_coefficients(int n);

// Symbolic integrand fields for h = Hbar (slot-indexed, from pf_hbar) and the frame's bubble.
std::array<PolyField, kQuadTerms> quad_term_fields(const BubbleFrame& fr, const std::vector<PolyField>& hbar);
// Normalized Gamma-bar as a symbolic field.
PolyField gamma_bar_field(const BubbleFrame& fr, const std::vector<PolyField>& hbar);

// Pointwise integrands from jets of a general h (degree >= 3) and w (degree >= 3) at one point.
TermArray quad_term_values(const JetMatrix& h, const Jet& w, int n);

}  // namespace qcl
