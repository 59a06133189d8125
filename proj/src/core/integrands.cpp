#include "integrands.hpp"

namespace qcl {

const char* quad_term_name(int k) {
  static const char* names[kQuadTerms] = {"hh_d3w_dw",   "h_d2w_sq",     "dh_sq_dw_sq", "mixed_derivative",
                                          "dh_dh_dw_dw", "laph_sq_w_sq", "hess_h_sq_w_sq", "dh_dlaph_w_sq",
                                          "h_laph_dw_dw"};
  return names[k];
}

TermArray reduced_energy_coefficients(int n) {
  const Dim d(n);
  return {-1.0,
          1.0,
          -d.b / 4.0,
          d.a / 2.0,
          d.a / 4.0,
          -(n - 4.0) / (4.0 * (n - 2.0) * (n - 2.0)),
          (n - 4.0) / (8.0 * (n - 1.0)),
          (n - 4.0) / (8.0 * (n - 1.0)),
          d.b / 2.0};
}

TermArray expansion_coefficients(int n) {
  TermArray c = reduced_energy_coefficients(n);
  c[8] = -Dim(n).a / 2.0;
  return c;
}

namespace {

struct Workspace {
  const PolyContext& ctx;
  int k;  // Weyl slots
  const std::vector<PolyField>& H;
  PolyField w;
  std::vector<PolyField> dw;                // D_a w, all active slots
  std::vector<std::vector<PolyField>> ddw;  // D_a D_b w on Weyl slots
  PolyField ws;                             // dw/ds
  std::vector<std::vector<PolyField>> dH;   // D_a H_ij (index [ij][a]), all active slots
  std::vector<PolyField> dsH;               // dH/ds
  std::vector<PolyField> lapH;

  Workspace(const BubbleFrame& fr, const std::vector<PolyField>& hbar)
      : ctx(fr.ctx), k(int(fr.weyl_slots.size())), H(hbar) {
    const int m = ctx.m();
    w = pf_bubble(ctx);
    ws = pf_ds(ctx, w);
    dw.resize(m);
    for (int a = 0; a < m; ++a) dw[a] = pf_d(ctx, w, a);
    ddw.assign(k, std::vector<PolyField>(k));
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b) ddw[a][b] = ddw[b][a] = pf_d(ctx, dw[a], b);
    dH.assign(H.size(), {});
    dsH.resize(H.size());
    lapH.resize(H.size());
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const int e = i * k + j;
        if (j < i) {
          dH[e] = dH[j * k + i];
          dsH[e] = dsH[j * k + i];
          lapH[e] = lapH[j * k + i];
          continue;
        }
        if (H[e].empty()) continue;
        dH[e].resize(m);
        for (int a = 0; a < m; ++a) dH[e][a] = pf_d(ctx, H[e], a);
        dsH[e] = pf_ds(ctx, H[e]);
        lapH[e] = pf_laplacian(ctx, H[e]);
      }
  }
  const PolyField& h(int i, int j) const { return H[i * k + j]; }
  bool zero(int i, int j) const { return H[i * k + j].empty(); }
};

}  // namespace

std::array<PolyField, kQuadTerms> quad_term_fields(const BubbleFrame& fr, const std::vector<PolyField>& hbar) {
  Workspace ws(fr, hbar);
  const PolyContext& ctx = fr.ctx;
  const int k = ws.k, m = ctx.m();
  std::array<PolyField, kQuadTerms> T;
  if (k == 0) return T;
  const PolyField Q = pf_passive_norm2(ctx);
  const PolyField w2 = ws.w * ws.w;
  const PolyField lapw = pf_laplacian(ctx, ws.w);

  // 0: h_il h_jl d_i Lap w d_j w.
  {
    std::vector<PolyField> dlapw(k);
    for (int i = 0; i < k; ++i) dlapw[i] = pf_d(ctx, lapw, i);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        PolyField hh;
        for (int l = 0; l < k; ++l)
          if (!ws.zero(i, l) && !ws.zero(j, l)) hh += ws.h(i, l) * ws.h(j, l);
        if (!hh.empty()) T[0] += hh * (dlapw[i] * ws.dw[j]);
      }
  }
  // 1: (h_ij d_i d_j w)^2.
  {
    PolyField s;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (!ws.zero(i, j)) s += ws.h(i, j) * ws.ddw[i][j];
    T[1] = s * s;
  }
  // 2: |dh|^2 |dw|^2.
  {
    PolyField dh2;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (!ws.zero(i, j)) dh2 += pf_grad_dot(ctx, ws.h(i, j), ws.h(i, j));
    T[2] = dh2 * pf_grad_dot(ctx, ws.w, ws.w);
  }
  // 3: mixed first-derivative term contracted with d_m(d_i w d_j w).
  {
    // dU[i][j][m] = D_m(D_i w D_j w) on Weyl slots.
    auto dU = [&](int i, int j, int mm) { return ws.ddw[mm][i] * ws.dw[j] + ws.dw[i] * ws.ddw[mm][j]; };
    // Sum over all coordinates i of d_i X d_m(d_i w d_j w).
    std::vector<std::vector<PolyField>> dmdw(m, std::vector<PolyField>(k));
    for (int a = 0; a < m; ++a)
      for (int mm = 0; mm < k; ++mm) dmdw[a][mm] = pf_d(ctx, ws.dw[a], mm);
    std::vector<PolyField> dm_ws(k);
    for (int mm = 0; mm < k; ++mm) dm_ws[mm] = pf_d(ctx, ws.ws, mm);
    auto contract_i = [&](int xe, int mm, int j) {
      PolyField out;
      if (ws.H[xe].empty()) return out;
      for (int a = 0; a < m; ++a)
        out += ws.dH[xe][a] * (dmdw[a][mm] * ws.dw[j] + ws.dw[a] * ws.ddw[mm][j]);
      if (ctx.passive() > 0)
        out += 4.0 * (Q * (ws.dsH[xe] * (dm_ws[mm] * ws.dw[j] + ws.ws * ws.ddw[mm][j])));
      return out;
    };
    PolyField t;
    for (int mm = 0; mm < k; ++mm)
      for (int s = 0; s < k; ++s) {
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            PolyField a;
            if (!ws.zero(mm, s) && !ws.zero(i, j)) a += ws.h(mm, s) * ws.dH[i * k + j][s];
            if (!ws.zero(s, i) && !ws.zero(mm, j)) a -= ws.h(s, i) * ws.dH[mm * k + j][s];
            if (!a.empty()) t += a * dU(i, j, mm);
          }
        for (int j = 0; j < k; ++j) {
          if (!ws.zero(s, j)) t += ws.h(s, j) * contract_i(mm * k + s, mm, j);
          if (!ws.zero(mm, s)) t -= ws.h(mm, s) * contract_i(s * k + j, mm, j);
        }
      }
    T[3] = t;
  }
  // 4: (grad h_ms . grad w)^2.
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (!ws.zero(i, j)) {
        PolyField g = pf_grad_dot(ctx, ws.h(i, j), ws.w);
        T[4] += g * g;
      }
  // 5, 6, 7: curvature-type terms against w^2.
  {
    PolyField t5, t6, t7;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (ws.zero(i, j)) continue;
        const int e = i * k + j;
        t5 += ws.lapH[e] * ws.lapH[e];
        t6 += pf_hess_dot(ctx, ws.H[e], ws.H[e]);
        t7 += pf_grad_dot(ctx, ws.H[e], ws.lapH[e]);
      }
    T[5] = t5 * w2;
    T[6] = t6 * w2;
    T[7] = t7 * w2;
  }
  // 8: h_is Lap h_js d_i w d_j w.
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      PolyField hl;
      for (int s = 0; s < k; ++s)
        if (!ws.zero(i, s) && !ws.zero(j, s)) hl += ws.h(i, s) * ws.lapH[j * k + s];
      if (!hl.empty()) T[8] += hl * (ws.dw[i] * ws.dw[j]);
    }
  return T;
}

PolyField gamma_bar_field(const BubbleFrame& fr, const std::vector<PolyField>& hbar) {
  Workspace ws(fr, hbar);
  const PolyContext& ctx = fr.ctx;
  const int k = ws.k, n = ctx.n;
  PolyField g;
  if (k == 0) return g;
  const PolyField lapw = pf_laplacian(ctx, ws.w);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (ws.zero(i, j)) continue;
      const int e = i * k + j;
      g += 2.0 * (ws.H[e] * pf_d(ctx, pf_d(ctx, lapw, i), j));
      g += 2.0 * pf_grad_dot(ctx, ws.H[e], ws.ddw[i][j]);
      g += (double(n) / (n - 2.0)) * (ws.lapH[e] * ws.ddw[i][j]);
      g += (2.0 / (n - 2.0)) * (pf_d(ctx, ws.lapH[e], j) * ws.dw[i]);
    }
  return g;
}

TermArray quad_term_values(const JetMatrix& h, const Jet& w, int n) {
  auto H0 = [&](int i, int j) { return h[i * n + j].value(); };
  auto H1 = [&](int i, int j, int a) { return h[i * n + j].derivative({a}); };
  auto H2 = [&](int i, int j, int a, int b) { return h[i * n + j].derivative({a, b}); };
  std::vector<double> lapH(n * n, 0.0), dlapH(n * n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < n; ++s) {
        lapH[i * n + j] += h[i * n + j].derivative({s, s});
        for (int a = 0; a < n; ++a) dlapH[(i * n + j) * n + a] += h[i * n + j].derivative({a, s, s});
      }
  std::vector<double> w1(n), w2(n * n), dlapw(n, 0.0);
  for (int a = 0; a < n; ++a) {
    w1[a] = w.derivative({a});
    for (int b = 0; b < n; ++b) w2[a * n + b] = w.derivative({a, b});
    for (int s = 0; s < n; ++s) dlapw[a] += w.derivative({a, s, s});
  }
  const double w0 = w.value();
  double dw2 = 0;
  for (double v : w1) dw2 += v * v;
  TermArray T{};
  double s1 = 0, dh2 = 0, t5 = 0, t6 = 0, t7 = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) T[0] += H0(i, l) * H0(j, l) * dlapw[i] * w1[j];
      s1 += H0(i, j) * w2[i * n + j];
      double g = 0;
      for (int a = 0; a < n; ++a) {
        dh2 += H1(i, j, a) * H1(i, j, a);
        g += H1(i, j, a) * w1[a];
        t7 += H1(i, j, a) * dlapH[(i * n + j) * n + a];
        for (int b = 0; b < n; ++b) t6 += H2(i, j, a, b) * H2(i, j, a, b);
      }
      T[4] += g * g;
      t5 += lapH[i * n + j] * lapH[i * n + j];
      for (int s = 0; s < n; ++s) T[8] += H0(i, s) * lapH[j * n + s] * w1[i] * w1[j];
    }
  T[1] = s1 * s1;
  T[2] = dh2 * dw2;
  T[5] = t5 * w0 * w0;
  T[6] = t6 * w0 * w0;
  T[7] = t7 * w0 * w0;
  for (int m = 0; m < n; ++m)
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double c = H0(m, s) * H1(i, j, s) - H0(s, i) * H1(m, j, s) + H0(s, j) * H1(m, s, i) -
                           H0(m, s) * H1(s, j, i);
          if (c == 0.0) continue;
          T[3] += c * (w2[m * n + i] * w1[j] + w1[i] * w2[m * n + j]);
        }
  return T;
}

}  // namespace qcl
