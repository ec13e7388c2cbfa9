#include "hcv/hopf.hpp"

#include <algorithm>
#include <cmath>

#include "hcv/errors.hpp"
#include "hcv/linalg.hpp"

namespace hcv {

namespace {

constexpr cdouble kI(0.0, 1.0);

double norm(const CVec4& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

CVec4 conj(const CVec4& v) {
  return {std::conj(v[0]), std::conj(v[1]), std::conj(v[2]), std::conj(v[3])};
}

CVec4 scale(const CVec4& v, cdouble s) { return {v[0] * s, v[1] * s, v[2] * s, v[3] * s}; }

CVec4 add(const CVec4& x, const CVec4& y) {
  return {x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]};
}

CVec4 apply(const Mat4& m, const CVec4& v) {
  CVec4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i] += m[i][j] * v[j];
  }
  return out;
}

// Hermitian pairing conj(v) . u
cdouble dot_conj(const CVec4& v, const CVec4& u) {
  cdouble s = 0.0;
  for (int i = 0; i < 4; ++i) s += std::conj(v[i]) * u[i];
  return s;
}

struct EndemicTerms {
  double t, i, v;  // T*, I*, V_I*
  double k;        // (1 - c eta1) alpha
  double nf;       // (eta_r + eta1) / 2
};

EndemicTerms endemic_terms(const ModelParams& p, const TherapyEfficacies& eff) {
  const auto e2 = endemic_equilibrium(p, eff);
  if (!e2) throw NumericalFailure("Hopf analysis requires an endemic state (R0 > 1)");
  return {e2->state.t_cells, e2->state.i_cells, e2->state.v_i,
          eff.infection_factor() * p.alpha, eff.noninfectious_fraction()};
}

}  // namespace

DelayedLinearization linearize_endemic(const ModelParams& p, const TherapyEfficacies& eff) {
  const auto e = endemic_terms(p, eff);
  const double f = p.r - p.d1 - 2.0 * p.r * e.t / p.t_max - p.r * e.i / p.t_max - e.k * e.v;
  DelayedLinearization lin{};
  lin.now = {{{f, -p.r * e.t / p.t_max, -e.k * e.t, 0.0},
              {0.0, -p.d2, 0.0, 0.0},
              {0.0, (1.0 - e.nf) * p.beta, -p.d3, 0.0},
              {0.0, e.nf * p.beta, 0.0, -p.d3}}};
  lin.delayed = {{{0.0, 0.0, 0.0, 0.0},
                  {e.k * e.v, 0.0, e.k * e.t, 0.0},
                  {0.0, 0.0, 0.0, 0.0},
                  {0.0, 0.0, 0.0, 0.0}}};
  return lin;
}

CVec4 quadratic_form(const ModelParams& p, const TherapyEfficacies& eff, const CVec4& x0,
                     const CVec4& xl, const CVec4& y0, const CVec4& yl) {
  const double k = eff.infection_factor() * p.alpha;
  const double rt = p.r / p.t_max;
  return {-rt * x0[0] * y0[0] - 0.5 * rt * (x0[0] * y0[1] + x0[1] * y0[0]) -
              0.5 * k * (x0[0] * y0[2] + x0[2] * y0[0]),
          0.5 * k * (xl[0] * yl[2] + xl[2] * yl[0]), cdouble(0.0), cdouble(0.0)};
}

cdouble bilinear_form(const DelayedLinearization& lin, const CVec4& v, const CVec4& u,
                      double omega0, double tau_j) {
  // The integral term collapses onto the point mass of the delayed block at
  // theta = -1, where theta e^{i w tau theta} = -e^{-i w tau}.
  const cdouble phase = std::exp(-kI * omega0 * tau_j);
  return dot_conj(v, u) + tau_j * phase * dot_conj(v, apply(lin.delayed, u));
}

EigenData eigen_data(const ModelParams& p, const TherapyEfficacies& eff, double omega0,
                     double tau_j) {
  if (!(omega0 > 0.0) || !(tau_j > 0.0)) {
    throw InvalidInput("eigen_data: omega0 and tau_j must be positive");
  }
  const auto e = endemic_terms(p, eff);
  const auto lin = linearize_endemic(p, eff);
  const double w = omega0;
  const cdouble iw = kI * w;
  // Full-precision phase from the product w * tau.
  const double phase = w * tau_j;
  const cdouble em = std::polar(1.0, -phase);  // e^{-i w tau}
  const double f = lin.now[0][0];

  const cdouble prod_term = e.k * (1.0 - e.nf) * p.beta * e.t;
  const cdouble denom = (iw + p.d2) * (iw + p.d3) - prod_term * em;
  const double dscale = std::abs(iw + p.d2) * std::abs(iw + p.d3) + std::abs(prod_term);
  if (std::abs(denom) < 1e-12 * dscale) {
    throw NumericalFailure("eigen_data: degenerate eigenproblem (denominator of a vanishes)");
  }

  EigenData ed{};
  ed.f_diag = f;
  ed.a = (iw + p.d3) * e.k * e.v * em / denom;
  ed.b = (1.0 - e.nf) * p.beta * ed.a / (iw + p.d3);
  ed.c1 = e.nf * p.beta * ed.a / (iw + p.d3);
  // Adjoint: row vector v with v (i w + now + delayed e^{+i w tau}) = 0.
  ed.a_star = -(iw + f) * em / (e.k * e.v);
  ed.b_star = (p.r * e.t / p.t_max + (-iw + p.d2) * ed.a_star) / ((1.0 - e.nf) * p.beta);
  ed.d_norm = 1.0 / (1.0 + std::conj(ed.a) * ed.a_star + std::conj(ed.b) * ed.b_star +
                     tau_j * std::conj(em) * e.k * ed.a_star * (e.v + std::conj(ed.b) * e.t));

  // Residual checks on both eigenvectors.
  const CVec4 q = ed.q();
  CVec4 res{};
  CVec4 res_adj{};
  double mnorm = 0.0;
  const CVec4 row{cdouble(1.0), ed.a_star, ed.b_star, cdouble(0.0)};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const cdouble mij = (i == j ? iw : 0.0) - lin.now[i][j] - lin.delayed[i][j] * em;
      const cdouble aij = (i == j ? iw : 0.0) + lin.now[i][j] + lin.delayed[i][j] * std::conj(em);
      res[i] += mij * q[j];
      res_adj[j] += row[i] * aij;
      mnorm = std::max(mnorm, std::abs(mij));
    }
  }
  ed.eigen_residual = norm(res) / (mnorm * norm(q));
  ed.adjoint_residual = norm(res_adj) / (mnorm * norm(row));
  ed.bilinear = bilinear_form(lin, ed.q_star(), q, omega0, tau_j);
  return ed;
}

CenterManifoldCoefficients g_coefficients(const EigenData& ed, const ModelParams& p,
                                          const TherapyEfficacies& eff, double omega0,
                                          double tau_j) {
  const auto e = endemic_terms(p, eff);
  const auto lin = linearize_endemic(p, eff);
  const double w = omega0;
  const double wt = omega0 * tau_j;
  const cdouble em = std::polar(1.0, -wt);
  const cdouble em2 = std::polar(1.0, -2.0 * wt);
  const double rt = p.r / p.t_max;
  const double k = e.k;
  const cdouble dbar = std::conj(ed.d_norm);
  const cdouble as_bar = std::conj(ed.a_star);
  const cdouble a = ed.a, b = ed.b;

  CenterManifoldCoefficients cm{};
  cm.g20 = -2.0 * tau_j * dbar * ((1.0 + a) * rt + k * b - k * b * as_bar * em2);
  cm.g11 = -2.0 * tau_j * dbar *
           ((1.0 + a.real()) * rt + k * b.real() - k * b.real() * as_bar);
  cm.g02 = -2.0 * tau_j * dbar *
           ((1.0 + std::conj(a)) * rt + k * std::conj(b) - k * std::conj(b) * as_bar * std::conj(em2));

  const CVec4 q0 = ed.q();
  const CVec4 ql = scale(q0, em);
  const CVec4 qb0 = conj(q0);
  const CVec4 qbl = conj(ql);

  // Constant vector of W20: (2 i w - now - delayed e^{-2 i w tau}) E1 = 2 B(q, q).
  const CVec4 bqq = quadratic_form(p, eff, q0, ql, q0, ql);
  linalg::Matrix<cdouble, 4> m1{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      m1[i][j] = (i == j ? 2.0 * kI * w : 0.0) - lin.now[i][j] - lin.delayed[i][j] * em2;
    }
  }
  const linalg::Vector<cdouble, 4> rhs1{2.0 * bqq[0], 2.0 * bqq[1], 2.0 * bqq[2], 2.0 * bqq[3]};
  const auto s1 = linalg::solve(m1, rhs1);
  cm.e1_vec = s1.x;
  cm.e1_condition = s1.condition;
  cm.e1_residual = s1.relative_residual;

  // Constant vector of W11: (now + delayed) E2 = -2 B(q, conj q), a real system.
  const CVec4 bqqb = quadratic_form(p, eff, q0, ql, qb0, qbl);
  linalg::Matrix<double, 4> m2{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m2[i][j] = lin.now[i][j] + lin.delayed[i][j];
  }
  const linalg::Vector<double, 4> rhs2{-2.0 * bqqb[0].real(), -2.0 * bqqb[1].real(),
                                       -2.0 * bqqb[2].real(), -2.0 * bqqb[3].real()};
  const auto s2 = linalg::solve(m2, rhs2);
  cm.e2_vec = s2.x;
  cm.e2_condition = s2.condition;
  cm.e2_residual = s2.relative_residual;

  // W20(theta) and W11(theta) at theta = 0 and theta = -1.
  const cdouble c20q = kI * cm.g20 / wt;
  const cdouble c20qb = kI * std::conj(cm.g02) / (3.0 * wt);
  const cdouble c11q = -kI * cm.g11 / wt;
  const cdouble c11qb = kI * std::conj(cm.g11) / wt;
  const CVec4 e2c{cm.e2_vec[0], cm.e2_vec[1], cm.e2_vec[2], cm.e2_vec[3]};
  cm.w20_now = add(add(scale(q0, c20q), scale(qb0, c20qb)), cm.e1_vec);
  cm.w20_lag = add(add(scale(ql, c20q), scale(qbl, c20qb)), scale(cm.e1_vec, em2));
  cm.w11_now = add(add(scale(q0, c11q), scale(qb0, c11qb)), e2c);
  cm.w11_lag = add(add(scale(ql, c11q), scale(qbl, c11qb)), e2c);

  // z^2 conj(z) coefficient of the projected nonlinearity.
  const CVec4 t1 = quadratic_form(p, eff, q0, ql, cm.w11_now, cm.w11_lag);
  const CVec4 t2 = quadratic_form(p, eff, qb0, qbl, cm.w20_now, cm.w20_lag);
  const CVec4 cubic_part = add(scale(t1, 2.0), t2);
  cm.g21 = 2.0 * tau_j * dot_conj(ed.q_star(), cubic_part);
  return cm;
}

cdouble lambda_prime(const CharCoefficients& cc, double omega0, double tau_j) {
  const cdouble l(0.0, omega0);
  const cdouble ex = std::exp(-l * tau_j);
  const cdouble lin = cc.b1 * l + cc.b2;
  const cdouble num = l * lin * ex;
  const cdouble den = 3.0 * l * l + 2.0 * cc.a0 * l + cc.a1 + cc.b1 * ex - tau_j * lin * ex;
  const double scale = std::abs(3.0 * l * l) + std::abs(2.0 * cc.a0 * l) + std::abs(cc.a1) +
                       std::abs(cc.b1) + tau_j * std::abs(lin);
  if (std::abs(den) <= 1e-14 * scale) {
    throw NumericalFailure("lambda_prime: degenerate crossing (vanishing derivative)");
  }
  return num / den;
}

namespace {

template <class E>
E sign_class(double v, E neg, E zero, E pos) {
  if (v > 0.0) return pos;
  if (v < 0.0) return neg;
  return zero;
}

}  // namespace

HopfSummary hopf_summary(const CenterManifoldCoefficients& cmc, cdouble lp, double omega0,
                         double tau_j) {
  const double wt = omega0 * tau_j;
  HopfSummary hs{};
  hs.lambda_prime = lp;
  hs.c11_0 = kI / (2.0 * wt) *
                 (cmc.g20 * cmc.g11 - 2.0 * std::norm(cmc.g11) - std::norm(cmc.g02) / 3.0) +
             cmc.g21 / 2.0;
  hs.mu2 = -hs.c11_0.real() / lp.real();
  hs.beta2 = 2.0 * hs.c11_0.real();
  hs.t2 = -(hs.c11_0.imag() + hs.mu2 * lp.imag()) / wt;
  hs.direction = sign_class(hs.mu2, HopfDirection::backward, HopfDirection::degenerate,
                            HopfDirection::forward);
  hs.cycle = sign_class(hs.beta2, CycleStability::stable, CycleStability::degenerate,
                        CycleStability::unstable);
  hs.period = sign_class(hs.t2, PeriodTrend::decreasing, PeriodTrend::degenerate,
                         PeriodTrend::increasing);
  return hs;
}

HopfAnalysis analyze_hopf(const ModelParams& p, const TherapyEfficacies& eff, double omega0,
                          double tau_j) {
  HopfAnalysis out{};
  out.eigen = eigen_data(p, eff, omega0, tau_j);
  out.manifold = g_coefficients(out.eigen, p, eff, omega0, tau_j);
  const auto cc = char_coefficients(p, eff);
  out.summary = hopf_summary(out.manifold, lambda_prime(cc, omega0, tau_j), omega0, tau_j);
  return out;
}

const char* to_string(HopfDirection d) {
  switch (d) {
    case HopfDirection::forward: return "forward";
    case HopfDirection::backward: return "backward";
    case HopfDirection::degenerate: return "degenerate";
  }
  return "?";
}

const char* to_string(CycleStability s) {
  switch (s) {
    case CycleStability::stable: return "stable";
    case CycleStability::unstable: return "unstable";
    case CycleStability::degenerate: return "degenerate";
  }
  return "?";
}

const char* to_string(PeriodTrend t) {
  switch (t) {
    case PeriodTrend::increasing: return "increasing";
    case PeriodTrend::decreasing: return "decreasing";
    case PeriodTrend::degenerate: return "degenerate";
  }
  return "?";
}

}  // namespace hcv
