#pragma once

// Center-manifold reduction at a Hopf point of the endemic state: eigen
// vectors of the linearized delay operator and its adjoint, the quadratic
// and cubic normal-form coefficients, and the derived direction/stability
// indicators.
//
// Everything is reduced to finite computations: the delay operator enters
// only through its two Jacobian blocks (`now` acting on x(t), `delayed` on
// x(t - tau)), and the center-manifold functions W20, W11 through their
// constant vectors, obtained from two 4x4 linear systems.

#include <array>
#include <complex>

#include "hcv/model.hpp"
#include "hcv/stability.hpp"

namespace hcv {

using CVec4 = std::array<cdouble, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/// Jacobian blocks of the delayed system at the endemic state:
/// d/dt u = now * u(t) + delayed * u(t - tau).
struct DelayedLinearization {
  Mat4 now;
  Mat4 delayed;
};

/// Closed-form linearization at E2. Throws NumericalFailure if R0 <= 1.
DelayedLinearization linearize_endemic(const ModelParams& p, const TherapyEfficacies& eff);

/// Symmetric bilinear form B with f(x) = B(x, x) the quadratic part of the
/// vector field about any state (the model is exactly quadratic). Vectors
/// are passed as their values at lag 0 and lag -tau.
CVec4 quadratic_form(const ModelParams& p, const TherapyEfficacies& eff, const CVec4& x_now,
                     const CVec4& x_lag, const CVec4& y_now, const CVec4& y_lag);

struct EigenData {
  cdouble a, b, c1;          // q(0) = (1, a, b, c1)
  cdouble a_star, b_star;    // q*(0) = D (1, a*, b*, 0)
  cdouble d_norm;            // D
  double f_diag;             // F, the (T, T) entry of the undelayed Jacobian
  double eigen_residual;     // relative residual of (i w - now - delayed e^{-i w tau}) q
  double adjoint_residual;   // same for the adjoint row vector at -i w
  cdouble bilinear;          // <q*, q>, equal to 1 by construction

  CVec4 q() const { return {cdouble(1.0), a, b, c1}; }
  CVec4 q_star() const { return {d_norm, d_norm * a_star, d_norm * b_star, cdouble(0.0)}; }
};

/// Throws NumericalFailure if the eigenproblem is degenerate at (omega0, tau_j).
EigenData eigen_data(const ModelParams& p, const TherapyEfficacies& eff, double omega0,
                     double tau_j);

/// <psi, phi> for eigen-type functions psi(s) = v e^{i w tau s},
/// phi(theta) = u e^{i w tau theta}.
cdouble bilinear_form(const DelayedLinearization& lin, const CVec4& v, const CVec4& u,
                      double omega0, double tau_j);

struct CenterManifoldCoefficients {
  cdouble g20, g11, g02, g21;
  CVec4 e1_vec;                  // constant vector of W20
  std::array<double, 4> e2_vec;  // constant vector of W11
  CVec4 w20_now, w20_lag;        // W20(0), W20(-1)
  CVec4 w11_now, w11_lag;        // W11(0), W11(-1)
  double e1_condition, e2_condition;
  double e1_residual, e2_residual;
};

CenterManifoldCoefficients g_coefficients(const EigenData& ed, const ModelParams& p,
                                          const TherapyEfficacies& eff, double omega0,
                                          double tau_j);

/// d lambda / d tau at lambda = i omega0, tau = tau_j.
cdouble lambda_prime(const CharCoefficients& cc, double omega0, double tau_j);

enum class HopfDirection { forward, backward, degenerate };
enum class CycleStability { stable, unstable, degenerate };
enum class PeriodTrend { increasing, decreasing, degenerate };

struct HopfSummary {
  cdouble c11_0;
  double mu2;
  double beta2;
  double t2;
  cdouble lambda_prime;
  HopfDirection direction;  // forward: cycles exist for tau > tau_j
  CycleStability cycle;
  PeriodTrend period;
};

HopfSummary hopf_summary(const CenterManifoldCoefficients& cmc, cdouble lp, double omega0,
                         double tau_j);

struct HopfAnalysis {
  EigenData eigen;
  CenterManifoldCoefficients manifold;
  HopfSummary summary;
};

/// Convenience pipeline: eigen_data -> g_coefficients -> lambda_prime -> hopf_summary.
HopfAnalysis analyze_hopf(const ModelParams& p, const TherapyEfficacies& eff, double omega0,
                          double tau_j);

const char* to_string(HopfDirection d);
const char* to_string(CycleStability s);
const char* to_string(PeriodTrend t);

}  // namespace hcv
