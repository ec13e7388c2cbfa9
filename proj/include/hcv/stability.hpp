#pragma once

// Linear stability of the delayed HCV model: characteristic-equation
// coefficients at the endemic state, zero-delay Routh-Hurwitz, purely
// imaginary roots and the critical-delay ladder, crossing direction, and
// a sufficient delay bound. Also the delay-independent verdict for the
// disease-free state.

#include <complex>
#include <optional>
#include <vector>

#include "hcv/model.hpp"

namespace hcv {

using cdouble = std::complex<double>;

/// Coefficients of lambda^3 + a0 lambda^2 + a1 lambda + a2
/// + (b1 lambda + b2) e^{-lambda tau} = 0, the endemic-state characteristic
/// equation with the factored root -d3 removed.
struct CharCoefficients {
  double a0;
  double a1;
  double a2;
  double b1;
  double b2;
};

/// Throws NumericalFailure when R0 <= 1 (no endemic state).
CharCoefficients char_coefficients(const ModelParams& p, const TherapyEfficacies& eff);

/// lambda^3 + a0 lambda^2 + a1 lambda + a2 + (b1 lambda + b2) e^{-lambda tau}.
cdouble characteristic_residual(cdouble lambda, const CharCoefficients& cc, double tau);

/// Largest magnitude among the terms of the characteristic function at
/// lambda; residuals are judged relative to this.
double characteristic_scale(cdouble lambda, const CharCoefficients& cc);

enum class E1Verdict { stable, unstable, boundary };

/// Disease-free state: stable iff R0 < 1 for every delay; R0 == 1 is the
/// boundary case.
E1Verdict e1_verdict(const ModelParams& p, const TherapyEfficacies& eff);

const char* to_string(E1Verdict v);

struct RouthHurwitz {
  bool a0_positive;
  bool a1b1_positive;   // a1 + b1 > 0
  bool a2b2_positive;   // a2 + b2 > 0
  double expression;    // a0 (a1 + b1) - (a2 + b2)
  bool stable;          // all four conditions, expression strictly positive
};

RouthHurwitz routh_hurwitz_zero_delay(const CharCoefficients& cc);

struct OmegaRoot {
  double omega;       // rad/day
  int multiplicity;   // of omega^2 as a root of the cubic in x = omega^2
  double relative_residual;
};

struct OmegaAnalysis {
  double a1_coeff;  // A1 = a0^2 - 2 a1
  double a2_coeff;  // A2 = a1^2 - b1^2 - 2 a0 a2
  double a3_coeff;  // A3 = a2^2 - b2^2
  std::vector<OmegaRoot> positive_roots;  // descending in omega
  std::optional<double> omega0;           // largest simple positive root
};

/// Positive real roots of omega^6 + A1 omega^4 + A2 omega^2 + A3 = 0 via
/// companion-matrix eigenvalues of the cubic in omega^2.
OmegaAnalysis omega_analysis(const CharCoefficients& cc);

/// Relative residual of omega in omega^6 + A1 omega^4 + A2 omega^2 + A3.
double omega_polynomial_residual(const OmegaAnalysis& oa, double omega);

/// Critical delays tau_j = (theta + 2 j pi) / omega0, j = 0..j_max, with
/// theta in [0, 2 pi) chosen so both the cosine and sine crossing
/// conditions hold. Each tau_j is checked against the characteristic
/// residual. Throws NumericalFailure on inconsistent input.
std::vector<double> critical_delays(const CharCoefficients& cc, double omega0, int j_max);

enum class CrossingSign { negative, degenerate, positive };

const char* to_string(CrossingSign s);

struct Transversality {
  double numerator;  // 2 w^6 + (a0^2 - 2 a1) w^4 + (b2^2 - a2^2)
  CrossingSign sign;
};

/// Sign of d(Re lambda)/d tau at lambda = i omega0.
Transversality transversality(const CharCoefficients& cc, double omega0);

/// Sufficient linear-stability delay bound about the endemic state.
/// Valid while 0 <= tau <= tau_plus.
struct DelayBound {
  double mu_plus;
  double n1;
  double n2;
  double n3;
  double tau_plus;
};

/// Throws NumericalFailure when N3 <= 0 or when N1 = 0 and N2 <= 0.
DelayBound delay_length_bound(const CharCoefficients& cc);

/// Result of the numeric root search for the disease-free characteristic
/// factor lambda^2 + (d2 + d3) lambda + d2 d3 (1 - R0 e^{-lambda tau}).
struct E1RootScan {
  bool has_nonnegative_root;
  std::optional<cdouble> root;  // witness with Re >= 0, if found
  double search_radius;         // every root with Re >= 0 lies inside |lambda| <= radius
};

/// Searches the closed right half-plane for roots: bisection on the real
/// axis (for R0 > 1) then Newton from a grid over the bounded region where
/// such roots must lie.
E1RootScan e1_root_scan(const ModelParams& p, const TherapyEfficacies& eff, double tau);

}  // namespace hcv
