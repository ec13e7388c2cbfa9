#include "hcv/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hcv/errors.hpp"

namespace hcv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

CharCoefficients char_coefficients(const ModelParams& p, const TherapyEfficacies& eff) {
  const auto e2 = endemic_equilibrium(p, eff);
  if (!e2) {
    throw NumericalFailure("characteristic coefficients need an endemic state (R0 <= 1)");
  }
  const double t = e2->state.t_cells;
  const double i = e2->state.i_cells;
  const double m = p.s / t + p.r * t / p.t_max;
  const double d23 = p.d2 * p.d3;

  CharCoefficients cc{};
  cc.a0 = p.d2 + p.d3 + m;
  cc.a1 = d23 + (p.d2 + p.d3) * m;
  cc.a2 = d23 * m;
  cc.b1 = p.d2 * p.r * i / p.t_max - d23;
  cc.b2 = d23 * i * (p.r / p.t_max + p.d2 / t) - d23 * m;
  return cc;
}

cdouble characteristic_residual(cdouble lambda, const CharCoefficients& cc, double tau) {
  return ((lambda + cc.a0) * lambda + cc.a1) * lambda + cc.a2 +
         (cc.b1 * lambda + cc.b2) * std::exp(-lambda * tau);
}

double characteristic_scale(cdouble lambda, const CharCoefficients& cc) {
  const double l = std::abs(lambda);
  return std::max({l * l * l, std::abs(cc.a0) * l * l, std::abs(cc.a1) * l, std::abs(cc.a2),
                   std::abs(cc.b1) * l, std::abs(cc.b2)});
}

E1Verdict e1_verdict(const ModelParams& p, const TherapyEfficacies& eff) {
  const double r0 = basic_r0(p, eff);
  if (r0 < 1.0) return E1Verdict::stable;
  if (r0 > 1.0) return E1Verdict::unstable;
  return E1Verdict::boundary;
}

RouthHurwitz routh_hurwitz_zero_delay(const CharCoefficients& cc) {
  RouthHurwitz rh{};
  rh.a0_positive = cc.a0 > 0.0;
  rh.a1b1_positive = cc.a1 + cc.b1 > 0.0;
  rh.a2b2_positive = cc.a2 + cc.b2 > 0.0;
  rh.expression = cc.a0 * (cc.a1 + cc.b1) - (cc.a2 + cc.b2);
  rh.stable = rh.a0_positive && rh.a1b1_positive && rh.a2b2_positive && rh.expression > 0.0;
  return rh;
}

namespace {

double cubic(double x, double c2, double c1, double c0) { return ((x + c2) * x + c1) * x + c0; }

double cubic_scale(double x, double c2, double c1, double c0) {
  const double ax = std::abs(x);
  return ax * ax * ax + std::abs(c2) * ax * ax + std::abs(c1) * ax + std::abs(c0);
}

double polish_cubic_root(double x, double c2, double c1, double c0) {
  double best = std::abs(cubic(x, c2, c1, c0));
  for (int it = 0; it < 6 && best > 0.0; ++it) {
    const double d = (3.0 * x + 2.0 * c2) * x + c1;
    if (d == 0.0) break;
    const double trial = x - cubic(x, c2, c1, c0) / d;
    const double r = std::abs(cubic(trial, c2, c1, c0));
    if (!(r < best)) break;
    best = r;
    x = trial;
  }
  return x;
}

}  // namespace

double omega_polynomial_residual(const OmegaAnalysis& oa, double omega) {
  const double x = omega * omega;
  const double scale = cubic_scale(x, oa.a1_coeff, oa.a2_coeff, oa.a3_coeff);
  return scale > 0.0 ? std::abs(cubic(x, oa.a1_coeff, oa.a2_coeff, oa.a3_coeff)) / scale : 0.0;
}

OmegaAnalysis omega_analysis(const CharCoefficients& cc) {
  OmegaAnalysis oa{};
  oa.a1_coeff = cc.a0 * cc.a0 - 2.0 * cc.a1;
  oa.a2_coeff = cc.a1 * cc.a1 - cc.b1 * cc.b1 - 2.0 * cc.a0 * cc.a2;
  oa.a3_coeff = cc.a2 * cc.a2 - cc.b2 * cc.b2;
  const double c2 = oa.a1_coeff, c1 = oa.a2_coeff, c0 = oa.a3_coeff;

  Eigen::Matrix3d companion;
  companion << -c2, -c1, -c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  const Eigen::Vector3cd eig = Eigen::EigenSolver<Eigen::Matrix3d>(companion, false).eigenvalues();

  // Real roots of x = omega^2. A conjugate pair whose imaginary part is
  // tiny but above the real-root cut is a perturbed double root: it is kept
  // as one root of multiplicity 2 so it can never be selected as simple.
  struct Candidate {
    double x;
    int multiplicity;
  };
  std::vector<Candidate> cands;
  for (int k = 0; k < 3; ++k) {
    const cdouble z = eig[k];
    const double mag = std::max(std::abs(z), 1e-300);
    if (std::abs(z.imag()) < 1e-9 * mag) {
      cands.push_back({polish_cubic_root(z.real(), c2, c1, c0), 1});
    } else if (z.imag() > 0.0 && z.imag() < 1e-6 * mag) {
      cands.push_back({z.real(), 2});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& l, const Candidate& r) { return l.x > r.x; });

  // Merge clusters closer than 1e-7 relative.
  std::vector<Candidate> merged;
  for (const auto& c : cands) {
    if (!merged.empty() &&
        std::abs(merged.back().x - c.x) <= 1e-7 * std::max(std::abs(merged.back().x), std::abs(c.x))) {
      merged.back().multiplicity += c.multiplicity;
      continue;
    }
    merged.push_back(c);
  }

  for (const auto& c : merged) {
    if (!(c.x > 0.0)) continue;
    const double w = std::sqrt(c.x);
    oa.positive_roots.push_back({w, c.multiplicity, 0.0});
    oa.positive_roots.back().relative_residual = omega_polynomial_residual(oa, w);
  }
  for (const auto& r : oa.positive_roots) {
    if (r.multiplicity == 1) {
      oa.omega0 = r.omega;
      break;
    }
  }
  return oa;
}

std::vector<double> critical_delays(const CharCoefficients& cc, double omega0, int j_max) {
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
    throw InvalidInput("critical_delays: omega0 must be positive and finite");
  }
  if (j_max < 0) throw InvalidInput("critical_delays: j_max must be non-negative");
  const double w = omega0;
  const double re_lhs = cc.a0 * w * w - cc.a2;     // b2 cos + b1 w sin
  const double im_lhs = w * w * w - cc.a1 * w;     // b1 w cos - b2 sin
  const double den = cc.b2 * cc.b2 + cc.b1 * cc.b1 * w * w;
  if (!(den > 0.0)) throw NumericalFailure("critical_delays: b1 = b2 = 0, no delayed term");
  double cos_v = (re_lhs * cc.b2 + im_lhs * cc.b1 * w) / den;
  const double sin_v = (re_lhs * cc.b1 * w - im_lhs * cc.b2) / den;
  if (std::abs(cos_v) > 1.0 + 1e-9) {
    std::ostringstream msg;
    msg << "critical_delays: arccos argument " << cos_v << " outside [-1, 1]";
    throw NumericalFailure(msg.str());
  }
  cos_v = std::clamp(cos_v, -1.0, 1.0);
  double theta = std::acos(cos_v);
  if (sin_v < 0.0) theta = kTwoPi - theta;

  std::vector<double> taus;
  taus.reserve(static_cast<std::size_t>(j_max) + 1);
  const cdouble lambda(0.0, w);
  const double scale = characteristic_scale(lambda, cc);
  for (int j = 0; j <= j_max; ++j) {
    const double tau = (theta + kTwoPi * j) / w;
    const double res = std::abs(characteristic_residual(lambda, cc, tau));
    if (res > 1e-8 * scale) {
      std::ostringstream msg;
      msg << "critical_delays: residual " << res / scale << " at tau_" << j
          << " (omega0 is not a crossing frequency)";
      throw NumericalFailure(msg.str());
    }
    taus.push_back(tau);
  }
  return taus;
}

Transversality transversality(const CharCoefficients& cc, double omega0) {
  const double w2 = omega0 * omega0;
  const double w4 = w2 * w2;
  const double a1c = cc.a0 * cc.a0 - 2.0 * cc.a1;
  const double tail = cc.b2 * cc.b2 - cc.a2 * cc.a2;
  Transversality t{};
  t.numerator = 2.0 * w4 * w2 + a1c * w4 + tail;
  const double scale = 2.0 * w4 * w2 + std::abs(a1c) * w4 + cc.b2 * cc.b2 + cc.a2 * cc.a2;
  if (std::abs(t.numerator) <= 1e-10 * scale) {
    t.sign = CrossingSign::degenerate;
  } else {
    t.sign = t.numerator > 0.0 ? CrossingSign::positive : CrossingSign::negative;
  }
  return t;
}

DelayBound delay_length_bound(const CharCoefficients& cc) {
  DelayBound db{};
  const double ab1 = std::abs(cc.b1);
  const double rest = std::abs(cc.a2) + std::abs(cc.b2);
  db.mu_plus = (ab1 + std::sqrt(cc.b1 * cc.b1 + 4.0 * cc.a0 * rest)) / (2.0 * cc.a0);
  const double mu2 = db.mu_plus * db.mu_plus;
  db.n1 = 0.5 * std::abs(cc.b2 - cc.a0 * cc.b1) * mu2;
  db.n2 = cc.b1 * mu2 + cc.a0 * cc.b2;
  db.n3 = cc.a0 * cc.a1 - cc.a2 - cc.b2 + cc.a0 * cc.b1;
  if (!(db.n3 > 0.0)) {
    throw NumericalFailure(
        "delay bound not applicable: N3 = a0 a1 - a2 - b2 + a0 b1 <= 0 "
        "(zero-delay Routh-Hurwitz fails)");
  }
  if (db.n1 == 0.0) {
    if (!(db.n2 > 0.0)) {
      throw NumericalFailure("delay bound degenerate: N1 = 0 and N2 <= 0");
    }
    db.tau_plus = db.n3 / db.n2;
    return db;
  }
  // Root of N1 t^2 + N2 t - N3 = 0; the product form avoids cancellation
  // when N2 > 0 dominates.
  const double disc = std::sqrt(db.n2 * db.n2 + 4.0 * db.n1 * db.n3);
  db.tau_plus = db.n2 >= 0.0 ? 2.0 * db.n3 / (db.n2 + disc) : (-db.n2 + disc) / (2.0 * db.n1);
  return db;
}

E1RootScan e1_root_scan(const ModelParams& p, const TherapyEfficacies& eff, double tau) {
  if (!(tau >= 0.0)) throw InvalidInput("e1_root_scan: tau must be non-negative");
  const double r0 = basic_r0(p, eff);
  const double sum = p.d2 + p.d3;
  const double prod = p.d2 * p.d3;
  auto g = [&](cdouble l) { return l * l + sum * l + prod * (1.0 - r0 * std::exp(-l * tau)); };
  auto dg = [&](cdouble l) { return 2.0 * l + sum + prod * r0 * tau * std::exp(-l * tau); };

  E1RootScan out{};
  // |lambda^2 + (d2+d3) lambda + d2 d3| <= d2 d3 R0 on Re >= 0 bounds |lambda|.
  out.search_radius = 0.5 * (sum + std::sqrt(sum * sum + 4.0 * prod * (1.0 + r0)));

  if (r0 > 1.0) {
    double lo = 0.0, hi = out.search_radius;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * out.search_radius; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid).real() < 0.0 ? lo : hi) = mid;
    }
    out.has_nonnegative_root = true;
    out.root = cdouble(0.5 * (lo + hi), 0.0);
    return out;
  }

  const double radius = out.search_radius;
  const int n_re = 12;
  const int n_im = std::max(48, static_cast<int>(std::ceil(4.0 * radius * tau / std::numbers::pi)));
  const double tol = 1e-12 * std::max(1.0, radius);
  for (int a = 0; a <= n_re; ++a) {
    for (int b = 0; b <= n_im; ++b) {
      cdouble l(radius * a / n_re, radius * b / n_im);
      if (std::abs(l) > radius * 1.0000001) continue;
      for (int it = 0; it < 60; ++it) {
        const cdouble d = dg(l);
        if (d == 0.0) break;
        const cdouble step = g(l) / d;
        l -= step;
        if (!std::isfinite(l.real()) || !std::isfinite(l.imag()) || l.real() < -2.0 * radius) break;
        if (std::abs(step) < tol) {
          if (l.real() >= -tol && std::abs(g(l)) <= 1e-9 * prod * std::max(1.0, r0)) {
            out.has_nonnegative_root = true;
            out.root = l;
            return out;
          }
          break;
        }
      }
    }
  }
  out.has_nonnegative_root = false;
  return out;
}

const char* to_string(E1Verdict v) {
  switch (v) {
    case E1Verdict::stable: return "stable";
    case E1Verdict::unstable: return "unstable";
    case E1Verdict::boundary: return "boundary";
  }
  return "?";
}

const char* to_string(CrossingSign s) {
  switch (s) {
    case CrossingSign::negative: return "negative";
    case CrossingSign::degenerate: return "degenerate";
    case CrossingSign::positive: return "positive";
  }
  return "?";
}

}  // namespace hcv
