#include "hcv/model.hpp"

#include <cmath>
#include <string>

#include "hcv/errors.hpp"
#include "hcv/linalg.hpp"

namespace hcv {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ModelParams::ModelParams(double s_, double r_, double t_max_, double alpha_, double beta_,
                         double d1_, double d2_, double d3_)
    : s(s_), r(r_), t_max(t_max_), alpha(alpha_), beta(beta_), d1(d1_), d2(d2_), d3(d3_) {
  validate();
}

bool ModelParams::source_within_capacity() const { return s <= d1 * t_max; }

void ModelParams::validate() const {
  require(positive_finite(s), "s must be positive and finite");
  require(positive_finite(r), "r must be positive and finite");
  require(positive_finite(t_max), "t_max must be positive and finite");
  require(positive_finite(alpha), "alpha must be positive and finite");
  require(positive_finite(beta), "beta must be positive and finite");
  require(positive_finite(d1), "d1 must be positive and finite");
  require(positive_finite(d2), "d2 must be positive and finite");
  require(positive_finite(d3), "d3 must be positive and finite");
  require(r > d1, "proliferation rate r must exceed d1");
}

TherapyEfficacies::TherapyEfficacies(double eta1_, double eta_r_, double c_)
    : eta1(eta1_), eta_r(eta_r_), c(c_) {
  validate();
}

void TherapyEfficacies::validate() const {
  require(std::isfinite(eta1) && eta1 >= 0.0 && eta1 < 1.0, "eta1 must lie in [0, 1)");
  require(std::isfinite(eta_r) && eta_r >= 0.0 && eta_r < 1.0, "eta_r must lie in [0, 1)");
  require(std::isfinite(c) && c > 0.0 && c < 1.0, "c must lie in (0, 1)");
}

SystemState::SystemState(double t, double i, double vi, double vni)
    : t_cells(t), i_cells(i), v_i(vi), v_ni(vni) {
  require(std::isfinite(t) && std::isfinite(i) && std::isfinite(vi) && std::isfinite(vni),
          "state components must be finite");
  require(t >= 0.0 && i >= 0.0 && vi >= 0.0 && vni >= 0.0,
          "state components must be non-negative");
}

double combined_efficacy(const TherapyEfficacies& eff) {
  return 1.0 - eff.infection_factor() * (1.0 - eff.noninfectious_fraction());
}

Vec4 rhs(const Vec4& x, const Vec4& xd, const ModelParams& p, const TherapyEfficacies& eff) {
  const double k = eff.infection_factor() * p.alpha;
  const double nf = eff.noninfectious_fraction();
  const double t = x[0];
  const double i = x[1];
  return {
      p.s + p.r * t * (1.0 - (t + i) / p.t_max) - p.d1 * t - k * x[2] * t,
      k * xd[2] * xd[0] - p.d2 * i,
      (1.0 - nf) * p.beta * i - p.d3 * x[2],
      nf * p.beta * i - p.d3 * x[3],
  };
}

Vec4 rhs_term_scale(const Vec4& x, const Vec4& xd, const ModelParams& p,
                    const TherapyEfficacies& eff) {
  const double k = eff.infection_factor() * p.alpha;
  const double nf = eff.noninfectious_fraction();
  const double t = std::abs(x[0]);
  const double i = std::abs(x[1]);
  return {
      p.s + p.r * t + p.r * t * (t + i) / p.t_max + p.d1 * t + k * std::abs(x[2]) * t,
      k * std::abs(xd[2] * xd[0]) + p.d2 * i,
      (1.0 - nf) * p.beta * i + p.d3 * std::abs(x[2]),
      nf * p.beta * i + p.d3 * std::abs(x[3]),
  };
}

Vec4 vector_field(const SystemState& current, const SystemState& delayed, const ModelParams& p,
                  const TherapyEfficacies& eff) {
  return rhs(current.as_vec(), delayed.as_vec(), p, eff);
}

double uninfected_equilibrium(const ModelParams& p) {
  const double g = p.r - p.d1;
  double t = p.t_max / (2.0 * p.r) * (g + std::sqrt(g * g + 4.0 * p.r * p.s / p.t_max));
  // One Newton step on the quadratic trims rounding in the radical.
  const double f = p.s + p.r * t * (1.0 - t / p.t_max) - p.d1 * t;
  const double df = p.r - 2.0 * p.r * t / p.t_max - p.d1;
  if (df != 0.0) t -= f / df;
  return t;
}

double endemic_target_cells(const ModelParams& p, const TherapyEfficacies& eff) {
  return p.d2 * p.d3 /
         (eff.infection_factor() * (1.0 - eff.noninfectious_fraction()) * p.alpha * p.beta);
}

double basic_r0(const ModelParams& p, const TherapyEfficacies& eff) {
  return uninfected_equilibrium(p) / endemic_target_cells(p, eff);
}

double untreated_r0(const ModelParams& p) {
  return uninfected_equilibrium(p) * p.alpha * p.beta / (p.d2 * p.d3);
}

double critical_efficacy(const ModelParams& p) {
  const double t0_star = p.d2 * p.d3 / (p.alpha * p.beta);
  return 1.0 - t0_star / uninfected_equilibrium(p);
}

Equilibrium uninfected_equilibrium_point(const ModelParams& p, const TherapyEfficacies& eff) {
  return {EquilibriumKind::uninfected, SystemState(uninfected_equilibrium(p), 0.0, 0.0, 0.0),
          basic_r0(p, eff)};
}

namespace {

using linalg::Matrix;
using linalg::Vector;

// Steady-state residual of (T, I, V_I) scaled component-wise by the
// magnitude of the cancelling terms.
Vector<double, 3> steady_residual(const Vector<double, 3>& y, const ModelParams& p, double k,
                                  double nf) {
  const double t = y[0], i = y[1], v = y[2];
  return {p.s + p.r * t * (1.0 - (t + i) / p.t_max) - p.d1 * t - k * v * t,
          k * v * t - p.d2 * i, (1.0 - nf) * p.beta * i - p.d3 * v};
}

double scaled_norm(const Vector<double, 3>& res, const Vector<double, 3>& y,
                   const ModelParams& p, double k, double nf) {
  const double t = y[0], i = y[1], v = y[2];
  const double s1 = p.s + p.r * t + p.r * t * (t + i) / p.t_max + p.d1 * t + k * v * t;
  const double s2 = k * v * t + p.d2 * i;
  const double s3 = (1.0 - nf) * p.beta * i + p.d3 * v;
  return std::max({std::abs(res[0]) / s1, std::abs(res[1]) / s2, std::abs(res[2]) / s3});
}

}  // namespace

std::optional<Equilibrium> endemic_equilibrium(const ModelParams& p,
                                               const TherapyEfficacies& eff) {
  const double r0 = basic_r0(p, eff);
  if (!(r0 > 1.0)) return std::nullopt;

  const double k = eff.infection_factor() * p.alpha;
  const double nf = eff.noninfectious_fraction();
  const double t_hat = uninfected_equilibrium(p);
  const double t_star = endemic_target_cells(p, eff);
  const double i_star = (p.s * r0 * p.t_max + p.r * t_hat * t_hat) /
                        (p.r * t_hat + p.d2 * r0 * p.t_max) * (1.0 - 1.0 / r0);
  const double v_star = (1.0 - nf) * p.beta * i_star / p.d3;

  Vector<double, 3> y{t_star, i_star, v_star};
  double best = scaled_norm(steady_residual(y, p, k, nf), y, p, k, nf);
  for (int iter = 0; iter < 8 && best > 1e-15; ++iter) {
    const double t = y[0], i = y[1], v = y[2];
    // Columns scaled by the current iterate so the Jacobian is O(1)-balanced.
    Matrix<double, 3> jac{{
        {(p.r - 2.0 * p.r * t / p.t_max - p.r * i / p.t_max - p.d1 - k * v) * t,
         -p.r * t / p.t_max * i, -k * t * v},
        {k * v * t, -p.d2 * i, k * t * v},
        {0.0, (1.0 - nf) * p.beta * i, -p.d3 * v},
    }};
    auto res = steady_residual(y, p, k, nf);
    for (auto& r : res) r = -r;
    Vector<double, 3> dy;
    try {
      dy = linalg::solve(jac, res).x;
    } catch (const NumericalFailure&) {
      break;
    }
    Vector<double, 3> trial{t * (1.0 + dy[0]), i * (1.0 + dy[1]), v * (1.0 + dy[2])};
    const double n = scaled_norm(steady_residual(trial, p, k, nf), trial, p, k, nf);
    if (!(n < best)) break;
    best = n;
    y = trial;
  }

  // The virion balances are linear in I*, so both classes follow from it.
  const double vi = (1.0 - nf) * p.beta * y[1] / p.d3;
  const double vni = nf * p.beta * y[1] / p.d3;
  return Equilibrium{EquilibriumKind::endemic, SystemState(y[0], y[1], vi, vni), r0};
}

}  // namespace hcv
