// Acceptance checks. One PASS/FAIL line per criterion; exits 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "hcv/dde.hpp"
#include "hcv/hopf.hpp"
#include "hcv/model.hpp"
#include "hcv/scenarios.hpp"
#include "hcv/stability.hpp"
#include "oracles.hpp"

using namespace hcv;

namespace {

const ModelParams kT1 = preset(Preset::table1);
const ModelParams kT2 = preset(Preset::table2);
const TherapyEfficacies kHopfCase(0.5, 0.7, 0.81);
const SystemState kStart(1e7, 1e7, 1e7, 1e7);

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Critical {
  CharCoefficients cc;
  double omega0;
  double tau0;
};

Critical critical_table2() {
  const auto cc = char_coefficients(kT2, kHopfCase);
  const double w = *omega_analysis(cc).omega0;
  return {cc, w, critical_delays(cc, w, 0)[0]};
}

double max_rel_dev(const Trajectory& tr, const Vec4& x, double t_from, double t_to) {
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.times[k] < t_from || tr.times[k] > t_to) continue;
    const Vec4 v = tr.states[k].as_vec();
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(v[i] - x[i]) / x[i]);
  }
  return worst;
}

void criterion1() {
  const double ec = critical_efficacy(kT1);
  report(1, std::abs(ec - 0.745) <= 0.01 && std::abs(ec - 0.7433) <= 1e-3,
         fmt("eta_c = %.5f (targets 0.745 +- 0.01, 0.7433 +- 1e-3)", ec));
}

void criterion2(const Critical& cr) {
  const double w = cr.omega0;
  const bool ok = rel(w, 0.07321) <= 0.02;
  const double per_hour = w / 24.0;
  report(2, ok,
         fmt("omega0 = %.6f rad/day = %.6f rad/h; target 0.07321 +- 2%% (rel. err %.3f per day, %.3f per hour)",
             w, per_hour, rel(w, 0.07321), rel(per_hour, 0.07321)));
}

void criterion3(const Critical& cr) {
  const double hours = cr.tau0 * 24.0;
  const cdouble l(0.0, cr.omega0);
  const double resid = std::abs(characteristic_residual(l, cr.cc, cr.tau0)) / characteristic_scale(l, cr.cc);
  report(3, rel(hours, 24.1) <= 0.05 && resid < 1e-8,
         fmt("tau0 = %.4f days = %.2f h; target 24.1 h +- 5%%; scaled residual %.2e", cr.tau0, hours, resid));
}

void criterion4(const Critical& cr) {
  const auto tv = transversality(cr.cc, cr.omega0);
  const cdouble lp = lambda_prime(cr.cc, cr.omega0, cr.tau0);
  const oracle::Rates q = oracle::rates(kT2, kHopfCase);
  const auto J = oracle::fd_jacobians(oracle::endemic(q), q);
  const oracle::ld h = 1e-3L * cr.tau0;
  const auto up = oracle::track_root(J, {0.0L, cr.omega0}, cr.tau0 + h);
  const auto dn = oracle::track_root(J, {0.0L, cr.omega0}, cr.tau0 - h);
  const double fd = static_cast<double>((up.real() - dn.real()) / (2.0L * h));
  const bool ok = tv.sign == CrossingSign::positive && fd > 0.0 && lp.real() > 0.0 &&
                  std::abs(fd - lp.real()) <= 0.05 * std::abs(lp.real());
  report(4, ok,
         fmt("sign %s, numerator %.3e; dRe/dtau analytic %.5e, tracked %.5e", to_string(tv.sign), tv.numerator,
             lp.real(), fd));
}

void criterion5(const Critical& cr) {
  const auto e2 = *endemic_equilibrium(kT2, kHopfCase);
  const Vec4 eq = e2.state.as_vec();
  const double period = 2.0 * std::numbers::pi / cr.omega0;
  const double pert = 1e-2;
  Vec4 x = eq;
  x[0] *= 1.0 + pert;

  const double h_below = 8000.0;
  const auto below = integrate(kT2, kHopfCase, 0.9 * cr.tau0, {SystemState(x)}, {0.1, h_below});
  const double d_mid = max_rel_dev(below, eq, h_below / 2.0 - 4.0 * period, h_below / 2.0);
  const double d_end = max_rel_dev(below, eq, h_below - 4.0 * period, h_below);
  const double final_ratio = d_end / pert;
  const bool below_ok = classify_longrun(below, kT2, kHopfCase, 1e-3, period) == LongRun::to_e2 &&
                        d_end < d_mid && final_ratio < 1e-3;

  const auto above = integrate(kT2, kHopfCase, 1.1 * cr.tau0, {SystemState(x)}, {0.1, 12000.0});
  const auto amps = peak_amplitudes(above, 2, 12000.0 - 6.0 * period);
  double spread = 1.0;
  if (amps.size() >= 2) {
    spread = 0.0;
    for (std::size_t k = 1; k < amps.size(); ++k) spread = std::max(spread, rel(amps[k], amps[k - 1]));
  }
  const bool above_ok = classify_longrun(above, kT2, kHopfCase, 1e-3, period) == LongRun::oscillatory &&
                        amps.size() >= 2 && spread <= 0.10;

  const auto hs = analyze_hopf(kT2, kHopfCase, cr.omega0, cr.tau0).summary;
  report(5, below_ok && above_ok && hs.beta2 < 0.0,
         fmt("0.9 tau0: final/initial deviation %.2e; 1.1 tau0: %zu late peaks, max successive change %.2e%%; "
             "beta2 = %.3e",
             final_ratio, amps.size(), 100.0 * spread, hs.beta2));
}

void criterion6() {
  const TherapyEfficacies eff(0.9, 0.9, 0.9);
  const double t_hat = uninfected_equilibrium(kT1);
  bool ok = combined_efficacy(eff) > critical_efficacy(kT1);
  std::string detail = fmt("eta = %.3f;", combined_efficacy(eff));
  for (double tau : {0.0, 0.5, 1.0, 1.5}) {
    const auto tr = integrate(kT1, eff, tau, {kStart}, {0.01, 200.0});
    const auto& s = tr.states.back();
    const double dev = std::max({std::abs(s.t_cells - t_hat) / t_hat, s.i_cells / t_hat, s.v_i / t_hat,
                                 s.v_ni / t_hat});
    ok = ok && dev < 1e-3 && tr.times.back() == 200.0;
    detail += fmt(" tau=%.1f dev %.1e", tau, dev);
  }
  report(6, ok, detail);
}

void criterion7() {
  const TherapyEfficacies eff(0.8, 0.0, 0.5);
  const double tau = parse_tau("22h");
  const auto tr = integrate(kT1, eff, tau, {kStart}, {0.01, 200.0});
  const auto e2 = *endemic_equilibrium(kT1, eff);
  const double v_star = e2.state.total_virions();
  const double v_end = interpolate(tr, tr.times.back()).total_virions();
  const auto cls = classify_longrun(tr, kT1, eff, 1e-3);
  report(7, cls == LongRun::to_e2 && rel(v_end, v_star) < 0.01 && combined_efficacy(eff) == 0.64,
         fmt("eta = %.2f, class %s, V(t=%.2f) = %.5e vs V* = %.5e (rel %.1e)", combined_efficacy(eff),
             to_string(cls), tr.times.back(), v_end, v_star, rel(v_end, v_star)));
}

void criterion8() {
  const TherapyEfficacies eff(0.8, 0.0, 0.5);
  auto ref = [&](double t) {
    const auto r = oracle::ode_reference(kT1, eff, {1e7L, 1e7L, 1e7L, 1e7L}, t);
    return Vec4{static_cast<double>(r[0]), static_cast<double>(r[1]), static_cast<double>(r[2]),
                static_cast<double>(r[3])};
  };
  auto err = [&](const Trajectory& tr, const Vec4& r) {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, rel(tr.states.back().as_vec()[i], r[i]));
    return worst;
  };
  const double e50 = err(integrate(kT1, eff, 0.0, {kStart}, {0.01, 50.0}), ref(50.0));

  const Vec4 r5 = ref(5.0);
  const double ea = err(integrate(kT1, eff, 0.0, {kStart}, {1e-2, 5.0}), r5);
  const double eb = err(integrate(kT1, eff, 0.0, {kStart}, {2.5e-3, 5.0}), r5);
  const double order = std::log2(ea / eb) / 2.0;

  const auto e2 = *endemic_equilibrium(kT1, eff);
  const auto pinned = integrate(kT1, eff, parse_tau("22h"), {e2.state}, {0.01, 100.0});
  const double drift = max_rel_dev(pinned, e2.state.as_vec(), 0.0, 100.0);

  report(8, e50 < 1e-6 && std::abs(order - 4.0) <= 0.3 && drift < 1e-6,
         fmt("t=50 rel err %.2e; order %.3f; pinned drift %.2e", e50, order, drift));
}

void criterion9() {
  double worst = 0.0;
  for (const auto& d : oracle::random_endemic_draws(20, 2024)) {
    const auto cc = char_coefficients(d.p, d.e);
    const auto o = oracle::fd_char_coefficients(d.p, d.e);
    const double lib[5] = {cc.a0, cc.a1, cc.a2, cc.b1, cc.b2};
    const double ref[5] = {static_cast<double>(o.a0), static_cast<double>(o.a1), static_cast<double>(o.a2),
                           static_cast<double>(o.b1), static_cast<double>(o.b2)};
    for (int i = 0; i < 5; ++i) worst = std::max(worst, rel(lib[i], ref[i]));
  }
  report(9, worst < 1e-8, fmt("20 draws, max relative difference %.2e", worst));
}

// Peak-to-trough amplitude of T on the settled cycle at delay tau, started
// from E2 shifted by `kick` in T.
double cycle_amplitude(double tau, double kick, double period, double& change) {
  const auto e2 = *endemic_equilibrium(kT2, kHopfCase);
  Vec4 x = e2.state.as_vec();
  x[0] += kick;
  const double horizon = 30000.0;
  const auto tr = integrate(kT2, kHopfCase, tau, {SystemState(x)}, {0.1, horizon, true});
  const auto amps = peak_amplitudes(tr, 0, horizon - 10.0 * period);
  if (amps.size() < 2) {
    change = 1.0;
    return 0.0;
  }
  change = rel(amps.back(), amps.front());
  return amps.back();
}

void criterion10(const Critical& cr) {
  const auto an = analyze_hopf(kT2, kHopfCase, cr.omega0, cr.tau0);
  const auto& m = an.manifold;
  const auto& s = an.summary;
  const double bil = std::abs(an.eigen.bilinear - 1.0);
  const bool consistent = bil < 1e-10 && m.e1_residual < 1e-10 && m.e2_residual < 1e-10 &&
                          s.beta2 == 2.0 * s.c11_0.real();

  bool scaling_ok = true;
  double slope = 0.0;
  std::string amp_detail;
  if (s.mu2 > 0.0) {
    const double period = 2.0 * std::numbers::pi / cr.omega0;
    std::vector<double> lx, ly;
    for (double ratio : {1.01, 1.02, 1.04, 1.07, 1.1}) {
      const double dtau = (ratio - 1.0) * cr.tau0;
      // predicted half-amplitude of T from the normal form
      const double eps = std::sqrt(dtau / s.mu2);
      double change = 0.0;
      const double amp = cycle_amplitude(ratio * cr.tau0, eps, period, change);
      if (!(amp > 0.0) || change > 0.02) scaling_ok = false;
      lx.push_back(std::log(dtau));
      ly.push_back(std::log(amp));
      amp_detail += fmt(" %.2f:%.3e", ratio, amp);
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    scaling_ok = scaling_ok && std::abs(slope - 0.5) <= 0.15;
  }
  report(10, consistent && scaling_ok,
         fmt("|<q*,q> - 1| %.1e; residuals %.1e %.1e; beta2 - 2 Re c11 = %.1e; mu2 %.3e; exponent %.3f;"
             " amplitudes%s",
             bil, m.e1_residual, m.e2_residual, s.beta2 - 2.0 * s.c11_0.real(), s.mu2, slope,
             amp_detail.c_str()));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const Critical cr = critical_table2();
  criterion1();
  criterion2(cr);
  criterion3(cr);
  criterion4(cr);
  criterion5(cr);
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10(cr);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of 10 criteria failed (%.1f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
