#include "hcv/dde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcv {

namespace {

constexpr double kBlowUp = 1e15;

Vec4 axpy(const Vec4& x, double a, const Vec4& y) {
  return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2], x[3] + a * y[3]};
}

Vec4 hermite(const Vec4& x0, const Vec4& f0, const Vec4& x1, const Vec4& f1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  Vec4 out{};
  for (int i = 0; i < 4; ++i) {
    out[i] = h00 * x0[i] + h10 * h * f0[i] + h01 * x1[i] + h11 * h * f1[i];
  }
  return out;
}

// Clamps roundoff negatives; anything larger is a model failure.
void check_state(Vec4& x, double t, std::size_t& clamps) {
  double scale = 0.0;
  for (double v : x) {
    if (!std::isfinite(v) || v > kBlowUp) {
      std::ostringstream msg;
      msg << "integrator blow-up at t = " << t << " days (component " << v << ")";
      throw IntegrationFailure(msg.str(), t, x);
    }
    scale = std::max(scale, std::abs(v));
  }
  for (double& v : x) {
    if (v >= 0.0) continue;
    if (-v <= 1e-12 * scale) {
      v = 0.0;
      ++clamps;
    } else {
      std::ostringstream msg;
      msg << "state became negative (" << v << ") at t = " << t << " days";
      throw IntegrationFailure(msg.str(), t, x);
    }
  }
}

}  // namespace

double effective_step(double dt, double tau) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive and finite");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be non-negative");
  if (tau == 0.0) return dt;
  if (dt > tau / 16.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << dt << " exceeds tau / 16 = " << tau / 16.0;
    throw InvalidInput(msg.str());
  }
  const double ratio = tau / dt;
  const double m = std::round(ratio);
  if (std::abs(ratio - m) <= 1e-9 * ratio) return dt;
  return tau / m;
}

Trajectory integrate(const ModelParams& p, const TherapyEfficacies& eff, double tau,
                     const HistorySpec& h, const IntegrationConfig& cfg) {
  if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
    throw InvalidInput("t_end must be non-negative and finite");
  }
  const double dt = effective_step(cfg.dt, tau);
  const bool delayed = tau > 0.0;
  const long long lag = delayed ? std::llround(tau / dt) : 0;
  const auto n_steps = static_cast<long long>(std::floor(cfg.t_end / dt + 1e-9));

  const Vec4 hist = h.values.as_vec();
  std::vector<Vec4> xs;
  std::vector<Vec4> fs;
  xs.reserve(static_cast<std::size_t>(n_steps) + 1);
  fs.reserve(static_cast<std::size_t>(n_steps) + 1);
  xs.push_back(hist);
  fs.push_back(rhs(hist, hist, p, eff));

  Trajectory traj;
  traj.tau = tau;
  traj.dt = dt;
  const double half = 0.5 * dt;

  for (long long n = 0; n < n_steps; ++n) {
    const Vec4& x = xs[static_cast<std::size_t>(n)];
    const Vec4 k1 = fs[static_cast<std::size_t>(n)];
    Vec4 next{};
    Vec4 lag_end{};
    if (!delayed) {
      const Vec4 y2 = axpy(x, half, k1);
      const Vec4 k2 = rhs(y2, y2, p, eff);
      const Vec4 y3 = axpy(x, half, k2);
      const Vec4 k3 = rhs(y3, y3, p, eff);
      const Vec4 y4 = axpy(x, dt, k3);
      const Vec4 k4 = rhs(y4, y4, p, eff);
      for (int i = 0; i < 4; ++i) next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    } else {
      // Delayed arguments at t_n - tau, t_n - tau + dt/2, t_{n+1} - tau.
      const long long j = n - lag;
      Vec4 lag_mid = hist;
      lag_end = hist;
      if (j >= 0) {
        const auto ju = static_cast<std::size_t>(j);
        lag_mid = hermite(xs[ju], fs[ju], xs[ju + 1], fs[ju + 1], dt, 0.5);
        lag_end = xs[ju + 1];
      }
      const Vec4 k2 = rhs(axpy(x, half, k1), lag_mid, p, eff);
      const Vec4 k3 = rhs(axpy(x, half, k2), lag_mid, p, eff);
      const Vec4 k4 = rhs(axpy(x, dt, k3), lag_end, p, eff);
      for (int i = 0; i < 4; ++i) next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    const double t_next = static_cast<double>(n + 1) * dt;
    check_state(next, t_next, traj.clamp_count);
    xs.push_back(next);
    fs.push_back(rhs(next, delayed ? lag_end : next, p, eff));
  }

  traj.times.reserve(xs.size());
  traj.states.reserve(xs.size());
  for (std::size_t n = 0; n < xs.size(); ++n) {
    traj.times.push_back(static_cast<double>(n) * dt);
    traj.states.emplace_back(xs[n]);
  }
  if (cfg.dense_output) traj.derivs = std::move(fs);
  return traj;
}

SystemState interpolate(const Trajectory& traj, double t) {
  if (traj.empty()) throw InvalidInput("interpolate: empty trajectory");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  if (!(t >= t0 && t <= t1)) {
    std::ostringstream msg;
    msg << "interpolate: t = " << t << " outside [" << t0 << ", " << t1 << "]";
    throw InvalidInput(msg.str());
  }
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - traj.times.begin());
  if (hi == 0) hi = 1;
  if (hi >= traj.size()) {
    if (traj.times.back() == t) return traj.states.back();
    hi = traj.size() - 1;
  }
  const std::size_t lo = hi - 1;
  if (traj.times[lo] == t) return traj.states[lo];
  const double h = traj.times[hi] - traj.times[lo];
  const double s = (t - traj.times[lo]) / h;
  const Vec4 x0 = traj.states[lo].as_vec();
  const Vec4 x1 = traj.states[hi].as_vec();
  Vec4 out{};
  if (traj.derivs.size() == traj.size()) {
    out = hermite(x0, traj.derivs[lo], x1, traj.derivs[hi], h, s);
  } else {
    for (int i = 0; i < 4; ++i) out[i] = (1.0 - s) * x0[i] + s * x1[i];
  }
  // Hermite overshoot near zero may dip below it by roundoff.
  for (double& v : out) v = std::max(v, 0.0);
  return SystemState(out);
}

std::optional<double> svr_time(const Trajectory& traj, double threshold) {
  if (traj.empty()) return std::nullopt;
  const std::size_t n = traj.size();
  if (traj.states.back().total_virions() >= threshold) return std::nullopt;
  std::size_t last_above = n;
  for (std::size_t k = n; k-- > 0;) {
    if (traj.states[k].total_virions() >= threshold) {
      last_above = k;
      break;
    }
  }
  if (last_above == n) return traj.times.front();
  double lo = traj.times[last_above];
  double hi = traj.times[last_above + 1];
  const double precision = 1e-6 * (hi - lo);
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    (interpolate(traj, mid).total_virions() >= threshold ? lo : hi) = mid;
  }
  return hi;
}

const char* to_string(LongRun c) {
  switch (c) {
    case LongRun::to_e1: return "to_E1";
    case LongRun::to_e2: return "to_E2";
    case LongRun::oscillatory: return "oscillatory";
    case LongRun::undetermined: return "undetermined";
  }
  return "?";
}

std::vector<double> peak_amplitudes(const Trajectory& traj, int component, double t_from) {
  std::vector<double> amps;
  const auto value = [&](std::size_t k) { return traj.states[k].as_vec()[static_cast<std::size_t>(component)]; };
  std::size_t start = static_cast<std::size_t>(
      std::lower_bound(traj.times.begin(), traj.times.end(), t_from) - traj.times.begin());
  std::optional<std::size_t> prev_peak;
  for (std::size_t k = std::max<std::size_t>(start, 1); k + 1 < traj.size(); ++k) {
    const double v = value(k);
    if (!(v > value(k - 1) && v >= value(k + 1))) continue;
    if (prev_peak) {
      double trough = v;
      for (std::size_t m = *prev_peak; m <= k; ++m) trough = std::min(trough, value(m));
      amps.push_back(v - trough);
    }
    prev_peak = k;
  }
  return amps;
}

LongRun classify_longrun(const Trajectory& traj, const ModelParams& p,
                         const TherapyEfficacies& eff, double tol, std::optional<double> period) {
  if (traj.size() < 3) return LongRun::undetermined;
  const double t_first = traj.times.front();
  const double t_last = traj.times.back();
  const double span = t_last - t_first;
  double window_start = t_last - 0.25 * span;
  if (period && *period > 0.0) window_start = std::max(t_first, t_last - 4.0 * *period);
  const auto first = static_cast<std::size_t>(
      std::lower_bound(traj.times.begin(), traj.times.end(), window_start) - traj.times.begin());
  if (traj.size() - first < 3) return LongRun::undetermined;

  Vec4 mean{}, lo{}, hi{}, peak_all{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vec4 v = traj.states[k].as_vec();
    for (int i = 0; i < 4; ++i) {
      peak_all[i] = std::max(peak_all[i], v[i]);
      if (k < first) continue;
      mean[i] += v[i];
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  }
  const double count = static_cast<double>(traj.size() - first);
  for (double& m : mean) m /= count;

  auto near = [&](const Vec4& target) {
    for (int i = 0; i < 4; ++i) {
      const double scale = target[i] > 0.0 ? target[i] : peak_all[i];
      if (scale == 0.0) continue;
      if (std::abs(mean[i] - target[i]) > tol * scale) return false;
      if (hi[i] - lo[i] > tol * scale) return false;
    }
    return true;
  };

  if (near({uninfected_equilibrium(p), 0.0, 0.0, 0.0})) return LongRun::to_e1;
  const auto e2 = endemic_equilibrium(p, eff);
  if (e2 && near(e2->state.as_vec())) return LongRun::to_e2;

  const auto amps = peak_amplitudes(traj, 2, window_start);
  if (amps.size() >= 2) {
    const double scale = e2 ? e2->state.v_i : std::max(mean[2], 1e-300);
    bool steady = true;
    for (std::size_t k = 0; k < amps.size(); ++k) {
      if (!(amps[k] > tol * scale)) steady = false;
      if (k > 0 && std::abs(amps[k] - amps[k - 1]) >= 0.1 * std::max(amps[k], amps[k - 1])) {
        steady = false;
      }
    }
    if (steady) return LongRun::oscillatory;
  }
  return LongRun::undetermined;
}

}  // namespace hcv
