#pragma once

// Fixed-step method-of-steps integrator for the delayed HCV model.
//
// Classical RK4 with the delayed argument read from the stored solution by
// cubic Hermite interpolation (states and derivatives at the bracketing
// nodes). When tau > 0 the step is adjusted so that tau is an integer
// multiple of it, which puts the t = k tau derivative breakpoints on nodes
// and makes every delayed lookup either a node or an interval midpoint.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hcv/errors.hpp"
#include "hcv/model.hpp"

namespace hcv {

/// Constant initial history on [-tau, 0].
struct HistorySpec {
  SystemState values;
};

struct IntegrationConfig {
  double dt;      // requested step, days
  double t_end;   // horizon, days
  bool dense_output = true;  // keep node derivatives for Hermite interpolation
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SystemState> states;
  std::vector<Vec4> derivs;  // empty without dense output
  double tau = 0.0;
  double dt = 0.0;           // step actually used
  std::size_t clamp_count = 0;  // roundoff negatives reset to zero

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Raised on blow-up or a genuinely negative state.
class IntegrationFailure : public NumericalFailure {
 public:
  IntegrationFailure(const std::string& what, double t, Vec4 state)
      : NumericalFailure(what), time(t), state(state) {}
  double time;
  Vec4 state;
};

/// Step actually used for a requested dt and delay: dt itself when tau = 0
/// or tau / dt is an integer, otherwise tau / round(tau / dt).
/// Throws InvalidInput when dt <= 0 or dt > tau / 16.
double effective_step(double dt, double tau);

Trajectory integrate(const ModelParams& p, const TherapyEfficacies& eff, double tau,
                     const HistorySpec& h, const IntegrationConfig& cfg);

/// Cubic Hermite interpolation (linear when the trajectory has no dense
/// output). Exact at nodes. Throws InvalidInput outside [first, last].
SystemState interpolate(const Trajectory& traj, double t);

/// First time total viral load V_I + V_NI drops below `threshold` and stays
/// below through the end of the trajectory.
std::optional<double> svr_time(const Trajectory& traj, double threshold = 100.0);

enum class LongRun { to_e1, to_e2, oscillatory, undetermined };

const char* to_string(LongRun c);

/// Long-run regime from the final window of the trajectory. The window is
/// four periods when `period` is given, otherwise the last quarter.
LongRun classify_longrun(const Trajectory& traj, const ModelParams& p,
                         const TherapyEfficacies& eff, double tol,
                         std::optional<double> period = std::nullopt);

/// Peak-to-trough amplitudes of one component over [t_from, end], one per
/// detected local maximum after the first.
std::vector<double> peak_amplitudes(const Trajectory& traj, int component, double t_from);

}  // namespace hcv
