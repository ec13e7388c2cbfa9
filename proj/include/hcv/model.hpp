#pragma once

#include <array>
#include <optional>

namespace hcv {

/// Raw four-component vector (T, I, V_I, V_NI) used for derivatives and
/// intermediate integrator stages, where negative entries are legitimate.
using Vec4 = std::array<double, 4>;

/// Biological constants of the delayed HCV model. All rates are per day.
///
/// Construction validates: every field strictly positive and finite and
/// r > d1. s <= d1 * t_max is checked separately and only warned about,
/// since the table2 preset does not satisfy it.
struct ModelParams {
  double s;      // hepatocyte source, cells/day/ml
  double r;      // proliferation rate
  double t_max;  // carrying capacity, cells/ml
  double alpha;  // infection rate, ml/virion/day
  double beta;   // virion production per infected cell per day
  double d1;     // uninfected hepatocyte death
  double d2;     // infected hepatocyte death
  double d3;     // virion clearance

  ModelParams(double s, double r, double t_max, double alpha, double beta,
              double d1, double d2, double d3);

  /// Re-checks the invariants; throws InvalidInput.
  void validate() const;

  /// s <= d1 * t_max.
  bool source_within_capacity() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Drug efficacies: interferon (eta1), ribavirin (eta_r) and the
/// attenuation c of interferon's effect on new infections.
///
/// 0 <= eta1 < 1, 0 <= eta_r < 1, 0 < c < 1. Zero efficacies mean no drug.
struct TherapyEfficacies {
  double eta1;
  double eta_r;
  double c;

  TherapyEfficacies(double eta1, double eta_r, double c);

  void validate() const;

  /// Fraction of new virions rendered noninfectious, (eta_r + eta1) / 2.
  double noninfectious_fraction() const { return 0.5 * (eta_r + eta1); }
  /// Residual infectivity factor 1 - c * eta1.
  double infection_factor() const { return 1.0 - c * eta1; }

  friend bool operator==(const TherapyEfficacies&, const TherapyEfficacies&) = default;
};

/// Instantaneous model state. Components must be finite and non-negative.
struct SystemState {
  double t_cells;
  double i_cells;
  double v_i;
  double v_ni;

  SystemState(double t_cells, double i_cells, double v_i, double v_ni);
  explicit SystemState(const Vec4& v) : SystemState(v[0], v[1], v[2], v[3]) {}

  Vec4 as_vec() const { return {t_cells, i_cells, v_i, v_ni}; }
  double total_virions() const { return v_i + v_ni; }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

enum class EquilibriumKind { uninfected, endemic };

struct Equilibrium {
  EquilibriumKind kind;
  SystemState state;
  double r0;
};

/// Combined efficacy eta with 1 - eta = (1 - c eta1)(1 - (eta_r + eta1)/2).
double combined_efficacy(const TherapyEfficacies& eff);

/// Right-hand side on raw vectors. `delayed` only enters the infected-cell
/// equation through V_I(t - tau) * T(t - tau).
Vec4 rhs(const Vec4& current, const Vec4& delayed, const ModelParams& p,
         const TherapyEfficacies& eff);

/// Checked wrapper around rhs() for validated states.
Vec4 vector_field(const SystemState& current, const SystemState& delayed,
                  const ModelParams& p, const TherapyEfficacies& eff);

/// Disease-free hepatocyte level T-hat, the positive root of
/// s + r T (1 - T / t_max) - d1 T = 0.
double uninfected_equilibrium(const ModelParams& p);

/// Uninfected hepatocyte level at the endemic state, T* = d2 d3 / ((1-eta) alpha beta).
double endemic_target_cells(const ModelParams& p, const TherapyEfficacies& eff);

/// R0 = T-hat / T*.
double basic_r0(const ModelParams& p, const TherapyEfficacies& eff);

/// R0 with no drug.
double untreated_r0(const ModelParams& p);

/// eta_c = 1 - T0* / T-hat with T0* = d2 d3 / (alpha beta). Meaningful as a
/// threshold only when untreated_r0(p) > 1; otherwise it is <= 0 and
/// returned as-is.
double critical_efficacy(const ModelParams& p);

Equilibrium uninfected_equilibrium_point(const ModelParams& p, const TherapyEfficacies& eff);

/// Endemic equilibrium E2 when R0 > 1, otherwise nullopt. Closed form,
/// then Newton-polished on the steady-state equations.
std::optional<Equilibrium> endemic_equilibrium(const ModelParams& p,
                                               const TherapyEfficacies& eff);

/// Per-component magnitude of the terms in rhs(); used to express a
/// residual relative to the size of the quantities that cancel.
Vec4 rhs_term_scale(const Vec4& current, const Vec4& delayed, const ModelParams& p,
                    const TherapyEfficacies& eff);

}  // namespace hcv
