#pragma once

// Presets, scenario configs, run artifacts, stability reports and
// patient-series comparison.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcv/dde.hpp"
#include "hcv/hopf.hpp"
#include "hcv/model.hpp"
#include "hcv/stability.hpp"

namespace hcv {

using ojson = nlohmann::ordered_json;

enum class Preset { table1, table2 };

ModelParams preset(Preset id);
Preset parse_preset(const std::string& name);
const char* to_string(Preset id);

/// "22h", "22 hours", "1.5d", "0.9days" -> days. A unit tag is required.
double parse_tau(const std::string& text);

enum class Therapy { interferon, ribavirin, combined };

Therapy parse_therapy(const std::string& name);
const char* to_string(Therapy t);

/// Interferon sets eta_r = 0, ribavirin sets eta1 = 0, combined keeps both.
TherapyEfficacies apply_therapy(Therapy t, double eta1, double eta_r, double c);

struct ScenarioConfig {
  ModelParams params;
  TherapyEfficacies efficacies;
  double tau_days;
  SystemState initial;
  double horizon_days;
  double dt_days;
  double svr_threshold;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Table 2 constants, no therapy, tau = 1 day, (1e7, 1e7, 1e7, 1e7) start.
ScenarioConfig default_config();

/// Keys absent from `j` keep the values already in `base`. "preset" replaces
/// params before any explicit "params" entries apply. Throws InvalidInput.
ScenarioConfig parse_config(const ojson& j, const ScenarioConfig& base = default_config());
ojson emit_config(const ScenarioConfig& cfg);

struct RunResult {
  int exit_code;   // 0 ok, 2 invalid config, 3 numerical failure
  ojson summary;   // summary.json on success, diagnostics otherwise
};

/// Writes trajectory.csv, summary.json, config.json and run_info.json into
/// out_dir (created if missing). On integrator failure writes
/// diagnostics.json instead of the summary. Never throws on bad input.
RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

struct StabilityReport {
  double r0;
  double eta;
  double eta_c;
  std::optional<E1Verdict> e1_verdict;
  std::optional<CharCoefficients> coefficients;
  std::optional<RouthHurwitz> routh_hurwitz;
  bool rh_zero_delay = false;
  std::vector<OmegaRoot> omega_roots;
  std::optional<double> omega0;
  std::vector<double> tau_ladder;
  std::optional<double> residual_at_tau0;  // scaled
  std::optional<DelayBound> tau_plus;
  std::optional<Transversality> transversality;
  std::optional<cdouble> lambda_prime;
  std::optional<HopfSummary> hopf;
  std::optional<double> tau_probe;
  std::optional<std::string> probe_verdict;
  std::vector<std::string> warnings;
};

StabilityReport stability_report(const ModelParams& p, const TherapyEfficacies& eff,
                                 std::optional<double> tau_probe = std::nullopt);
ojson to_json(const StabilityReport& rep);

struct PatientPoint {
  double t_days;
  double log10_vl;
};

struct PatientSeries {
  std::string patient_id;
  std::vector<PatientPoint> points;
};

/// Two columns t_days,log10_vl with an optional header line.
PatientSeries load_patient_csv(const std::filesystem::path& path);
void validate(const PatientSeries& s);

struct ResidualRow {
  double t_days;
  double observed;
  double predicted;
  double residual;  // predicted - observed
};

struct FitReport {
  double rmse;
  double max_abs_error;
  std::vector<ResidualRow> rows;
  std::size_t skipped;
};

FitReport compare_patient(const Trajectory& traj, const PatientSeries& series);
ojson to_json(const FitReport& rep);

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace hcv
