#include "hcv/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hcv/errors.hpp"

namespace hcv {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double unit_to_days(double value, const std::string& unit_raw) {
  const std::string unit = lower(trim(unit_raw));
  if (unit == "h" || unit == "hour" || unit == "hours") return value / 24.0;
  if (unit == "d" || unit == "day" || unit == "days") return value;
  throw InvalidInput("unknown tau unit '" + unit_raw + "' (expected hours or days)");
}

void check_keys(const ojson& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidInput("unknown key '" + key + "' in " + where);
    }
  }
}

double number(const ojson& j, const std::string& where) {
  if (!j.is_number()) throw InvalidInput(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InvalidInput(where + " must be finite");
  return v;
}

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson complex_json(cdouble z) { return ojson{{"re", z.real()}, {"im", z.imag()}}; }

void check_config(const ScenarioConfig& cfg) {
  cfg.params.validate();
  cfg.efficacies.validate();
  if (!(cfg.tau_days >= 0.0) || !std::isfinite(cfg.tau_days)) throw InvalidInput("tau must be >= 0");
  if (!(cfg.horizon_days >= 0.0) || !std::isfinite(cfg.horizon_days)) {
    throw InvalidInput("horizon_days must be >= 0");
  }
  if (!(cfg.svr_threshold > 0.0) || !std::isfinite(cfg.svr_threshold)) {
    throw InvalidInput("svr_threshold must be > 0");
  }
  effective_step(cfg.dt_days, cfg.tau_days);
}

}  // namespace

ModelParams preset(Preset id) {
  switch (id) {
    case Preset::table1: return ModelParams(1.0, 2.0, 3.6e7, 2.25e-7, 2.9, 0.01, 1.0, 6.0);
    case Preset::table2: return ModelParams(3.7e4, 0.73, 0.6e7, 1.8e-7, 13.9, 2.4e-3, 0.06, 13.9);
  }
  throw InvalidInput("unknown preset");
}

Preset parse_preset(const std::string& name) {
  const std::string n = lower(trim(name));
  if (n == "table1") return Preset::table1;
  if (n == "table2") return Preset::table2;
  throw InvalidInput("unknown preset '" + name + "' (expected table1 or table2)");
}

const char* to_string(Preset id) { return id == Preset::table1 ? "table1" : "table2"; }

double parse_tau(const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    throw InvalidInput("cannot parse tau '" + text + "'");
  }
  const std::string unit = t.substr(used);
  if (trim(unit).empty()) throw InvalidInput("tau '" + text + "' needs a unit tag (h or d)");
  const double days = unit_to_days(value, unit);
  if (!(days >= 0.0) || !std::isfinite(days)) throw InvalidInput("tau must be >= 0");
  return days;
}

Therapy parse_therapy(const std::string& name) {
  const std::string n = lower(trim(name));
  if (n == "interferon") return Therapy::interferon;
  if (n == "ribavirin") return Therapy::ribavirin;
  if (n == "combined") return Therapy::combined;
  throw InvalidInput("unknown scenario '" + name + "' (interferon, ribavirin, combined)");
}

const char* to_string(Therapy t) {
  switch (t) {
    case Therapy::interferon: return "interferon";
    case Therapy::ribavirin: return "ribavirin";
    case Therapy::combined: return "combined";
  }
  return "?";
}

TherapyEfficacies apply_therapy(Therapy t, double eta1, double eta_r, double c) {
  switch (t) {
    case Therapy::interferon: return TherapyEfficacies(eta1, 0.0, c);
    case Therapy::ribavirin: return TherapyEfficacies(0.0, eta_r, c);
    case Therapy::combined: return TherapyEfficacies(eta1, eta_r, c);
  }
  throw InvalidInput("unknown scenario");
}

ScenarioConfig default_config() {
  return ScenarioConfig{preset(Preset::table2), TherapyEfficacies(0.0, 0.0, 0.5), 1.0,
                        SystemState(1e7, 1e7, 1e7, 1e7), 100.0, 0.01, 100.0};
}

ScenarioConfig parse_config(const ojson& j, const ScenarioConfig& base) {
  ScenarioConfig cfg = base;
  try {
    check_keys(j, {"preset", "params", "scenario", "efficacies", "tau", "initial", "horizon_days",
                   "dt_days", "svr_threshold"},
               "config");
    if (j.contains("preset")) cfg.params = preset(parse_preset(j.at("preset").get<std::string>()));
    if (j.contains("params")) {
      const auto& pj = j.at("params");
      check_keys(pj, {"s", "r", "t_max", "alpha", "beta", "d1", "d2", "d3"}, "params");
      ModelParams& p = cfg.params;
      const std::pair<const char*, double*> fields[] = {
          {"s", &p.s},         {"r", &p.r},       {"t_max", &p.t_max}, {"alpha", &p.alpha},
          {"beta", &p.beta},   {"d1", &p.d1},     {"d2", &p.d2},       {"d3", &p.d3}};
      for (const auto& [key, dst] : fields) {
        if (pj.contains(key)) *dst = number(pj.at(key), std::string("params.") + key);
      }
      p.validate();
    }
    if (j.contains("efficacies")) {
      const auto& ej = j.at("efficacies");
      check_keys(ej, {"eta1", "eta_r", "c"}, "efficacies");
      TherapyEfficacies& e = cfg.efficacies;
      if (ej.contains("eta1")) e.eta1 = number(ej.at("eta1"), "efficacies.eta1");
      if (ej.contains("eta_r")) e.eta_r = number(ej.at("eta_r"), "efficacies.eta_r");
      if (ej.contains("c")) e.c = number(ej.at("c"), "efficacies.c");
      e.validate();
    }
    if (j.contains("scenario")) {
      const auto& e = cfg.efficacies;
      cfg.efficacies = apply_therapy(parse_therapy(j.at("scenario").get<std::string>()), e.eta1,
                                     e.eta_r, e.c);
    }
    if (j.contains("tau")) {
      const auto& tj = j.at("tau");
      if (tj.is_string()) {
        cfg.tau_days = parse_tau(tj.get<std::string>());
      } else {
        check_keys(tj, {"value", "unit"}, "tau");
        if (!tj.contains("value") || !tj.contains("unit")) {
          throw InvalidInput("tau needs both value and unit");
        }
        cfg.tau_days = unit_to_days(number(tj.at("value"), "tau.value"),
                                    tj.at("unit").get<std::string>());
        if (cfg.tau_days < 0.0) throw InvalidInput("tau must be >= 0");
      }
    }
    if (j.contains("initial")) {
      const auto& ij = j.at("initial");
      check_keys(ij, {"T", "I", "V_I", "V_NI"}, "initial");
      Vec4 v = cfg.initial.as_vec();
      const char* keys[] = {"T", "I", "V_I", "V_NI"};
      for (std::size_t k = 0; k < 4; ++k) {
        if (ij.contains(keys[k])) v[k] = number(ij.at(keys[k]), std::string("initial.") + keys[k]);
      }
      cfg.initial = SystemState(v);
    }
    if (j.contains("horizon_days")) cfg.horizon_days = number(j.at("horizon_days"), "horizon_days");
    if (j.contains("dt_days")) cfg.dt_days = number(j.at("dt_days"), "dt_days");
    if (j.contains("svr_threshold")) cfg.svr_threshold = number(j.at("svr_threshold"), "svr_threshold");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
  check_config(cfg);
  return cfg;
}

ojson emit_config(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  const auto& e = cfg.efficacies;
  const auto& x = cfg.initial;
  ojson j;
  j["params"] = ojson{{"s", p.s},       {"r", p.r},   {"t_max", p.t_max}, {"alpha", p.alpha},
                      {"beta", p.beta}, {"d1", p.d1}, {"d2", p.d2},       {"d3", p.d3}};
  j["efficacies"] = ojson{{"eta1", e.eta1}, {"eta_r", e.eta_r}, {"c", e.c}};
  j["tau"] = ojson{{"value", cfg.tau_days}, {"unit", "days"}};
  j["initial"] = ojson{{"T", x.t_cells}, {"I", x.i_cells}, {"V_I", x.v_i}, {"V_NI", x.v_ni}};
  j["horizon_days"] = cfg.horizon_days;
  j["dt_days"] = cfg.dt_days;
  j["svr_threshold"] = cfg.svr_threshold;
  return j;
}

void write_trajectory_csv(const Trajectory& traj, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t_days,T,I,V_I,V_NI,V_total,log10_V_total\n";
  char buf[256];
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    const double vt = s.total_virions();
    const double lv = vt > 0.0 ? std::log10(vt) : -std::numeric_limits<double>::infinity();
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.12g,%.12g,%.12g,%.9g\n", traj.times[k],
                  s.t_cells, s.i_cells, s.v_i, s.v_ni, vt, lv);
    out << buf;
  }
}

RunResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  try {
    check_config(cfg);
  } catch (const InvalidInput& e) {
    return {2, ojson{{"error", "invalid_config"}, {"message", e.what()}}};
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    return {2, ojson{{"error", "io"}, {"message", "cannot create " + out_dir.string()}}};
  }
  write_json(out_dir / "config.json", emit_config(cfg));

  Trajectory traj;
  try {
    traj = integrate(cfg.params, cfg.efficacies, cfg.tau_days, HistorySpec{cfg.initial},
                     IntegrationConfig{cfg.dt_days, cfg.horizon_days});
  } catch (const IntegrationFailure& e) {
    ojson diag{{"error", "numerical_failure"},
               {"message", e.what()},
               {"t_days", e.time},
               {"state", {e.state[0], e.state[1], e.state[2], e.state[3]}}};
    write_json(out_dir / "diagnostics.json", diag);
    return {3, diag};
  } catch (const NumericalFailure& e) {
    ojson diag{{"error", "numerical_failure"}, {"message", e.what()}};
    write_json(out_dir / "diagnostics.json", diag);
    return {3, diag};
  }
  write_trajectory_csv(traj, out_dir / "trajectory.csv");

  const StabilityReport rep = stability_report(cfg.params, cfg.efficacies);
  std::optional<double> period;
  if (rep.omega0 && rep.r0 > 1.0) period = 2.0 * std::numbers::pi / *rep.omega0;
  const LongRun longrun = classify_longrun(traj, cfg.params, cfg.efficacies, 1e-3, period);

  ojson summary;
  summary["r0"] = rep.r0;
  summary["eta"] = rep.eta;
  summary["eta_c"] = rep.eta_c;
  summary["svr_day"] = opt(svr_time(traj, cfg.svr_threshold));
  summary["longrun"] = to_string(longrun);
  summary["tau0_days"] = rep.tau_ladder.empty() ? ojson(nullptr) : ojson(rep.tau_ladder.front());
  summary["omega0"] = opt(rep.omega0);
  summary["beta2"] = rep.hopf ? ojson(rep.hopf->beta2) : ojson(nullptr);
  summary["mu2"] = rep.hopf ? ojson(rep.hopf->mu2) : ojson(nullptr);
  write_json(out_dir / "summary.json", summary);

  const auto& last = traj.states.back();
  ojson info;
  info["dt_requested"] = cfg.dt_days;
  info["dt_effective"] = traj.dt;
  info["steps"] = traj.size() - 1;
  info["clamp_count"] = traj.clamp_count;
  info["underflow"] = longrun == LongRun::to_e1 && rep.r0 > 1.0;
  info["final_state"] = {last.t_cells, last.i_cells, last.v_i, last.v_ni};
  info["warnings"] = rep.warnings;
  write_json(out_dir / "run_info.json", info);

  return {0, summary};
}

StabilityReport stability_report(const ModelParams& p, const TherapyEfficacies& eff,
                                 std::optional<double> tau_probe) {
  StabilityReport rep;
  rep.r0 = basic_r0(p, eff);
  rep.eta = combined_efficacy(eff);
  rep.eta_c = critical_efficacy(p);
  rep.tau_probe = tau_probe;
  rep.e1_verdict = e1_verdict(p, eff);
  if (!p.source_within_capacity()) rep.warnings.push_back("s > d1 * t_max");
  if (rep.r0 <= 1.0) {
    if (tau_probe) rep.probe_verdict = to_string(*rep.e1_verdict) + std::string(" (E1)");
    return rep;
  }

  try {
    rep.coefficients = char_coefficients(p, eff);
  } catch (const std::exception& e) {
    rep.warnings.push_back(std::string("coefficients: ") + e.what());
    return rep;
  }
  const CharCoefficients& cc = *rep.coefficients;
  rep.routh_hurwitz = routh_hurwitz_zero_delay(cc);
  rep.rh_zero_delay = rep.routh_hurwitz->stable;

  try {
    rep.tau_plus = delay_length_bound(cc);
  } catch (const std::exception& e) {
    rep.warnings.push_back(std::string("delay bound: ") + e.what());
  }

  const OmegaAnalysis oa = omega_analysis(cc);
  rep.omega_roots = oa.positive_roots;
  rep.omega0 = oa.omega0;
  if (!oa.positive_roots.empty() && !oa.omega0) {
    rep.warnings.push_back("omega roots are all repeated; no simple crossing");
  }

  if (rep.omega0) {
    const double w = *rep.omega0;
    try {
      rep.tau_ladder = critical_delays(cc, w, 2);
      const cdouble iw(0.0, w);
      rep.residual_at_tau0 = std::abs(characteristic_residual(iw, cc, rep.tau_ladder.front())) /
                             characteristic_scale(iw, cc);
    } catch (const std::exception& e) {
      rep.warnings.push_back(std::string("critical delays: ") + e.what());
    }
    rep.transversality = transversality(cc, w);
    if (!rep.tau_ladder.empty()) {
      const double tau0 = rep.tau_ladder.front();
      rep.lambda_prime = lambda_prime(cc, w, tau0);
      if (rep.rh_zero_delay) {
        try {
          rep.hopf = analyze_hopf(p, eff, w, tau0).summary;
        } catch (const std::exception& e) {
          rep.warnings.push_back(std::string("normal form: ") + e.what());
        }
      } else {
        rep.warnings.push_back("E2 unstable at zero delay; normal form not evaluated");
      }
    }
  }

  if (tau_probe) {
    if (!rep.rh_zero_delay) {
      rep.probe_verdict = "unstable";
    } else if (rep.tau_ladder.empty()) {
      rep.probe_verdict = rep.omega_roots.empty() ? "stable" : "undetermined";
    } else {
      const double tau0 = rep.tau_ladder.front();
      rep.probe_verdict = *tau_probe < tau0 ? "stable" : (*tau_probe > tau0 ? "unstable" : "critical");
    }
  }
  return rep;
}

ojson to_json(const StabilityReport& rep) {
  ojson j;
  j["r0"] = rep.r0;
  j["eta"] = rep.eta;
  j["eta_c"] = rep.eta_c;
  j["e1_verdict"] = rep.e1_verdict ? ojson(to_string(*rep.e1_verdict)) : ojson(nullptr);
  if (rep.coefficients) {
    const auto& c = *rep.coefficients;
    j["coefficients"] = {{"a0", c.a0}, {"a1", c.a1}, {"a2", c.a2}, {"b1", c.b1}, {"b2", c.b2}};
  }
  if (rep.routh_hurwitz) {
    const auto& rh = *rep.routh_hurwitz;
    j["routh_hurwitz"] = {{"a0_positive", rh.a0_positive},
                          {"a1_plus_b1_positive", rh.a1b1_positive},
                          {"a2_plus_b2_positive", rh.a2b2_positive},
                          {"expression", rh.expression},
                          {"stable", rh.stable}};
  }
  j["rh_zero_delay"] = rep.rh_zero_delay;
  ojson roots = ojson::array();
  for (const auto& r : rep.omega_roots) {
    roots.push_back({{"omega_per_day", r.omega},
                     {"omega_per_hour", r.omega / 24.0},
                     {"multiplicity", r.multiplicity},
                     {"relative_residual", r.relative_residual}});
  }
  j["omega_roots"] = roots;
  j["omega0_per_day"] = opt(rep.omega0);
  j["omega0_per_hour"] = rep.omega0 ? ojson(*rep.omega0 / 24.0) : ojson(nullptr);
  ojson ladder = ojson::array();
  for (double t : rep.tau_ladder) ladder.push_back({{"days", t}, {"hours", 24.0 * t}});
  j["tau_ladder"] = ladder;
  j["residual_at_tau0"] = opt(rep.residual_at_tau0);
  if (rep.tau_plus) {
    const auto& b = *rep.tau_plus;
    j["tau_plus"] = {{"days", b.tau_plus}, {"hours", 24.0 * b.tau_plus}, {"mu_plus", b.mu_plus},
                     {"n1", b.n1}, {"n2", b.n2}, {"n3", b.n3}};
  } else {
    j["tau_plus"] = nullptr;
  }
  if (rep.transversality) {
    j["transversality"] = {{"numerator", rep.transversality->numerator},
                           {"sign", to_string(rep.transversality->sign)}};
  } else {
    j["transversality"] = nullptr;
  }
  j["lambda_prime"] = rep.lambda_prime ? complex_json(*rep.lambda_prime) : ojson(nullptr);
  if (rep.hopf) {
    const auto& h = *rep.hopf;
    j["hopf"] = {{"c11_0", complex_json(h.c11_0)},
                 {"mu2", h.mu2},
                 {"beta2", h.beta2},
                 {"t2", h.t2},
                 {"direction", to_string(h.direction)},
                 {"cycle", to_string(h.cycle)},
                 {"period", to_string(h.period)}};
  } else {
    j["hopf"] = nullptr;
  }
  if (rep.tau_probe) {
    j["probe"] = {{"tau_days", *rep.tau_probe}, {"verdict", rep.probe_verdict.value_or("")}};
  }
  j["warnings"] = rep.warnings;
  return j;
}

void validate(const PatientSeries& s) {
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const auto& pt = s.points[k];
    if (!std::isfinite(pt.t_days) || !std::isfinite(pt.log10_vl)) {
      throw InvalidInput("patient series has non-finite values");
    }
    if (k > 0 && !(pt.t_days > s.points[k - 1].t_days)) {
      throw InvalidInput("patient series times must be strictly increasing");
    }
  }
}

PatientSeries load_patient_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  PatientSeries s;
  s.patient_id = path.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput(path.string() + ": expected two columns");
    const std::string a = trim(line.substr(0, comma));
    const std::string b = trim(line.substr(comma + 1));
    char* end_a = nullptr;
    char* end_b = nullptr;
    const double t = std::strtod(a.c_str(), &end_a);
    const double v = std::strtod(b.c_str(), &end_b);
    if (end_a == a.c_str() || *end_a != '\0' || end_b == b.c_str() || *end_b != '\0') {
      if (s.points.empty() && lineno == 1) continue;  // header
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": not numeric");
    }
    s.points.push_back({t, v});
  }
  validate(s);
  return s;
}

FitReport compare_patient(const Trajectory& traj, const PatientSeries& series) {
  validate(series);
  FitReport rep{0.0, 0.0, {}, 0};
  if (traj.empty()) {
    rep.skipped = series.points.size();
    rep.rmse = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  double sum_sq = 0.0;
  for (const auto& pt : series.points) {
    if (pt.t_days < traj.times.front() || pt.t_days > traj.times.back()) {
      ++rep.skipped;
      continue;
    }
    const double vt = interpolate(traj, pt.t_days).total_virions();
    if (!(vt > 0.0)) {
      ++rep.skipped;
      continue;
    }
    const double pred = std::log10(vt);
    const double res = pred - pt.log10_vl;
    rep.rows.push_back({pt.t_days, pt.log10_vl, pred, res});
    sum_sq += res * res;
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(res));
  }
  rep.rmse = rep.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : std::sqrt(sum_sq / static_cast<double>(rep.rows.size()));
  return rep;
}

ojson to_json(const FitReport& rep) {
  ojson j;
  j["rmse"] = std::isfinite(rep.rmse) ? ojson(rep.rmse) : ojson(nullptr);
  j["max_abs_error"] = rep.max_abs_error;
  j["points_used"] = rep.rows.size();
  j["skipped"] = rep.skipped;
  ojson rows = ojson::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"t_days", r.t_days},
                    {"observed", r.observed},
                    {"predicted", r.predicted},
                    {"residual", r.residual}});
  }
  j["residuals"] = rows;
  return j;
}

}  // namespace hcv
