// hcvsim: simulate, analyze and compare the delayed HCV therapy model.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcv/errors.hpp"
#include "hcv/hopf.hpp"
#include "hcv/scenarios.hpp"

namespace {

using hcv::ojson;

struct CommonFlags {
  std::string config;
  std::optional<std::string> preset;
  std::optional<double> eta1, etar, c;
  std::optional<std::string> scenario;
  std::optional<std::string> tau;
  std::optional<double> dt, horizon;
  std::optional<double> svr;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON scenario config");
  cmd->add_option("--preset", f.preset, "parameter table: table1 or table2");
  cmd->add_option("--eta1", f.eta1, "interferon efficacy");
  cmd->add_option("--etar", f.etar, "ribavirin efficacy");
  cmd->add_option("--c", f.c, "interferon infection attenuation");
  cmd->add_option("--scenario", f.scenario, "interferon, ribavirin or combined");
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--tau", f.tau, "delay with unit, e.g. 22h or 1.5d");
  cmd->add_option("--dt", f.dt, "step, days");
  cmd->add_option("--horizon", f.horizon, "horizon, days");
  cmd->add_option("--svr-threshold", f.svr, "detection limit, copies/ml");
}

ojson read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hcv::InvalidInput("cannot open " + path);
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw hcv::InvalidInput(path + ": " + e.what());
  }
}

ojson flag_overlay(const CommonFlags& f) {
  ojson j = ojson::object();
  if (f.preset) j["preset"] = *f.preset;
  ojson eff = ojson::object();
  if (f.eta1) eff["eta1"] = *f.eta1;
  if (f.etar) eff["eta_r"] = *f.etar;
  if (f.c) eff["c"] = *f.c;
  if (!eff.empty()) j["efficacies"] = eff;
  if (f.scenario) j["scenario"] = *f.scenario;
  if (f.tau) j["tau"] = *f.tau;
  if (f.dt) j["dt_days"] = *f.dt;
  if (f.horizon) j["horizon_days"] = *f.horizon;
  if (f.svr) j["svr_threshold"] = *f.svr;
  return j;
}

hcv::ScenarioConfig resolve(const CommonFlags& f) {
  hcv::ScenarioConfig cfg = hcv::default_config();
  if (!f.config.empty()) cfg = hcv::parse_config(read_json_file(f.config), cfg);
  return hcv::parse_config(flag_overlay(f), cfg);
}

void print(const ojson& j) { std::cout << j.dump(2) << '\n'; }

int fail(int code, const std::string& kind, const std::string& msg) {
  std::cerr << ojson{{"error", kind}, {"message", msg}}.dump() << '\n';
  return code;
}

int cmd_simulate(const CommonFlags& f, const std::string& out) {
  const hcv::ScenarioConfig cfg = resolve(f);
  const hcv::RunResult res = hcv::run_scenario(cfg, out);
  (res.exit_code == 0 ? std::cout : std::cerr) << res.summary.dump(2) << '\n';
  return res.exit_code;
}

int cmd_report(const CommonFlags& f) {
  const hcv::ScenarioConfig cfg = resolve(f);
  std::optional<double> probe;
  if (f.tau) probe = cfg.tau_days;
  print(hcv::to_json(hcv::stability_report(cfg.params, cfg.efficacies, probe)));
  return 0;
}

ojson cvec(const hcv::CVec4& v) {
  ojson a = ojson::array();
  for (const auto& z : v) a.push_back({{"re", z.real()}, {"im", z.imag()}});
  return a;
}

ojson cnum(hcv::cdouble z) { return {{"re", z.real()}, {"im", z.imag()}}; }

int cmd_hopf(const CommonFlags& f) {
  const hcv::ScenarioConfig cfg = resolve(f);
  const auto rep = hcv::stability_report(cfg.params, cfg.efficacies);
  if (!rep.omega0 || rep.tau_ladder.empty()) {
    ojson j{{"hopf", nullptr}, {"reason", "no simple crossing of the imaginary axis"},
            {"warnings", rep.warnings}};
    print(j);
    return 0;
  }
  const double w = *rep.omega0;
  const double tau0 = rep.tau_ladder.front();
  try {
    const auto an = hcv::analyze_hopf(cfg.params, cfg.efficacies, w, tau0);
    const auto& e = an.eigen;
    const auto& m = an.manifold;
    const auto& s = an.summary;
    ojson j;
    j["omega0_per_day"] = w;
    j["tau0_days"] = tau0;
    j["tau0_hours"] = 24.0 * tau0;
    j["q"] = cvec(e.q());
    j["q_star"] = cvec(e.q_star());
    j["bilinear_q_star_q"] = cnum(e.bilinear);
    j["eigen_residual"] = e.eigen_residual;
    j["adjoint_residual"] = e.adjoint_residual;
    j["g20"] = cnum(m.g20);
    j["g11"] = cnum(m.g11);
    j["g02"] = cnum(m.g02);
    j["g21"] = cnum(m.g21);
    j["e1"] = cvec(m.e1_vec);
    j["e2"] = m.e2_vec;
    j["e1_residual"] = m.e1_residual;
    j["e2_residual"] = m.e2_residual;
    j["c11_0"] = cnum(s.c11_0);
    j["lambda_prime"] = cnum(s.lambda_prime);
    j["mu2"] = s.mu2;
    j["beta2"] = s.beta2;
    j["t2"] = s.t2;
    j["direction"] = hcv::to_string(s.direction);
    j["cycle"] = hcv::to_string(s.cycle);
    j["period"] = hcv::to_string(s.period);
    print(j);
  } catch (const hcv::NumericalFailure& e) {
    return fail(3, "numerical_failure", e.what());
  }
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::string& patient) {
  const hcv::ScenarioConfig cfg = resolve(f);
  const auto series = hcv::load_patient_csv(patient);
  hcv::Trajectory traj;
  try {
    traj = hcv::integrate(cfg.params, cfg.efficacies, cfg.tau_days, hcv::HistorySpec{cfg.initial},
                          hcv::IntegrationConfig{cfg.dt_days, cfg.horizon_days});
  } catch (const hcv::NumericalFailure& e) {
    return fail(3, "numerical_failure", e.what());
  }
  const auto rep = hcv::compare_patient(traj, series);
  ojson j = hcv::to_json(rep);
  j["patient_id"] = series.patient_id;
  if (rep.skipped > 0) {
    std::cerr << "warning: " << rep.skipped << " point(s) outside the simulated span\n";
  }
  print(j);
  return 0;
}

int cmd_batch(const CommonFlags& f, const std::string& batch_file, const std::string& out,
              unsigned jobs) {
  const ojson list = read_json_file(batch_file);
  if (!list.is_array()) throw hcv::InvalidInput("batch file must hold a JSON array of configs");
  hcv::ScenarioConfig base = hcv::default_config();
  if (!f.config.empty()) base = hcv::parse_config(read_json_file(f.config), base);
  base = hcv::parse_config(flag_overlay(f), base);

  std::vector<hcv::ScenarioConfig> cfgs;
  for (const auto& item : list) cfgs.push_back(hcv::parse_config(item, base));

  std::vector<int> codes(cfgs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cfgs.size();) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu", k);
      codes[k] = hcv::run_scenario(cfgs[k], std::filesystem::path(out) / name).exit_code;
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, cfgs.size()); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  ojson j = ojson::array();
  int worst = 0;
  for (std::size_t k = 0; k < codes.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", k);
    j.push_back({{"run", name}, {"exit_code", codes[k]}});
    worst = std::max(worst, codes[k]);
  }
  print(j);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed HCV therapy model: simulation and stability analysis"};
  app.require_subcommand(1);

  CommonFlags sim_f, rep_f, hopf_f, cmp_f, batch_f;
  std::string sim_out = "run", patient, batch_file, batch_out = "batch";
  unsigned jobs = 0;

  auto* sim = app.add_subcommand("simulate", "integrate one scenario and write run artifacts");
  add_model_flags(sim, sim_f);
  add_run_flags(sim, sim_f);
  sim->add_option("--out", sim_out, "output directory");

  auto* rep = app.add_subcommand("report", "stability and bifurcation report");
  add_model_flags(rep, rep_f);
  rep->add_option("--tau", rep_f.tau, "probe delay with unit");

  auto* hopf = app.add_subcommand("hopf", "normal-form details at the first critical delay");
  add_model_flags(hopf, hopf_f);

  auto* cmp = app.add_subcommand("compare", "compare a simulated run with a patient series");
  add_model_flags(cmp, cmp_f);
  add_run_flags(cmp, cmp_f);
  cmp->add_option("--patient", patient, "CSV with t_days,log10_vl")->required();

  auto* batch = app.add_subcommand("batch", "run a JSON array of configs in parallel");
  add_model_flags(batch, batch_f);
  add_run_flags(batch, batch_f);
  batch->add_option("--batch", batch_file, "JSON array of config overlays")->required();
  batch->add_option("--out", batch_out, "parent output directory");
  batch->add_option("--jobs", jobs, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_f, sim_out);
    if (*rep) return cmd_report(rep_f);
    if (*hopf) return cmd_hopf(hopf_f);
    if (*cmp) return cmd_compare(cmp_f, patient);
    if (*batch) return cmd_batch(batch_f, batch_file, batch_out, jobs);
  } catch (const hcv::InvalidInput& e) {
    return fail(2, "invalid_config", e.what());
  } catch (const hcv::NumericalFailure& e) {
    return fail(3, "numerical_failure", e.what());
  } catch (const std::exception& e) {
    return fail(2, "error", e.what());
  }
  return 0;
}
