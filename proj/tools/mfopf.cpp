// mfopf: multi-frequency optimal power flow from the command line.
//
// Exit status: 0 success, 1 solver failure, 2 data or configuration error.

#include "mfopf/analysis.hpp"
#include "mfopf/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace mfopf;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitData = 2;

struct RunConfig {
  std::string command;
  std::string case_path;
  std::string ext_path;
  std::string out_dir;
  std::string mode = "lfac";
  double tol = 1e-8;
  int max_iter = 3000;
  std::string hessian = "exact";
  double classify_tol = 1e-6;
  unsigned threads = 0;
  // sweep
  std::optional<double> from_hz, to_hz;
  double step_hz = 0.1;
  std::string subnetwork;
  // comparisons
  std::vector<std::string> modes{"lfac", "pq", "f"};
  std::string scenario = "default";
  bool timings = false;
  // probe
  std::vector<std::string> windows;
  std::vector<double> starts;
  // solve
  int trials = 1;
  // check-derivs
  double fd_step = 1e-3;
  double deriv_threshold = 1e-6;
};

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MFOPF_OUTPUT_DIR"); env && *env) return env;
  return "mfopf-out";
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.tol_kkt = cfg.tol;
  o.max_iter = cfg.max_iter;
  if (cfg.hessian == "exact") o.hessian = HessianMode::Exact;
  else if (cfg.hessian == "bfgs") o.hessian = HessianMode::DampedBfgs;
  else throw ConfigError(fmt::format("unknown hessian mode '{}' (expected exact or bfgs)", cfg.hessian));
  return o;
}

nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["command"] = cfg.command;
  j["case"] = cfg.case_path;
  j["extension"] = cfg.ext_path;
  j["output_dir"] = cfg.out_dir;
  j["mode"] = cfg.mode;
  j["solver"] = {{"tol_kkt", cfg.tol}, {"max_iter", cfg.max_iter}, {"hessian", cfg.hessian}};
  j["classify_tol"] = cfg.classify_tol;
  if (cfg.command == "sweep") {
    j["from_hz"] = cfg.from_hz ? nlohmann::ordered_json(*cfg.from_hz) : nullptr;
    j["to_hz"] = cfg.to_hz ? nlohmann::ordered_json(*cfg.to_hz) : nullptr;
    j["step_hz"] = cfg.step_hz;
    j["subnetwork"] = cfg.subnetwork;
  }
  if (cfg.command == "compare-modes") j["modes"] = cfg.modes;
  if (cfg.command == "compare-modes" || cfg.command == "compare-hvdc") {
    j["scenario"] = cfg.scenario;
    j["timings"] = cfg.timings;
  }
  if (cfg.command == "probe") {
    j["windows"] = cfg.windows;
    j["starts_hz"] = cfg.starts;
  }
  if (cfg.command == "solve") j["trials"] = cfg.trials;
  if (cfg.command == "check-derivs") {
    j["fd_step"] = cfg.fd_step;
    j["threshold"] = cfg.deriv_threshold;
  }
  return j;
}

struct Networks {
  MultiFrequencyNetwork upgraded;
  MultiFrequencyNetwork baseline;
};

Networks load(const RunConfig& cfg) {
  const CaseDocument doc = load_case(cfg.case_path);
  const ExtensionDocument ext = cfg.ext_path.empty() ? ExtensionDocument{} : load_extension(cfg.ext_path);
  return {merge(doc, ext), merge_baseline(doc, ext)};
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    const double lo = std::stod(text.substr(0, colon)), hi = std::stod(text.substr(colon + 1));
    if (!(lo > 0.0 && hi >= lo)) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("window '{}' must look like LO:HI with 0 < LO <= HI (Hz)", text));
  }
}

int run_solve(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  const ControlMode mode = parse_control_mode(cfg.mode);
  const SolverOptions opts = solver_options(cfg);
  const OpfSolution sol = solve_opf(nets.upgraded, mode, opts);
  write_file(std::filesystem::path(cfg.out_dir) / "report.txt", solution_report(sol, nets.upgraded, cfg.classify_tol));
  fmt::print("{}: objective {:.10g} in {} iterations\n", to_string(sol.result.status), sol.result.objective,
             sol.result.iterations);
  if (cfg.trials > 1) {
    const SolverStats st = solver_stats(nets.upgraded, mode, cfg.trials, opts);
    std::string csv = "trials,time_mean_s,time_max_s,time_std_s,iter_mean,iter_max,iter_std,all_optimal\n";
    csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6g},{:.6g},{:.6g},{}\n", st.trials, st.time_mean, st.time_max,
                       st.time_std, st.iter_mean, st.iter_max, st.iter_std, st.all_optimal ? 1 : 0);
    write_file(std::filesystem::path(cfg.out_dir) / "stats.csv", csv);
    fmt::print("time mean {:.4f} s, max {:.4f} s, std {:.4f} s; iterations mean {:.1f}, max {:.0f}, std {:.2f}\n",
               st.time_mean, st.time_max, st.time_std, st.iter_mean, st.iter_max, st.iter_std);
  }
  return sol.result.optimal() ? kExitOk : kExitSolver;
}

int run_sweep(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Subnetwork& s : nets.upgraded.subnetworks) {
    if (!s.is_variable() || (!cfg.subnetwork.empty() && s.id != cfg.subnetwork)) continue;
    lo = std::min(lo, rad_to_hz(s.omega_range().first));
    hi = std::max(hi, rad_to_hz(s.omega_range().second));
  }
  if (hi == 0.0) throw ConfigError("sweep needs a variable-frequency subnetwork");
  SweepOptions opts;
  opts.subnetwork = cfg.subnetwork;
  opts.mode = parse_control_mode(cfg.mode);
  opts.solver = solver_options(cfg);
  opts.classify_tol = cfg.classify_tol;
  opts.threads = cfg.threads;
  const SweepCurve curve = frequency_sweep(nets.upgraded, cfg.from_hz.value_or(lo), cfg.to_hz.value_or(hi),
                                           cfg.step_hz, opts);
  write_file(std::filesystem::path(cfg.out_dir) / "sweep.csv", sweep_csv(curve));
  std::size_t ok = 0;
  for (const auto& s : curve.samples) ok += s.status == SolveStatus::Optimal;
  fmt::print("{} of {} samples optimal\n", ok, curve.samples.size());
  return ok > 0 ? kExitOk : kExitSolver;
}

int report_table(const RunConfig& cfg, const ComparisonTable& table, const std::string& file) {
  write_file(std::filesystem::path(cfg.out_dir) / file, comparison_csv(table, cfg.timings));
  for (const auto& r : table.rows)
    fmt::print("{:<24} {:<18} objective {:.10g} improvement {:.4f}%\n", r.mode, to_string(r.status), r.objective,
               r.improvement_pct);
  for (const auto& w : table.warnings) fmt::print(stderr, "warning: {}\n", w);
  const bool all_ok = std::all_of(table.rows.begin(), table.rows.end(),
                                  [](const ComparisonRow& r) { return r.status == SolveStatus::Optimal; });
  return all_ok ? kExitOk : kExitSolver;
}

int run_compare_modes(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  std::vector<ControlMode> modes;
  for (const auto& m : cfg.modes) modes.push_back(parse_control_mode(m));
  return report_table(cfg,
                      compare_modes(nets.upgraded, nets.baseline, modes, cfg.scenario, solver_options(cfg)),
                      "comparison.csv");
}

int run_compare_hvdc(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  return report_table(cfg,
                      compare_hvdc(nets.upgraded, nets.baseline, default_hvdc_grid(), cfg.scenario,
                                   solver_options(cfg)),
                      "hvdc.csv");
}

int run_probe(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  std::vector<std::pair<double, double>> windows;
  for (const auto& w : cfg.windows) windows.push_back(parse_window(w));
  const ProbeReport rep = local_minima_probe(nets.upgraded, windows, cfg.starts, solver_options(cfg), 1e-6,
                                             parse_control_mode(cfg.mode));
  write_file(std::filesystem::path(cfg.out_dir) / "probe.csv", probe_csv(rep));
  if (!rep.full.best || !rep.window_minimum) {
    fmt::print("probe: no optimal run in the full range or in any window\n");
    return kExitSolver;
  }
  fmt::print("full-range optimum {:.10g}, best window optimum {:.10g}, relative gap {:.3e} ({})\n",
             rep.full.runs[*rep.full.best].objective, *rep.window_minimum, rep.relative_gap,
             rep.consistent ? "consistent" : "local minimum suspected");
  return kExitOk;
}

int run_validate(const RunConfig& cfg) {
  const CaseDocument doc = load_case(cfg.case_path);
  const ExtensionDocument ext = cfg.ext_path.empty() ? ExtensionDocument{} : load_extension(cfg.ext_path);
  for (const auto& w : derive_primitives(doc, hz_to_rad(ext.base_frequency_hz)).warnings)
    fmt::print(stderr, "warning: {}\n", w);
  const MultiFrequencyNetwork net = merge(doc, ext);
  write_file(std::filesystem::path(cfg.out_dir) / "network.txt", dump_network(net));
  fmt::print("valid: {} buses, {} branches, {} generators, {} subnetworks, {} interfaces\n", net.buses.size(),
             net.branches.size(), net.generators.size(), net.subnetworks.size(), net.interfaces.size());
  return kExitOk;
}

int run_check_derivs(const RunConfig& cfg) {
  const Networks nets = load(cfg);
  const OpfProblem problem(nets.upgraded, parse_control_mode(cfg.mode));
  const DerivativeReport rep = check_derivatives(problem, problem.starting_point(), cfg.fd_step);
  fmt::print("max relative deviation {:.3e} at {}\n", rep.max_relative_deviation, rep.worst_entry);
  return rep.max_relative_deviation < cfg.deriv_threshold ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-frequency optimal power flow for low-frequency AC transmission studies."};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub, bool solver) {
    sub->add_option("--case", cfg.case_path, "Matpower case file")->required()->check(CLI::ExistingFile);
    sub->add_option("--ext", cfg.ext_path, "Multi-frequency extension document (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", cfg.out_dir,
                    "Output directory (default: $MFOPF_OUTPUT_DIR, else ./mfopf-out)");
    if (!solver) return;
    sub->add_option("--mode", cfg.mode, "Control mode: lfac, pq, f or hvdc")->capture_default_str();
    sub->add_option("--tol", cfg.tol, "KKT tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", cfg.max_iter, "Iteration limit")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--hessian", cfg.hessian, "Hessian: exact or bfgs")->capture_default_str();
    sub->add_option("--classify-tol", cfg.classify_tol, "Slack below which a limit counts as binding")
        ->capture_default_str();
  };

  auto* solve_cmd = app.add_subcommand("solve", "Solve one OPF and write report.txt");
  common(solve_cmd, true);
  solve_cmd->add_option("--trials", cfg.trials, "Repeat the solve and write timing statistics to stats.csv")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "Pin the frequency on a grid and write sweep.csv");
  common(sweep_cmd, true);
  sweep_cmd->add_option("--from", cfg.from_hz, "First frequency in Hz (default: lower range bound)");
  sweep_cmd->add_option("--to", cfg.to_hz, "Last frequency in Hz (default: upper range bound)");
  sweep_cmd->add_option("--step", cfg.step_hz, "Frequency step in Hz")->capture_default_str()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--subnetwork", cfg.subnetwork, "Sweep only this subnetwork (default: all variable ones)");
  sweep_cmd->add_option("--threads", cfg.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();

  auto* modes_cmd = app.add_subcommand("compare-modes", "Compare control modes against the baseline");
  common(modes_cmd, true);
  modes_cmd->add_option("--modes", cfg.modes, "Modes to compare")->delimiter(',')->capture_default_str();
  modes_cmd->add_option("--scenario", cfg.scenario, "Scenario label for the CSV")->capture_default_str();
  modes_cmd->add_flag("--timings", cfg.timings, "Fill the time_s column (not byte-reproducible)");

  auto* hvdc_cmd = app.add_subcommand("compare-hvdc", "Compare HVDC conversions of the flagged lines");
  common(hvdc_cmd, true);
  hvdc_cmd->add_option("--scenario", cfg.scenario, "Scenario label for the CSV")->capture_default_str();
  hvdc_cmd->add_flag("--timings", cfg.timings, "Fill the time_s column (not byte-reproducible)");

  auto* probe_cmd = app.add_subcommand("probe", "Multistart local-minimum probe over frequency windows");
  common(probe_cmd, true);
  probe_cmd->add_option("--window", cfg.windows, "Frequency window LO:HI in Hz (repeatable)")->required();
  probe_cmd->add_option("--starts", cfg.starts, "Start frequencies in Hz")->delimiter(',');

  auto* validate_cmd = app.add_subcommand("validate", "Check the case and extension, write network.txt");
  common(validate_cmd, false);

  auto* derivs_cmd = app.add_subcommand("check-derivs", "Compare derivatives with finite differences at flat start");
  common(derivs_cmd, true);
  derivs_cmd->add_option("--fd-step", cfg.fd_step, "Initial finite-difference step")->capture_default_str();
  derivs_cmd->add_option("--threshold", cfg.deriv_threshold, "Largest accepted relative deviation")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitData;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.out_dir = resolve_out_dir(cfg.out_dir);
  try {
    const std::string resolved = config_json(cfg).dump(2) + "\n";
    fmt::print(stderr, "resolved configuration:\n{}", resolved);
    write_file(std::filesystem::path(cfg.out_dir) / "config.json", resolved);

    if (cfg.command == "solve") return run_solve(cfg);
    if (cfg.command == "sweep") return run_sweep(cfg);
    if (cfg.command == "compare-modes") return run_compare_modes(cfg);
    if (cfg.command == "compare-hvdc") return run_compare_hvdc(cfg);
    if (cfg.command == "probe") return run_probe(cfg);
    if (cfg.command == "validate") return run_validate(cfg);
    return run_check_derivs(cfg);
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitSolver;
  }
}
