#pragma once

#include "mfopf/formulation.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mfopf {

enum class Regime { Angle, Thermal, VoltageDrop, Mixed, Unconstrained, Infeasible };

std::string to_string(Regime regime);

struct Classification {
  Regime regime = Regime::Unconstrained;
  /// Binding corridor limits, e.g. "angle:5", "thermal:5", "vmin:6", "vmax:5".
  std::vector<std::string> binding;
};

/// Labels which corridor limits bind at a solution. A limit binds when its
/// slack is at most `tol` (radians, per-unit apparent power, per-unit
/// voltage). Thermal binding wins over the other categories; angle and
/// voltage binding together without a thermal limit is Mixed. Upper voltage
/// limits are listed but do not define a regime.
Classification classify_binding(const OpfSolution& solution, const MultiFrequencyNetwork& net, double tol = 1e-6);

/// Copy of the network with every variable subnetwork (or only `subnetwork`
/// when non-empty) restricted to [lo, hi] rad/s.
MultiFrequencyNetwork with_frequency_window(const MultiFrequencyNetwork& net, double lo, double hi,
                                            const std::string& subnetwork = {});

struct SweepOptions {
  std::string subnetwork;  // empty: pin all variable subnetworks together
  ControlMode mode = ControlMode::lfac();
  SolverOptions solver;
  double classify_tol = 1e-6;
  unsigned threads = 0;  // 0: hardware concurrency
  bool retry_failures = true;
};

struct SweepSample {
  double omega_hz = 0.0;
  SolveStatus status = SolveStatus::NumericalError;
  double objective = 0.0;
  Classification classification;
  int iterations = 0;
  double wall_time_s = 0.0;
  bool retried = false;
};

struct SweepCurve {
  std::vector<SweepSample> samples;  // strictly increasing omega
};

/// Number of samples lo, lo + step, ... not exceeding hi (with a small
/// rounding allowance).
std::size_t sweep_sample_count(double lo_hz, double hi_hz, double step_hz);

/// Solves the OPF with frequencies pinned at each sample. Samples run
/// concurrently from the flat start; failed samples are retried once from the
/// solution of the nearest successful sample.
SweepCurve frequency_sweep(const MultiFrequencyNetwork& net, double lo_hz, double hi_hz, double step_hz,
                           const SweepOptions& options = {});

struct ComparisonRow {
  std::string scenario;
  std::string mode;
  SolveStatus status = SolveStatus::NumericalError;
  double objective = 0.0;
  double improvement_pct = 0.0;
  std::vector<double> omega_opt_hz;  // per ComparisonTable::subnetworks
  int iterations = 0;
  double time_s = 0.0;
};

struct ComparisonTable {
  std::vector<std::string> subnetworks;  // variable subnetworks of the upgraded network
  std::vector<ComparisonRow> rows;
  std::vector<std::string> warnings;  // ordering checks that did not hold
};

/// Percent cost reduction relative to the baseline.
double improvement_pct(double baseline, double objective);

/// One baseline row followed by one row per mode on the upgraded network.
ComparisonTable compare_modes(const MultiFrequencyNetwork& upgraded, const MultiFrequencyNetwork& baseline,
                              const std::vector<ControlMode>& modes, const std::string& scenario = "default",
                              const SolverOptions& options = {}, double order_tol = 1e-6);

/// Default (k_cond, k_ins) grid: (2/3,1), (2/3,sqrt 2), (1,1), (1,sqrt 2).
std::vector<std::pair<double, double>> default_hvdc_grid();

/// One baseline row followed by one HVDC row per (k_cond, k_ins).
ComparisonTable compare_hvdc(const MultiFrequencyNetwork& upgraded, const MultiFrequencyNetwork& baseline,
                             const std::vector<std::pair<double, double>>& k_grid = default_hvdc_grid(),
                             const std::string& scenario = "default", const SolverOptions& options = {},
                             double order_tol = 1e-6);

struct ProbeRun {
  double start_hz = 0.0;
  SolveStatus status = SolveStatus::NumericalError;
  double objective = 0.0;
  double omega_hz = 0.0;
  int iterations = 0;
};

struct ProbeWindow {
  double lo_hz = 0.0, hi_hz = 0.0;
  std::vector<ProbeRun> runs;
  std::optional<std::size_t> best;
};

struct ProbeReport {
  ProbeWindow full;                  // the network's own frequency range
  std::vector<ProbeWindow> windows;  // restricted ranges
  std::optional<double> window_minimum;
  double relative_gap = 0.0;  // (full - window minimum) / |window minimum|
  bool consistent = false;    // |relative_gap| <= tol
};

/// Solves the variable-frequency OPF over the full range and over each
/// window, from every start frequency that lies inside the range, and checks
/// that the full-range optimum matches the best windowed optimum.
ProbeReport local_minima_probe(const MultiFrequencyNetwork& net, const std::vector<std::pair<double, double>>& windows_hz,
                               const std::vector<double>& starts_hz, const SolverOptions& options = {},
                               double tol = 1e-6, const ControlMode& mode = ControlMode::lfac());

struct SolverStats {
  int trials = 0;
  double time_mean = 0.0, time_max = 0.0, time_std = 0.0;
  double iter_mean = 0.0, iter_max = 0.0, iter_std = 0.0;
  bool all_optimal = true;
};

/// Repeats one solve `trials` times and aggregates wall time and iterations.
SolverStats solver_stats(const MultiFrequencyNetwork& net, const ControlMode& mode, int trials,
                         const SolverOptions& options = {});

// Report writers. CSV column schemas are version 1:
//   sweep:      omega_hz,objective,status,regime,binding_ids
//   comparison: scenario,mode,objective,improvement_pct,omega_opt_hz_<sub>...,iters,time_s
//   probe:      window,lo_hz,hi_hz,start_hz,status,objective,omega_hz,iters
// Numbers use fixed formatting so identical runs give identical bytes;
// time_s is left empty unless `timings` is set.

std::string sweep_csv(const SweepCurve& curve);
std::string comparison_csv(const ComparisonTable& table, bool timings = false);
std::string probe_csv(const ProbeReport& report);
/// Human-readable summary of one solution: status, objective, frequencies,
/// dispatch, binding limits and converter losses.
std::string solution_report(const OpfSolution& solution, const MultiFrequencyNetwork& net, double classify_tol = 1e-6);

/// Writes text to a file, creating parent directories. Throws
/// std::runtime_error when the destination is not writable.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mfopf
