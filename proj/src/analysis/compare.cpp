#include "mfopf/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfopf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> variable_subnetworks(const MultiFrequencyNetwork& net) {
  std::vector<std::string> out;
  for (const Subnetwork& s : net.subnetworks)
    if (s.is_variable()) out.push_back(s.id);
  return out;
}

ComparisonRow make_row(const std::string& scenario, const std::string& mode, const OpfSolution& sol,
                       const std::vector<std::string>& subs) {
  ComparisonRow row;
  row.scenario = scenario;
  row.mode = mode;
  row.status = sol.result.status;
  row.objective = sol.result.objective;
  row.iterations = sol.result.iterations;
  row.time_s = sol.result.wall_time_s;
  for (const std::string& s : subs) {
    auto it = sol.state.omega.find(s);
    row.omega_opt_hz.push_back(it == sol.state.omega.end() ? kNaN : rad_to_hz(it->second));
  }
  return row;
}

bool leq(double a, double b, double tol) { return a <= b + tol * std::max(1.0, std::abs(b)); }

void check_order(ComparisonTable& t, const std::string& lhs, const std::string& rhs, double tol) {
  const ComparisonRow* a = nullptr;
  const ComparisonRow* b = nullptr;
  for (const auto& r : t.rows) {
    if (r.mode == lhs) a = &r;
    if (r.mode == rhs) b = &r;
  }
  if (!a || !b || a->status != SolveStatus::Optimal || b->status != SolveStatus::Optimal) return;
  if (!leq(a->objective, b->objective, tol))
    t.warnings.push_back(fmt::format("objective({}) = {:.10g} exceeds objective({}) = {:.10g}; likely a local optimum",
                                     lhs, a->objective, rhs, b->objective));
}

void fill_improvement(ComparisonTable& t) {
  const ComparisonRow& base = t.rows.front();
  for (ComparisonRow& r : t.rows) {
    const bool usable = base.status == SolveStatus::Optimal && r.status == SolveStatus::Optimal;
    r.improvement_pct = usable ? improvement_pct(base.objective, r.objective) : kNaN;
  }
}

}  // namespace

double improvement_pct(double baseline, double objective) {
  if (baseline == 0.0) return objective == 0.0 ? 0.0 : kNaN;
  return 100.0 * (baseline - objective) / baseline;
}

ComparisonTable compare_modes(const MultiFrequencyNetwork& upgraded, const MultiFrequencyNetwork& baseline,
                              const std::vector<ControlMode>& modes, const std::string& scenario,
                              const SolverOptions& options, double order_tol) {
  ComparisonTable t;
  t.subnetworks = variable_subnetworks(upgraded);
  t.rows.push_back(make_row(scenario, "baseline", solve_opf(baseline, ControlMode::lfac(), options), t.subnetworks));
  for (const ControlMode& mode : modes)
    t.rows.push_back(make_row(scenario, to_string(mode), solve_opf(upgraded, mode, options), t.subnetworks));
  fill_improvement(t);
  check_order(t, "lfac", "pq", order_tol);
  check_order(t, "pq", "baseline", order_tol);
  check_order(t, "lfac", "baseline", order_tol);
  check_order(t, "lfac", "f", order_tol);
  for (const auto& r : t.rows)
    if (r.status != SolveStatus::Optimal) t.warnings.push_back(fmt::format("mode {}: {}", r.mode, to_string(r.status)));
  return t;
}

std::vector<std::pair<double, double>> default_hvdc_grid() {
  return {{2.0 / 3.0, 1.0}, {2.0 / 3.0, std::sqrt(2.0)}, {1.0, 1.0}, {1.0, std::sqrt(2.0)}};
}

ComparisonTable compare_hvdc(const MultiFrequencyNetwork& upgraded, const MultiFrequencyNetwork& baseline,
                             const std::vector<std::pair<double, double>>& k_grid, const std::string& scenario,
                             const SolverOptions& options, double order_tol) {
  ComparisonTable t;
  t.subnetworks = variable_subnetworks(upgraded);
  t.rows.push_back(make_row(scenario, "baseline", solve_opf(baseline, ControlMode::lfac(), options), t.subnetworks));
  std::vector<std::pair<double, std::size_t>> by_capacity;
  for (const auto& [kc, ki] : k_grid) {
    const ControlMode mode = ControlMode::hvdc(kc, ki);
    by_capacity.emplace_back(kc * ki * ki, t.rows.size());
    t.rows.push_back(make_row(scenario, to_string(mode), solve_opf(upgraded, mode, options), t.subnetworks));
  }
  fill_improvement(t);
  std::stable_sort(by_capacity.begin(), by_capacity.end());
  for (std::size_t i = 1; i < by_capacity.size(); ++i) {
    const ComparisonRow& lo = t.rows[by_capacity[i - 1].second];
    const ComparisonRow& hi = t.rows[by_capacity[i].second];
    if (lo.status != SolveStatus::Optimal || hi.status != SolveStatus::Optimal) continue;
    if (!leq(hi.objective, lo.objective, order_tol))
      t.warnings.push_back(fmt::format("objective({}) = {:.10g} exceeds objective({}) = {:.10g}", hi.mode, hi.objective,
                                       lo.mode, lo.objective));
  }
  for (const auto& r : t.rows)
    if (r.status != SolveStatus::Optimal) t.warnings.push_back(fmt::format("mode {}: {}", r.mode, to_string(r.status)));
  return t;
}

namespace {

ProbeWindow probe_window(const MultiFrequencyNetwork& net, double lo_hz, double hi_hz,
                         const std::vector<double>& starts_hz, const SolverOptions& options, const ControlMode& mode) {
  ProbeWindow w;
  w.lo_hz = lo_hz;
  w.hi_hz = hi_hz;
  OpfProblem problem(net, mode);
  std::vector<double> starts;
  for (double s : starts_hz)
    if (s >= lo_hz && s <= hi_hz) starts.push_back(s);
  if (starts.empty()) starts.push_back(0.5 * (lo_hz + hi_hz));
  for (double s : starts) {
    Vector x0 = problem.starting_point();
    for (const Subnetwork& sub : net.subnetworks)
      if (auto idx = problem.omega_index(sub.id)) x0[*idx] = hz_to_rad(s) / net.base_omega;
    const OpfSolution sol = extract_solution(problem, solve(problem, options, x0));
    ProbeRun run{s, sol.result.status, sol.result.objective, kNaN, sol.result.iterations};
    for (const Subnetwork& sub : net.subnetworks)
      if (sub.is_variable()) {
        run.omega_hz = rad_to_hz(sol.state.omega.at(sub.id));
        break;
      }
    if (run.status == SolveStatus::Optimal && (!w.best || run.objective < w.runs[*w.best].objective))
      w.best = w.runs.size();
    w.runs.push_back(run);
  }
  return w;
}

}  // namespace

ProbeReport local_minima_probe(const MultiFrequencyNetwork& net, const std::vector<std::pair<double, double>>& windows_hz,
                               const std::vector<double>& starts_hz, const SolverOptions& options, double tol,
                               const ControlMode& mode) {
  if (windows_hz.empty()) throw ConfigError("local minima probe needs at least one window");
  ProbeReport report;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Subnetwork& sub : net.subnetworks) {
    if (!sub.is_variable()) continue;
    const auto [a, b] = sub.omega_range();
    lo = std::min(lo, rad_to_hz(a));
    hi = std::max(hi, rad_to_hz(b));
  }
  if (hi == 0.0) throw ConfigError("local minima probe needs a variable-frequency subnetwork");
  report.full = probe_window(net, lo, hi, starts_hz, options, mode);
  for (const auto& [wlo, whi] : windows_hz) {
    const MultiFrequencyNetwork windowed = with_frequency_window(net, hz_to_rad(wlo), hz_to_rad(whi));
    report.windows.push_back(probe_window(windowed, wlo, whi, starts_hz, options, mode));
    const ProbeWindow& w = report.windows.back();
    if (w.best && (!report.window_minimum || w.runs[*w.best].objective < *report.window_minimum))
      report.window_minimum = w.runs[*w.best].objective;
  }
  if (report.full.best && report.window_minimum) {
    const double full = report.full.runs[*report.full.best].objective;
    report.relative_gap = (full - *report.window_minimum) / std::max(1e-12, std::abs(*report.window_minimum));
    report.consistent = std::abs(report.relative_gap) <= tol;
  }
  return report;
}

SolverStats solver_stats(const MultiFrequencyNetwork& net, const ControlMode& mode, int trials,
                         const SolverOptions& options) {
  if (trials < 1) throw ConfigError("solver statistics need at least one trial");
  SolverStats st;
  st.trials = trials;
  std::vector<double> times, iters;
  const OpfProblem problem(net, mode);
  for (int t = 0; t < trials; ++t) {
    const SolveResult r = solve(problem, options);
    st.all_optimal = st.all_optimal && r.optimal();
    times.push_back(r.wall_time_s);
    iters.push_back(r.iterations);
  }
  auto summarize = [](const std::vector<double>& v, double& mean, double& max, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    max = *std::max_element(v.begin(), v.end());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(v.size()));
  };
  summarize(times, st.time_mean, st.time_max, st.time_std);
  summarize(iters, st.iter_mean, st.iter_max, st.iter_std);
  return st;
}

}  // namespace mfopf
