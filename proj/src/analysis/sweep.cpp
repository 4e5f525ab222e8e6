#include "mfopf/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace mfopf {

MultiFrequencyNetwork with_frequency_window(const MultiFrequencyNetwork& net, double lo, double hi,
                                            const std::string& subnetwork) {
  MultiFrequencyNetwork out = net;
  bool found = false;
  for (Subnetwork& sub : out.subnetworks) {
    if (!sub.is_variable() || (!subnetwork.empty() && sub.id != subnetwork)) continue;
    sub.frequency = VariableFrequency{lo, hi};
    found = true;
  }
  if (!subnetwork.empty() && !found)
    throw ConfigError("subnetwork '" + subnetwork + "' is not a variable-frequency subnetwork");
  return out;
}

std::size_t sweep_sample_count(double lo_hz, double hi_hz, double step_hz) {
  if (!(step_hz > 0.0)) throw ConfigError("sweep step must be positive");
  if (hi_hz < lo_hz) return 0;
  return static_cast<std::size_t>(std::floor((hi_hz - lo_hz) / step_hz + 1e-9)) + 1;
}

SweepCurve frequency_sweep(const MultiFrequencyNetwork& net, double lo_hz, double hi_hz, double step_hz,
                           const SweepOptions& options) {
  const std::size_t count = sweep_sample_count(lo_hz, hi_hz, step_hz);
  SweepCurve curve;
  curve.samples.resize(count);
  std::vector<Vector> solutions(count);

  auto run = [&](std::size_t k, const std::optional<Vector>& x0) {
    const double hz = lo_hz + static_cast<double>(k) * step_hz;
    const double omega = hz_to_rad(hz);
    const MultiFrequencyNetwork pinned = with_frequency_window(net, omega, omega, options.subnetwork);
    const OpfSolution sol = solve_opf(pinned, options.mode, options.solver, x0);
    SweepSample& s = curve.samples[k];
    s.omega_hz = hz;
    s.status = sol.result.status;
    s.objective = sol.result.objective;
    s.classification = classify_binding(sol, pinned, options.classify_tol);
    s.iterations = sol.result.iterations;
    s.wall_time_s = sol.result.wall_time_s;
    solutions[k] = sol.result.x;
  };

  // First pass: independent solves from the flat start.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) run(k, std::nullopt);
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (!options.retry_failures) return curve;
  std::vector<bool> ok(count);
  for (std::size_t k = 0; k < count; ++k) ok[k] = curve.samples[k].status == SolveStatus::Optimal;
  for (std::size_t k = 0; k < count; ++k) {
    if (ok[k]) continue;
    std::optional<std::size_t> nearest;
    for (std::size_t d = 1; d < count && !nearest; ++d) {
      if (k >= d && ok[k - d]) nearest = k - d;
      else if (k + d < count && ok[k + d]) nearest = k + d;
    }
    if (!nearest) break;
    run(k, solutions[*nearest]);
    curve.samples[k].retried = true;
  }
  return curve;
}

}  // namespace mfopf
