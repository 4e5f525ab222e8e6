#include "mfopf/analysis.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mfopf {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return {};
  return fmt::format("{:.10g}", v);
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string sweep_csv(const SweepCurve& curve) {
  std::string out = "omega_hz,objective,status,regime,binding_ids\n";
  for (const SweepSample& s : curve.samples) {
    const bool ok = s.status == SolveStatus::Optimal;
    out += fmt::format("{},{},{},{},{}\n", num(s.omega_hz), ok ? num(s.objective) : "", to_string(s.status),
                       to_string(s.classification.regime), fmt::join(s.classification.binding, ";"));
  }
  return out;
}

std::string comparison_csv(const ComparisonTable& table, bool timings) {
  std::string out = "scenario,mode,objective,improvement_pct";
  for (const std::string& s : table.subnetworks) out += ",omega_opt_hz_" + s;
  out += ",iters,time_s\n";
  for (const ComparisonRow& r : table.rows) {
    const bool ok = r.status == SolveStatus::Optimal;
    out += fmt::format("{},{},{},{}", quoted(r.scenario), quoted(r.mode), ok ? num(r.objective) : "",
                       ok ? num(r.improvement_pct) : "");
    for (double w : r.omega_opt_hz) out += "," + (ok ? num(w) : std::string{});
    out += fmt::format(",{},{}\n", r.iterations, timings ? num(r.time_s) : "");
  }
  return out;
}

std::string probe_csv(const ProbeReport& report) {
  std::string out = "window,lo_hz,hi_hz,start_hz,status,objective,omega_hz,iters\n";
  auto emit = [&](const std::string& name, const ProbeWindow& w) {
    for (const ProbeRun& r : w.runs) {
      const bool ok = r.status == SolveStatus::Optimal;
      out += fmt::format("{},{},{},{},{},{},{},{}\n", name, num(w.lo_hz), num(w.hi_hz), num(r.start_hz),
                         to_string(r.status), ok ? num(r.objective) : "", ok ? num(r.omega_hz) : "", r.iterations);
    }
  };
  emit("full", report.full);
  for (std::size_t i = 0; i < report.windows.size(); ++i) emit(fmt::format("w{}", i), report.windows[i]);
  return out;
}

std::string solution_report(const OpfSolution& solution, const MultiFrequencyNetwork& net, double classify_tol) {
  const SolveResult& r = solution.result;
  std::string out = fmt::format("status: {}\niterations: {}\nobjective: {:.10g}\n", to_string(r.status), r.iterations,
                                r.objective);
  out += fmt::format("kkt: primal {:.3e} stationarity {:.3e} complementarity {:.3e}\n", r.kkt.primal, r.kkt.stationarity,
                     r.kkt.complementarity);
  if (!r.message.empty()) out += "message: " + r.message + "\n";
  out += "frequencies:\n";
  for (const auto& [sub, omega] : solution.state.omega) out += fmt::format("  {}: {:.6f} Hz\n", sub, rad_to_hz(omega));
  out += "generators:\n";
  for (const Generator& g : net.generators) {
    if (!g.in_service) continue;
    out += fmt::format("  gen {} at bus {}: p {:.6f} q {:.6f}\n", g.id, g.bus, solution.state.p_gen.at(g.id),
                       solution.state.q_gen.at(g.id));
  }
  out += "branches:\n";
  for (const BranchReport& b : solution.branches)
    out += fmt::format("  branch {}{}: from {:.6f}{:+.6f}j to {:.6f}{:+.6f}j angle {:.6f}\n", b.id, b.dc ? " (dc)" : "",
                       b.p_from, b.q_from, b.p_to, b.q_to, b.angle_diff);
  if (!solution.converters.empty()) {
    out += "converters:\n";
    for (const ConverterReport& c : solution.converters)
      out += fmt::format("  {}:{} at bus {}: p {:.6f} q {:.6f} v {:.6f} i_rms^2 {:.6f} loss {:.6f}\n", c.interface,
                         c.terminal, c.bus, c.p, c.q, c.v, c.i_rms_sq, c.loss);
  }
  if (r.optimal() && !net.corridor.branch_ids.empty()) {
    const Classification cls = classify_binding(solution, net, classify_tol);
    out += fmt::format("regime: {}\nbinding: {}\n", to_string(cls.regime), fmt::join(cls.binding, " "));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("error writing {}", path.string()));
}

}  // namespace mfopf
