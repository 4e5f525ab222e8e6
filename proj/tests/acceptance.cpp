// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "fixtures.hpp"
#include "mfopf/analysis.hpp"
#include "power_flow_oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

using namespace mfopf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED: ") + what);
  }
  void note(const std::string& what) { notes.push_back(what); }
};

struct Instance {
  std::string case_file, ext_file;
  std::vector<ControlMode> modes;
};

// Every bundled case / extension pair with the control modes it supports.
std::vector<Instance> bundled_instances() {
  const std::vector<ControlMode> ac = {ControlMode::lfac(), ControlMode::pq(), ControlMode::fopf()};
  std::vector<ControlMode> all = ac;
  all.push_back(ControlMode::hvdc());
  return {{"two_bus.m", "", {ControlMode::lfac()}},
          {"three_bus.m", "", {ControlMode::lfac()}},
          {"three_bus_radial.m", "", {ControlMode::lfac()}},
          {"three_bus_radial.m", "three_bus_radial_converter.json", ac},
          {"corridor.m", "corridor_lfac.json", all},
          {"corridor.m", "corridor_lfac_lossy.json", all},
          {"corridor_uncongested.m", "corridor_uncongested.json", ac}};
}

std::string name(const Instance& in, const ControlMode& mode) {
  return fmt::format("{}{}{} [{}]", in.case_file, in.ext_file.empty() ? "" : "+", in.ext_file, to_string(mode));
}

// 1. Fixed-frequency objective against the brute-force power flow oracle.
Outcome criterion_1() {
  Outcome o;
  for (const char* c : {"two_bus.m", "three_bus.m"}) {
    const auto t0 = Clock::now();
    const auto sol = solve_opf(fixtures::network(c), ControlMode::lfac());
    const auto ref = oracle::brute_force_opf(oracle::read_matpower(fixtures::data(c)), 1e-4);
    const double t = seconds_since(t0);
    if (!sol.result.optimal() || !ref.found) {
      o.require(false, fmt::format("{}: engine {} oracle {}", c, to_string(sol.result.status), ref.found));
      continue;
    }
    const double pct = 100.0 * rel(sol.result.objective, ref.cost);
    o.require(pct <= 1e-3 && t < 60.0,
              fmt::format("{}: engine {:.6f} oracle {:.6f} diff {:.2e} % ({} power flows, {:.1f} s)", c,
                          sol.result.objective, ref.cost, pct, ref.power_flows, t));
  }
  return o;
}

// 2. Analytic derivatives against central differences at the flat start.
Outcome criterion_2() {
  Outcome o;
  double worst = 0.0;
  std::string where;
  int count = 0;
  for (const auto& in : bundled_instances()) {
    const auto net = fixtures::network(in.case_file, in.ext_file);
    for (const auto& mode : in.modes) {
      const OpfProblem p(net, mode);
      const auto rep = check_derivatives(p, p.starting_point());
      ++count;
      if (rep.max_relative_deviation >= 1e-6)
        o.require(false, fmt::format("{}: {:.2e} at {}", name(in, mode), rep.max_relative_deviation, rep.worst_entry));
      if (rep.max_relative_deviation > worst) {
        worst = rep.max_relative_deviation;
        where = name(in, mode) + " " + rep.worst_entry;
      }
    }
  }
  o.note(fmt::format("{} instances, worst {:.2e} ({})", count, worst, where));
  return o;
}

// 3. Frequency-only control through a lossless converter is transparent.
Outcome criterion_3() {
  Outcome o;
  SolverOptions opt;
  opt.tol_kkt = 1e-10;
  const auto with = solve_opf(fixtures::network("three_bus_radial.m", "three_bus_radial_converter.json"),
                              ControlMode::fopf(), opt);
  const auto without = solve_opf(fixtures::network("three_bus_radial.m"), ControlMode::lfac(), opt);
  o.require(with.result.optimal() && without.result.optimal(), "both solves optimal");
  const double r = rel(with.result.objective, without.result.objective);
  o.require(r <= 1e-8, fmt::format("FOpf {:.10f} vs converter-free {:.10f}, relative {:.2e}", with.result.objective,
                                   without.result.objective, r));
  return o;
}

struct Band {
  Regime regime;
  std::size_t first, last;  // sample indices, inclusive
};

// Runs of equal labels, scanned from the highest frequency down.
std::vector<Band> bands_descending(const SweepCurve& c) {
  std::vector<Band> out;
  for (std::size_t k = c.samples.size(); k-- > 0;) {
    const Regime r = c.samples[k].classification.regime;
    if (!out.empty() && out.back().regime == r) out.back().first = k;
    else out.push_back({r, k, k});
  }
  return out;
}

std::size_t argmin(const SweepCurve& c) {
  std::size_t best = 0;
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c.samples.size(); ++k)
    if (c.samples[k].status == SolveStatus::Optimal && c.samples[k].objective < v) {
      v = c.samples[k].objective;
      best = k;
    }
  return best;
}

struct Corridor {
  MultiFrequencyNetwork net, lossy, baseline;
  SweepCurve sweep;
  double sweep_seconds = 0.0;
};

Corridor& corridor() {
  static Corridor c = [] {
    Corridor c;
    c.net = fixtures::network("corridor.m", "corridor_lfac.json");
    c.lossy = fixtures::network("corridor.m", "corridor_lfac_lossy.json");
    c.baseline = fixtures::baseline("corridor.m", "corridor_lfac.json");
    const auto t0 = Clock::now();
    c.sweep = frequency_sweep(c.net, 1.0, 50.0, 0.5);
    c.sweep_seconds = seconds_since(t0);
    return c;
  }();
  return c;
}

// 4. Angle, thermal and voltage-drop bands of the corridor sweep.
Outcome criterion_4() {
  Outcome o;
  const auto& c = corridor();
  const auto& s = c.sweep.samples;
  const bool all_optimal =
      std::all_of(s.begin(), s.end(), [](const SweepSample& x) { return x.status == SolveStatus::Optimal; });
  o.require(all_optimal && s.size() == 99, fmt::format("{} samples, all optimal: {}", s.size(), all_optimal));
  const auto bands = bands_descending(c.sweep);
  std::string layout;
  for (const auto& b : bands)
    layout += fmt::format("{}{}[{:g}-{:g} Hz]", layout.empty() ? "" : " > ", to_string(b.regime),
                          s[b.last].omega_hz, s[b.first].omega_hz);
  const bool shape = bands.size() == 3 && bands[0].regime == Regime::Angle && bands[1].regime == Regime::Thermal &&
                     bands[2].regime == Regime::VoltageDrop;
  o.require(shape, "bands by decreasing frequency: " + layout);
  if (!shape) return o;
  const std::size_t best = argmin(c.sweep);
  o.require(best >= bands[1].first && best <= bands[1].last,
            fmt::format("minimum {:.6f} at {:g} Hz lies in the thermal band", s[best].objective, s[best].omega_hz));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = bands[1].first; k <= bands[1].last; ++k) {
    lo = std::min(lo, s[k].objective);
    hi = std::max(hi, s[k].objective);
  }
  const double variation = 100.0 * (hi - lo) / lo;
  o.require(variation < 1.0, fmt::format("thermal band variation {:.3f} %", variation));
  o.require(c.sweep_seconds < 600.0, fmt::format("sweep time {:.1f} s", c.sweep_seconds));
  return o;
}

// 5. The variable-frequency optimum matches the sweep.
Outcome criterion_5() {
  Outcome o;
  const auto& c = corridor();
  const auto sol = solve_opf(c.net, ControlMode::lfac());
  o.require(sol.result.optimal(), "LfacOpf optimal");
  if (!sol.result.optimal()) return o;
  const double w = rad_to_hz(sol.state.omega.at("lfac"));
  const auto& best = c.sweep.samples[argmin(c.sweep)];
  o.require(std::abs(w - best.omega_hz) <= 0.5 + 1e-9,
            fmt::format("LfacOpf at {:.4f} Hz, sweep argmin {:g} Hz", w, best.omega_hz));
  const double r = rel(sol.result.objective, best.objective);
  o.require(r <= 1e-4, fmt::format("objective {:.6f} vs sweep minimum {:.6f}, relative {:.2e}", sol.result.objective,
                                   best.objective, r));
  // Finer re-sweep around the optimum as an independent reference.
  const auto dense = frequency_sweep(c.net, 1.0, 50.0, 0.05);
  const auto& d = dense.samples[argmin(dense)];
  o.note(fmt::format("0.05 Hz re-sweep argmin {:.2f} Hz, objective {:.6f}", d.omega_hz, d.objective));
  o.require(std::abs(w - d.omega_hz) <= 0.05 + 1e-9 && sol.result.objective <= d.objective * (1.0 + 1e-9),
            "LfacOpf within one fine step of the re-sweep argmin and no worse than its minimum");
  return o;
}

// 6. Cost ordering of the control modes.
Outcome criterion_6() {
  Outcome o;
  const auto& c = corridor();
  const auto t = compare_modes(c.net, c.baseline, {ControlMode::lfac(), ControlMode::pq(), ControlMode::fopf()});
  std::map<std::string, double> obj;
  for (const auto& r : t.rows) {
    o.require(r.status == SolveStatus::Optimal, fmt::format("{} {}", r.mode, to_string(r.status)));
    obj[r.mode] = r.objective;
  }
  const double base = obj["baseline"], lfac = obj["lfac"], pq = obj["pq"], f = obj["f"];
  const double eps = 1e-9 * std::max(1.0, std::abs(base));
  o.require(lfac <= pq + eps, fmt::format("lfac {:.6f} <= pq {:.6f} (margin {:.6f})", lfac, pq, pq - lfac));
  o.require(pq <= base + eps, fmt::format("pq {:.6f} <= baseline {:.6f} (margin {:.6f})", pq, base, base - pq));
  o.require(lfac <= f + eps, fmt::format("lfac {:.6f} <= f {:.6f} (margin {:.6f})", lfac, f, f - lfac));

  const auto un = compare_modes(fixtures::network("corridor_uncongested.m", "corridor_uncongested.json"),
                                fixtures::baseline("corridor_uncongested.m", "corridor_uncongested.json"),
                                {ControlMode::fopf()});
  const bool ok = un.rows.size() == 2 && un.rows[0].status == SolveStatus::Optimal &&
                  un.rows[1].status == SolveStatus::Optimal;
  o.require(ok && std::abs(un.rows[1].improvement_pct) <= 1e-6,
            fmt::format("uncongested FOpf improvement {:.2e} %", ok ? un.rows[1].improvement_pct : std::nan("")));
  return o;
}

// 7. HVDC capacity factors.
Outcome criterion_7() {
  Outcome o;
  const auto& c = corridor();
  const auto grid = default_hvdc_grid();
  const auto t = compare_hvdc(c.net, c.baseline, grid);
  std::vector<std::pair<double, double>> by_k;  // (k_cond k_ins^2, objective)
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& r = t.rows[k + 1];
    o.require(r.status == SolveStatus::Optimal, fmt::format("{} {:.6f}", r.mode, r.objective));
    by_k.emplace_back(grid[k].first * grid[k].second * grid[k].second, r.objective);
  }
  std::sort(by_k.begin(), by_k.end());
  bool monotone = true;
  for (std::size_t k = 1; k < by_k.size(); ++k)
    monotone = monotone && by_k[k].second <= by_k[k - 1].second + 1e-9 * std::abs(by_k[k - 1].second);
  o.require(monotone, "objective nonincreasing in k_cond k_ins^2");
  const auto lfac = solve_opf(c.net, ControlMode::lfac());
  const double lowest_k = t.rows[1].objective, highest_k = by_k.back().second;
  o.require(lfac.result.optimal() && lfac.result.objective <= lowest_k,
            fmt::format("lfac {:.6f} <= hvdc(2/3,1) {:.6f}", lfac.result.objective, lowest_k));
  o.note(fmt::format("lfac vs highest-capacity hvdc {:.6f}: {:+.3f} %", highest_k,
                     100.0 * (lfac.result.objective - highest_k) / highest_k));
  return o;
}

// 8. Converter losses never reduce cost; no-load loss is the constant switching term.
Outcome criterion_8() {
  Outcome o;
  const auto& c = corridor();
  const auto lossy = frequency_sweep(c.lossy, 1.0, 50.0, 0.5);
  int common = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lossy.samples.size(); ++k) {
    const auto& a = lossy.samples[k];
    const auto& b = c.sweep.samples[k];
    if (a.status != SolveStatus::Optimal || b.status != SolveStatus::Optimal) continue;
    ++common;
    min_gap = std::min(min_gap, a.objective - b.objective);
  }
  o.require(common > 0 && min_gap >= 0.0,
            fmt::format("{} common samples, min(lossy - lossless) {:.6f}", common, min_gap));
  for (const auto& iface : c.lossy.interfaces) {
    if (!iface.losses_enabled) continue;
    for (const auto& term : iface.terminals) {
      const double loss = terminal_loss(arm_currents(0.0, 0.0, 1.0, iface.modulation_index), iface.losses);
      o.require(loss == 6.0 * iface.losses.s3,
                fmt::format("{} bus {}: zero-power loss {:.6g} = 6 s3 {:.6g}", iface.id, term.bus, loss,
                            6.0 * iface.losses.s3));
    }
  }
  return o;
}

// 9. Solve time and iteration envelope.
Outcome criterion_9() {
  Outcome o;
  for (const auto& in : bundled_instances()) {
    const auto net = fixtures::network(in.case_file, in.ext_file);
    for (const auto& mode : in.modes) {
      const auto st = solver_stats(net, mode, 5);
      const bool ok = st.all_optimal && st.time_max < 60.0 && st.iter_max < 3000;
      o.require(ok, fmt::format("{}: time mean/max/std {:.3f}/{:.3f}/{:.3f} s, iterations mean/max/std "
                                "{:.1f}/{:g}/{:.1f}",
                                name(in, mode), st.time_mean, st.time_max, st.time_std, st.iter_mean, st.iter_max,
                                st.iter_std));
    }
  }
  return o;
}

// 10. Repeated command-line runs give identical CSV bytes.
Outcome criterion_10() {
  Outcome o;
  const std::string cs = "--case '" + fixtures::data("corridor.m").string() + "' --ext '" +
                         fixtures::data("corridor_lfac.json").string() + "'";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"sweep " + cs + " --from 1 --to 50 --step 0.5", "sweep.csv"},
      {"sweep " + cs + " --from 1 --to 50 --step 0.5 --threads 1", "sweep.csv"},
      {"compare-modes " + cs, "comparison.csv"},
      {"compare-hvdc " + cs, "hvdc.csv"},
      {"probe " + cs + " --window 1:10 --window 10:25 --window 25:50 --starts 5,15,40", "probe.csv"},
  };
  std::map<std::string, std::string> first_sweep;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    const auto& [args, file] = commands[k];
    std::string bytes[2];
    bool ran = true;
    for (int run = 0; run < 2; ++run) {
      const auto dir = fixtures::scratch(fmt::format("acceptance_{}_{}", k, run));
      ran = ran && fixtures::run_cli(args + " --out '" + dir.string() + "'", dir / "log.txt") == 0;
      bytes[run] = fixtures::slurp(dir / file);
    }
    o.require(ran && !bytes[0].empty() && bytes[0] == bytes[1],
              fmt::format("{} ({} bytes) from: {}", file, bytes[0].size(), args.substr(0, args.find(' '))));
    if (file == "sweep.csv") {
      if (first_sweep.empty()) first_sweep[file] = bytes[0];
      else o.require(first_sweep[file] == bytes[0], "sweep.csv independent of thread count");
    }
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                          criterion_5, criterion_6, criterion_7, criterion_8,
                                                          criterion_9, criterion_10};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    fmt::print("criterion {}: {} ({:.1f} s)\n", k + 1, o.pass ? "PASS" : "FAIL", seconds_since(t0));
    for (const auto& n : o.notes) fmt::print("    {}\n", n);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
