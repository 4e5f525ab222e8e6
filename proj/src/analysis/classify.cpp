#include "mfopf/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace mfopf {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Angle: return "Angle";
    case Regime::Thermal: return "Thermal";
    case Regime::VoltageDrop: return "VoltageDrop";
    case Regime::Mixed: return "Mixed";
    case Regime::Unconstrained: return "Unconstrained";
    case Regime::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

Classification classify_binding(const OpfSolution& solution, const MultiFrequencyNetwork& net, double tol) {
  Classification out;
  if (!solution.result.optimal()) {
    out.regime = Regime::Infeasible;
    return out;
  }
  bool angle = false, thermal = false, voltage = false;
  for (const BranchReport& br : solution.branches) {
    if (!net.corridor.branch_ids.contains(br.id)) continue;
    const Branch& data = net.branch(br.id);
    if (!br.dc && data.angle_max - std::abs(br.angle_diff) <= tol) {
      angle = true;
      out.binding.push_back(fmt::format("angle:{}", br.id));
    }
    const double s = std::max(std::hypot(br.p_from, br.q_from), std::hypot(br.p_to, br.q_to));
    if (data.s_max - s <= tol) {
      thermal = true;
      out.binding.push_back(fmt::format("thermal:{}", br.id));
    }
  }
  for (int id : net.corridor.bus_ids) {
    const Bus& bus = net.bus(id);
    const double v = solution.state.v.at(id);
    if (v - bus.v_min <= tol) {
      voltage = true;
      out.binding.push_back(fmt::format("vmin:{}", id));
    }
    if (bus.v_max - v <= tol) out.binding.push_back(fmt::format("vmax:{}", id));
  }
  if (thermal) out.regime = Regime::Thermal;
  else if (angle && voltage) out.regime = Regime::Mixed;
  else if (angle) out.regime = Regime::Angle;
  else if (voltage) out.regime = Regime::VoltageDrop;
  else out.regime = Regime::Unconstrained;
  return out;
}

}  // namespace mfopf
