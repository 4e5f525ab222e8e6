#include "mfopf/network.hpp"

#include <algorithm>
#include <limits>
#include <fmt/format.h>

namespace mfopf {

std::pair<double, double> Subnetwork::omega_range() const {
  if (const auto* fixed = std::get_if<FixedFrequency>(&frequency)) return {fixed->omega, fixed->omega};
  const auto& var = std::get<VariableFrequency>(frequency);
  return {var.omega_min, var.omega_max};
}

const Bus& MultiFrequencyNetwork::bus(int id) const {
  auto it = std::find_if(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
  if (it == buses.end()) throw DataError(fmt::format("unknown bus {}", id));
  return *it;
}

const Branch& MultiFrequencyNetwork::branch(int id) const {
  auto it = std::find_if(branches.begin(), branches.end(), [id](const Branch& b) { return b.id == id; });
  if (it == branches.end()) throw DataError(fmt::format("unknown branch {}", id));
  return *it;
}

const Subnetwork& MultiFrequencyNetwork::subnetwork(const std::string& id) const {
  auto it = std::find_if(subnetworks.begin(), subnetworks.end(),
                         [&id](const Subnetwork& s) { return s.id == id; });
  if (it == subnetworks.end()) throw DataError(fmt::format("unknown subnetwork {}", id));
  return *it;
}

std::string MultiFrequencyNetwork::subnetwork_of_bus(int bus_id) const {
  for (const auto& sub : subnetworks)
    if (sub.bus_ids.contains(bus_id)) return sub.id;
  return {};
}

double evaluate_cost(const CostFunction& cost, double p) {
  if (const auto* poly = std::get_if<PolynomialCost>(&cost)) {
    double value = 0.0;
    for (auto it = poly->coefficients.rbegin(); it != poly->coefficients.rend(); ++it) value = value * p + *it;
    return value;
  }
  const auto& pts = std::get<PiecewiseLinearCost>(cost).points;
  if (pts.size() < 2) throw DataError("piecewise-linear cost needs at least two breakpoints");
  std::size_t k = 0;
  while (k + 2 < pts.size() && p > pts[k + 1].first) ++k;
  const auto [p0, c0] = pts[k];
  const auto [p1, c1] = pts[k + 1];
  return c0 + (c1 - c0) * (p - p0) / (p1 - p0);
}

namespace {

class Collector {
 public:
  void add(std::string entity, std::string rule) { out_.push_back({std::move(entity), std::move(rule)}); }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

bool finite(double v) { return std::isfinite(v); }

void check_cost(const Generator& gen, Collector& c) {
  const std::string who = fmt::format("generator {}", gen.id);
  if (const auto* poly = std::get_if<PolynomialCost>(&gen.cost)) {
    if (poly->coefficients.size() > 3) c.add(who, "polynomial cost degree exceeds 2");
    return;
  }
  const auto& pts = std::get<PiecewiseLinearCost>(gen.cost).points;
  if (pts.size() < 2) {
    c.add(who, "piecewise-linear cost needs at least two breakpoints");
    return;
  }
  double last_slope = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double dp = pts[k + 1].first - pts[k].first;
    if (!(dp > 0.0)) {
      c.add(who, "piecewise-linear breakpoints must have increasing power");
      return;
    }
    const double slope = (pts[k + 1].second - pts[k].second) / dp;
    if (slope < last_slope - 1e-12 * std::max(1.0, std::abs(last_slope))) {
      c.add(who, "piecewise-linear cost is not convex");
      return;
    }
    last_slope = slope;
  }
}

}  // namespace

std::vector<Violation> validate_network(const MultiFrequencyNetwork& net) {
  Collector c;

  if (!(net.base_mva > 0.0)) c.add("network", "base MVA must be positive");
  if (!(net.base_omega > 0.0)) c.add("network", "base frequency must be positive");

  std::map<int, const Bus*> buses;
  for (const auto& bus : net.buses) {
    const std::string who = fmt::format("bus {}", bus.id);
    if (!buses.emplace(bus.id, &bus).second) c.add(who, "duplicate bus id");
    if (!(bus.v_min > 0.0 && bus.v_min <= bus.v_max)) c.add(who, "voltage bounds must satisfy 0 < v_min <= v_max");
    if (!finite(bus.p_load) || !finite(bus.q_load)) c.add(who, "load must be finite");
    if (bus.shunt && !(bus.shunt->value > 0.0)) c.add(who, "shunt element value must be positive");
  }

  // Subnetwork partition of buses.
  std::map<int, std::string> owner;
  std::set<std::string> sub_ids;
  for (const auto& sub : net.subnetworks) {
    const std::string who = fmt::format("subnetwork {}", sub.id);
    if (!sub_ids.insert(sub.id).second) c.add(who, "duplicate subnetwork id");
    if (const auto* var = std::get_if<VariableFrequency>(&sub.frequency)) {
      if (!(var->omega_min > 0.0 && var->omega_min <= var->omega_max))
        c.add(who, "variable frequency requires 0 < omega_min <= omega_max");
    } else if (!(std::get<FixedFrequency>(sub.frequency).omega > 0.0)) {
      c.add(who, "fixed frequency must be positive");
    }
    if (!sub.bus_ids.contains(sub.reference_bus))
      c.add(who, fmt::format("reference bus {} does not belong to the subnetwork", sub.reference_bus));
    for (int id : sub.bus_ids) {
      if (!buses.contains(id)) c.add(who, fmt::format("references unknown bus {}", id));
      auto [it, fresh] = owner.emplace(id, sub.id);
      if (!fresh) c.add(fmt::format("bus {}", id), fmt::format("assigned to subnetworks {} and {}", it->second, sub.id));
    }
    for (int id : sub.branch_ids)
      if (std::none_of(net.branches.begin(), net.branches.end(), [id](const Branch& b) { return b.id == id; }))
        c.add(who, fmt::format("references unknown branch {}", id));
    for (int id : sub.generator_ids)
      if (std::none_of(net.generators.begin(), net.generators.end(), [id](const Generator& g) { return g.id == id; }))
        c.add(who, fmt::format("references unknown generator {}", id));
  }
  if (net.subnetworks.empty()) c.add("network", "no subnetworks declared");
  for (const auto& [id, bus] : buses)
    if (!owner.contains(id)) c.add(fmt::format("bus {}", id), "not assigned to any subnetwork");

  auto sub_of = [&owner](int bus) -> std::string {
    auto it = owner.find(bus);
    return it == owner.end() ? std::string{} : it->second;
  };

  std::set<int> branch_ids;
  for (const auto& br : net.branches) {
    const std::string who = fmt::format("branch {}", br.id);
    if (!branch_ids.insert(br.id).second) c.add(who, "duplicate branch id");
    const bool from_ok = buses.contains(br.from_bus);
    const bool to_ok = buses.contains(br.to_bus);
    if (!from_ok) c.add(who, fmt::format("references unknown bus {}", br.from_bus));
    if (!to_ok) c.add(who, fmt::format("references unknown bus {}", br.to_bus));
    if (br.from_bus == br.to_bus) c.add(who, "endpoints coincide");
    if (!(br.r >= 0.0) || !(br.l >= 0.0)) c.add(who, "series R and L must be nonnegative");
    if (br.r == 0.0 && br.l == 0.0) c.add(who, "degenerate series impedance (R = L = 0)");
    if (!(br.g_shunt >= 0.0) || !(br.c_shunt >= 0.0)) c.add(who, "shunt G and C must be nonnegative");
    if (!(br.tap > 0.0)) c.add(who, "tap ratio must be positive");
    if (!(br.s_max > 0.0)) c.add(who, "thermal limit must be positive");
    if (!(br.angle_max > 0.0 && br.angle_max <= std::numbers::pi / 2.0 + 1e-12))
      c.add(who, "angle limit must lie in (0, pi/2]");
    if (br.kind == BranchKind::HvdcLine) {
      const auto& k = br.hvdc;
      const bool cond_ok = std::abs(k.k_cond - 2.0 / 3.0) < 1e-9 || std::abs(k.k_cond - 1.0) < 1e-9;
      const bool ins_ok = std::abs(k.k_ins - 1.0) < 1e-9 || std::abs(k.k_ins - std::numbers::sqrt2) < 1e-9;
      if (k.allow_any ? !(k.k_cond > 0.0 && k.k_ins > 0.0) : !(cond_ok && ins_ok))
        c.add(who, "HVDC factors must be k_cond in {2/3, 1} and k_ins in {1, sqrt 2} unless overridden");
    }
    if (!br.in_service) continue;
    if (from_ok && to_ok) {
      const auto sf = sub_of(br.from_bus), st = sub_of(br.to_bus);
      if (!sf.empty() && !st.empty() && sf != st)
        c.add(who, fmt::format("endpoints lie in different subnetworks ({} and {}) without an interface", sf, st));
      else if (!sf.empty() && !net.subnetwork(sf).branch_ids.contains(br.id))
        c.add(who, fmt::format("not listed in subnetwork {}", sf));
    }
  }

  std::set<int> gen_ids;
  for (const auto& gen : net.generators) {
    const std::string who = fmt::format("generator {}", gen.id);
    if (!gen_ids.insert(gen.id).second) c.add(who, "duplicate generator id");
    if (!buses.contains(gen.bus)) c.add(who, fmt::format("references unknown bus {}", gen.bus));
    if (!(gen.p_min <= gen.p_max)) c.add(who, "p_min exceeds p_max");
    if (!(gen.q_min <= gen.q_max)) c.add(who, "q_min exceeds q_max");
    check_cost(gen, c);
    if (gen.in_service && buses.contains(gen.bus)) {
      const auto s = sub_of(gen.bus);
      if (!s.empty() && !net.subnetwork(s).generator_ids.contains(gen.id))
        c.add(who, fmt::format("not listed in subnetwork {}", s));
    }
  }

  std::set<std::string> iface_ids;
  for (const auto& iface : net.interfaces) {
    const std::string who = fmt::format("interface {}", iface.id);
    if (!iface_ids.insert(iface.id).second) c.add(who, "duplicate interface id");
    if (!(iface.modulation_index > 0.0 && iface.modulation_index <= 1.0))
      c.add(who, "modulation index must lie in (0, 1]");
    const auto& k = iface.losses;
    if (std::min({k.c1, k.c2, k.c3, k.s1, k.s2, k.s3}) < 0.0) c.add(who, "loss coefficients must be nonnegative");
    for (const auto& term : iface.terminals) {
      if (!buses.contains(term.bus)) {
        c.add(who, fmt::format("terminal references unknown bus {}", term.bus));
        continue;
      }
      if (sub_of(term.bus) != term.subnetwork)
        c.add(who, fmt::format("terminal bus {} is not in subnetwork {}", term.bus, term.subnetwork));
      if (!(term.v_max > 0.0) || !(term.i_arm_rms_max > 0.0))
        c.add(who, "converter voltage and arm current limits must be positive");
    }
    if (iface.terminals[0].subnetwork == iface.terminals[1].subnetwork)
      c.add(who, "terminals must lie in two distinct subnetworks");
  }

  for (int id : net.corridor.branch_ids)
    if (!branch_ids.contains(id)) c.add("corridor", fmt::format("references unknown branch {}", id));
  for (int id : net.corridor.bus_ids)
    if (!buses.contains(id)) c.add("corridor", fmt::format("references unknown bus {}", id));

  return c.take();
}

}  // namespace mfopf
