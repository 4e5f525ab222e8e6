#include "mfopf/formulation.hpp"

#include "mfopf/autodiff.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace mfopf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string bus_name(int id) { return fmt::format("bus {}", id); }
std::string branch_name(int id) { return fmt::format("branch {}", id); }
std::string terminal_name(const std::string& iface, int k) { return fmt::format("interface {}:{}", iface, k); }

bool is_dc(const Branch& br, const ControlMode& mode) {
  return mode.kind == ControlKind::Hvdc && br.kind == BranchKind::HvdcLine;
}

std::pair<double, double> dc_factors(const Branch& br, const ControlMode& mode) {
  return {mode.k_cond.value_or(br.hvdc.k_cond), mode.k_ins.value_or(br.hvdc.k_ins)};
}

double omega_of(const OpfState& state, const MultiFrequencyNetwork& net, const std::string& sub) {
  if (auto it = state.omega.find(sub); it != state.omega.end()) return it->second;
  return net.subnetwork(sub).omega_range().first;
}

template <class Map, class Key>
double get_or_zero(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------
// Element machinery. Each element maps a handful of variables (or constants)
// to outputs; each output feeds rows with a coefficient.

enum class RowKind { Objective, Equality, Inequality };

struct Target {
  RowKind kind;
  Index row;
  double coeff;
};

struct Input {
  Index var = -1;  // -1 means constant
  double constant = 0.0;
};

template <int N, int M>
struct Element {
  static constexpr int kIn = N;
  static constexpr int kOut = M;
  std::array<Input, N> in;
  std::array<std::vector<Target>, M> out;
};

// (Vi, Vj, theta_i, theta_j, w) -> (pf, qf, pt, qt, |sf|^2, |st|^2)
struct AcBranchElement : Element<5, 6> {
  Branch branch;
  double omega_base = 1.0;

  template <class T>
  void operator()(const std::array<T, 5>& x, std::array<T, 6>& y) const {
    const T omega = x[4] * omega_base;
    const BranchFlow<T> f = branch_flow<T>(x[0], x[1], x[2], x[3], branch, omega);
    y = {f.p_from, f.q_from, f.p_to, f.q_to, f.p_from * f.p_from + f.q_from * f.q_from,
         f.p_to * f.p_to + f.q_to * f.q_to};
  }
};

// (Vi, Vj) -> (pf, pt, pf^2, pt^2)
struct DcBranchElement : Element<2, 4> {
  double g = 0.0, g_sh = 0.0, k_cond = 1.0, k_ins = 1.0;

  template <class T>
  void operator()(const std::array<T, 2>& x, std::array<T, 4>& y) const {
    const T pf = hvdc_flow<T>(x[0], x[1], g, g_sh, k_cond, k_ins);
    const T pt = hvdc_flow<T>(x[1], x[0], g, g_sh, k_cond, k_ins);
    y = {pf, pt, pf * pf, pt * pt};
  }
};

// (V, w) -> (V^2 G_sh, V^2 B_sh(omega))
struct BusShuntElement : Element<2, 2> {
  double g_sh = 0.0;
  std::optional<ShuntElement> shunt;
  double omega_base = 1.0;

  template <class T>
  void operator()(const std::array<T, 2>& x, std::array<T, 2>& y) const {
    const T v2 = x[0] * x[0];
    y[0] = v2 * g_sh;
    y[1] = shunt ? T(v2 * shunt_susceptance<T>(*shunt, T(x[1] * omega_base))) : T(0.0 * x[0]);
  }
};

// (p, q, V) -> (i_rms^2, loss)
struct ConverterElement : Element<3, 2> {
  double modulation = 0.9;
  LossCoefficients losses;

  template <class T>
  void operator()(const std::array<T, 3>& x, std::array<T, 2>& y) const {
    const ArmCurrents<T> ac = arm_currents<T>(x[0], x[1], x[2], modulation, kArmCurrentSmoothing);
    y[0] = ac.i_rms_sq;
    y[1] = terminal_loss(ac, losses);
  }
};

// p -> polynomial cost
struct CostElement : Element<1, 1> {
  std::vector<double> coefficients;

  template <class T>
  void operator()(const std::array<T, 1>& x, std::array<T, 1>& y) const {
    T value = T(0.0 * x[0]);
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) value = value * x[0] + *it;
    y[0] = value;
  }
};

struct LinearTerm {
  RowKind kind;
  Index row;
  Index var;
  double coeff;
};

template <class E>
std::array<double, E::kIn> gather(const E& el, const Vector& x) {
  std::array<double, E::kIn> v;
  for (int a = 0; a < E::kIn; ++a) v[a] = el.in[a].var >= 0 ? x[el.in[a].var] : el.in[a].constant;
  return v;
}

}  // namespace

std::string to_string(const ControlMode& mode) {
  switch (mode.kind) {
    case ControlKind::LfacOpf: return "lfac";
    case ControlKind::PqOpf: return "pq";
    case ControlKind::FOpf: return "f";
    case ControlKind::Hvdc:
      if (mode.k_cond || mode.k_ins)
        return fmt::format("hvdc({:.6g},{:.6g})", mode.k_cond.value_or(2.0 / 3.0), mode.k_ins.value_or(1.0));
      return "hvdc";
  }
  return "unknown";
}

ControlMode parse_control_mode(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "lfac" || t == "lfac-opf") return ControlMode::lfac();
  if (t == "pq" || t == "pq-opf") return ControlMode::pq();
  if (t == "f" || t == "f-opf" || t == "fopf") return ControlMode::fopf();
  if (t == "hvdc") return ControlMode::hvdc();
  throw ConfigError(fmt::format("unknown control mode '{}' (expected lfac, pq, f or hvdc)", text));
}

std::string to_string(RowFamily family) {
  switch (family) {
    case RowFamily::AngleFrom: return "angle_from";
    case RowFamily::AngleTo: return "angle_to";
    case RowFamily::ThermalFrom: return "thermal_from";
    case RowFamily::ThermalTo: return "thermal_to";
    case RowFamily::ConverterVoltage: return "converter_voltage";
    case RowFamily::ConverterCurrent: return "converter_current";
    case RowFamily::CostSegment: return "cost_segment";
    case RowFamily::NodalP: return "nodal_p";
    case RowFamily::NodalQ: return "nodal_q";
    case RowFamily::Reference: return "reference";
    case RowFamily::InterfaceBalance: return "interface_balance";
    case RowFamily::CouplingQ: return "coupling_q";
    case RowFamily::CouplingV: return "coupling_v";
    case RowFamily::CouplingTheta: return "coupling_theta";
  }
  return "unknown";
}

double dc_conductance(const Branch& br) {
  if (!(br.r > 0.0)) throw ConfigError(fmt::format("branch {} needs positive resistance for DC operation", br.id));
  return 1.0 / br.r;
}

BalanceResiduals nodal_balance_residuals(const OpfState& state, const MultiFrequencyNetwork& net,
                                         const ControlMode& mode) {
  BalanceResiduals r;
  for (const Bus& bus : net.buses) {
    const double v = get_or_zero(state.v, bus.id);
    const std::string sub = net.subnetwork_of_bus(bus.id);
    double p = -bus.p_load - v * v * bus.g_shunt;
    double q = -bus.q_load;
    if (bus.shunt) q += v * v * shunt_susceptance(*bus.shunt, omega_of(state, net, sub));
    r.p[bus.id] = p;
    r.q[bus.id] = q;
  }
  for (const Generator& g : net.generators) {
    if (!g.in_service) continue;
    r.p[g.bus] += get_or_zero(state.p_gen, g.id);
    r.q[g.bus] += get_or_zero(state.q_gen, g.id);
  }
  for (const ConverterInterface& iface : net.interfaces) {
    for (int k = 0; k < 2; ++k) {
      const int bus = iface.terminals[k].bus;
      r.p[bus] += get_or_zero(state.p_conv, std::pair{iface.id, k});
      r.q[bus] += get_or_zero(state.q_conv, std::pair{iface.id, k});
    }
  }
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const double vi = get_or_zero(state.v, br.from_bus), vj = get_or_zero(state.v, br.to_bus);
    if (is_dc(br, mode)) {
      const auto [kc, ki] = dc_factors(br, mode);
      const double g = dc_conductance(br);
      r.p[br.from_bus] -= hvdc_flow(vi, vj, g, br.g_shunt, kc, ki);
      r.p[br.to_bus] -= hvdc_flow(vj, vi, g, br.g_shunt, kc, ki);
      continue;
    }
    const double omega = omega_of(state, net, net.subnetwork_of_bus(br.from_bus));
    const auto f = branch_flow(vi, vj, get_or_zero(state.theta, br.from_bus), get_or_zero(state.theta, br.to_bus), br,
                               omega);
    r.p[br.from_bus] -= f.p_from;
    r.q[br.from_bus] -= f.q_from;
    r.p[br.to_bus] -= f.p_to;
    r.q[br.to_bus] -= f.q_to;
  }
  return r;
}

double objective(const OpfState& state, const MultiFrequencyNetwork& net) {
  double total = 0.0;
  for (const Generator& g : net.generators)
    if (g.in_service) total += evaluate_cost(g.cost, get_or_zero(state.p_gen, g.id));
  return total;
}

// ---------------------------------------------------------------------------

struct OpfProblem::Impl {
  MultiFrequencyNetwork net;
  ControlMode mode;

  Index n = 0, me = 0, mi = 0;
  Vector lb, ub, x0;
  std::vector<VariableLabel> var_labels;
  std::vector<RowLabel> eq_labels, ineq_labels;
  Vector eq_const, ineq_const;
  double obj_const = 0.0;

  std::map<int, Index> v_idx, theta_idx, pg_idx, qg_idx;
  std::map<std::string, Index> w_idx;
  std::map<std::pair<std::string, int>, Index> pc_idx, qc_idx;

  std::vector<LinearTerm> linear;
  std::vector<AcBranchElement> ac;
  std::vector<DcBranchElement> dc;
  std::vector<BusShuntElement> shunts;
  std::vector<ConverterElement> converters;
  std::vector<CostElement> costs;

  Index add_var(VariableKind kind, std::string entity, int id, double lo, double hi, double start) {
    var_labels.push_back({kind, std::move(entity), id});
    lbs.push_back(lo);
    ubs.push_back(hi);
    starts.push_back(start);
    return n++;
  }
  Index add_eq(RowFamily f, std::string entity, int id, double constant = 0.0) {
    eq_labels.push_back({f, std::move(entity), id});
    eq_c.push_back(constant);
    return me++;
  }
  Index add_ineq(RowFamily f, std::string entity, int id, double constant = 0.0) {
    ineq_labels.push_back({f, std::move(entity), id});
    ineq_c.push_back(constant);
    return mi++;
  }

  std::vector<double> lbs, ubs, starts, eq_c, ineq_c;

  Input omega_input(const std::string& sub) const {
    if (auto it = w_idx.find(sub); it != w_idx.end()) return {it->second, 0.0};
    return {-1, net.subnetwork(sub).omega_range().first / net.base_omega};
  }

  void build();

  template <class E>
  void accumulate(const std::vector<E>& elements, const Vector& x, NlpEvaluation& out) const;
  template <class E>
  void accumulate_hessian(const std::vector<E>& elements, const Vector& x, double obj_factor, const Vector& y_eq,
                          const Vector& y_ineq, Matrix& h) const;
};

void OpfProblem::Impl::build() {
  const auto violations = validate_network(net);
  if (!violations.empty())
    throw DataError(fmt::format("{}: {}", violations.front().entity, violations.front().rule));

  const double wb = net.base_omega;
  std::vector<const Branch*> live;
  for (const Branch& br : net.branches)
    if (br.in_service) live.push_back(&br);

  bool any_dc = false;
  for (const Branch* br : live) any_dc = any_dc || is_dc(*br, mode);
  if (mode.kind == ControlKind::Hvdc && !any_dc) throw ConfigError("HVDC mode needs at least one HVDC branch");

  // Subnetworks whose every live branch runs as DC carry no angle or frequency information.
  std::set<std::string> dc_only;
  for (const Subnetwork& sub : net.subnetworks) {
    bool has_branch = false, all_dc = true;
    for (const Branch* br : live) {
      if (!sub.bus_ids.contains(br->from_bus)) continue;
      has_branch = true;
      all_dc = all_dc && is_dc(*br, mode);
    }
    if (has_branch && all_dc) dc_only.insert(sub.id);
  }

  // Variables.
  for (const Bus& bus : net.buses) {
    const double start = std::clamp(1.0, bus.v_min, bus.v_max);
    v_idx[bus.id] = add_var(VariableKind::V, bus_name(bus.id), bus.id, bus.v_min, bus.v_max, start);
  }
  for (const Bus& bus : net.buses) {
    const std::string sub = net.subnetwork_of_bus(bus.id);
    const bool pinned = dc_only.contains(sub) && net.subnetwork(sub).reference_bus != bus.id;
    theta_idx[bus.id] =
        add_var(VariableKind::Theta, bus_name(bus.id), bus.id, pinned ? 0.0 : -kInf, pinned ? 0.0 : kInf, 0.0);
  }
  auto mid = [](double lo, double hi) {
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return std::max(lo, 0.0);
    if (std::isfinite(hi)) return std::min(hi, 0.0);
    return 0.0;
  };
  std::vector<const Generator*> gens;
  for (const Generator& g : net.generators)
    if (g.in_service) gens.push_back(&g);
  for (const Generator* g : gens)
    pg_idx[g->id] = add_var(VariableKind::PGen, fmt::format("generator {}", g->id), g->id, g->p_min, g->p_max,
                            mid(g->p_min, g->p_max));
  for (const Generator* g : gens)
    qg_idx[g->id] = add_var(VariableKind::QGen, fmt::format("generator {}", g->id), g->id, g->q_min, g->q_max,
                            mid(g->q_min, g->q_max));
  for (const Subnetwork& sub : net.subnetworks) {
    if (!sub.is_variable()) continue;
    auto [lo, hi] = sub.omega_range();
    if (mode.kind == ControlKind::PqOpf) lo = hi = wb;
    if (dc_only.contains(sub.id)) hi = lo;
    w_idx[sub.id] = add_var(VariableKind::Omega, fmt::format("subnetwork {}", sub.id), 0, lo / wb, hi / wb,
                            0.5 * (lo + hi) / wb);
  }
  for (const ConverterInterface& iface : net.interfaces) {
    for (int k = 0; k < 2; ++k) {
      const ConverterTerminal& t = iface.terminals[k];
      const double lo = t.p_min.value_or(-kInf), hi = t.p_max.value_or(kInf);
      pc_idx[{iface.id, k}] =
          add_var(VariableKind::PConv, terminal_name(iface.id, k), k, lo, hi, std::clamp(0.0, lo, hi));
    }
    for (int k = 0; k < 2; ++k) {
      const ConverterTerminal& t = iface.terminals[k];
      const double lo = t.q_min.value_or(-kInf), hi = t.q_max.value_or(kInf);
      qc_idx[{iface.id, k}] =
          add_var(VariableKind::QConv, terminal_name(iface.id, k), k, lo, hi, std::clamp(0.0, lo, hi));
    }
  }

  // Nodal balance rows: P for every bus, then Q for every bus.
  std::map<int, Index> p_row, q_row;
  for (const Bus& bus : net.buses) p_row[bus.id] = add_eq(RowFamily::NodalP, bus_name(bus.id), bus.id, -bus.p_load);
  for (const Bus& bus : net.buses) q_row[bus.id] = add_eq(RowFamily::NodalQ, bus_name(bus.id), bus.id, -bus.q_load);

  for (const Bus& bus : net.buses) {
    if (bus.g_shunt == 0.0 && !bus.shunt) continue;
    BusShuntElement el;
    el.g_sh = bus.g_shunt;
    el.shunt = bus.shunt;
    el.omega_base = wb;
    el.in = {Input{v_idx[bus.id]}, omega_input(net.subnetwork_of_bus(bus.id))};
    el.out[0] = {{RowKind::Equality, p_row[bus.id], -1.0}};
    el.out[1] = {{RowKind::Equality, q_row[bus.id], 1.0}};
    shunts.push_back(std::move(el));
  }
  for (const Generator* g : gens) {
    linear.push_back({RowKind::Equality, p_row[g->bus], pg_idx[g->id], 1.0});
    linear.push_back({RowKind::Equality, q_row[g->bus], qg_idx[g->id], 1.0});
  }
  for (const ConverterInterface& iface : net.interfaces) {
    for (int k = 0; k < 2; ++k) {
      const int bus = iface.terminals[k].bus;
      linear.push_back({RowKind::Equality, p_row[bus], pc_idx[{iface.id, k}], 1.0});
      linear.push_back({RowKind::Equality, q_row[bus], qc_idx[{iface.id, k}], 1.0});
    }
  }

  // Reference angles. With F-OPF couplings, subnetworks tied through a
  // converter share one angle reference.
  std::map<std::string, std::string> parent;
  for (const Subnetwork& sub : net.subnetworks) parent[sub.id] = sub.id;
  std::function<std::string(const std::string&)> find = [&](const std::string& s) {
    return parent[s] == s ? s : parent[s] = find(parent[s]);
  };
  if (mode.kind == ControlKind::FOpf) {
    for (const ConverterInterface& iface : net.interfaces) {
      const std::string a = find(iface.terminals[0].subnetwork), b = find(iface.terminals[1].subnetwork);
      if (a == b) continue;
      // Keep the subnetwork listed first as the representative.
      const auto pos = [&](const std::string& s) {
        return std::find_if(net.subnetworks.begin(), net.subnetworks.end(),
                            [&](const Subnetwork& x) { return x.id == s; }) -
               net.subnetworks.begin();
      };
      if (pos(a) < pos(b)) parent[b] = a;
      else parent[a] = b;
    }
  }
  for (const Subnetwork& sub : net.subnetworks) {
    if (find(sub.id) != sub.id) continue;
    const Index row = add_eq(RowFamily::Reference, fmt::format("subnetwork {}", sub.id), sub.reference_bus);
    linear.push_back({RowKind::Equality, row, theta_idx[sub.reference_bus], 1.0});
  }

  // Branches.
  for (const Branch* br : live) {
    const std::string name = branch_name(br->id);
    const double s2 = br->s_max * br->s_max;
    if (is_dc(*br, mode)) {
      DcBranchElement el;
      el.g = dc_conductance(*br);
      el.g_sh = br->g_shunt;
      std::tie(el.k_cond, el.k_ins) = dc_factors(*br, mode);
      el.in = {Input{v_idx[br->from_bus]}, Input{v_idx[br->to_bus]}};
      const Index tf = add_ineq(RowFamily::ThermalFrom, name, br->id, -s2);
      const Index tt = add_ineq(RowFamily::ThermalTo, name, br->id, -s2);
      el.out[0] = {{RowKind::Equality, p_row[br->from_bus], -1.0}};
      el.out[1] = {{RowKind::Equality, p_row[br->to_bus], -1.0}};
      el.out[2] = {{RowKind::Inequality, tf, 1.0}};
      el.out[3] = {{RowKind::Inequality, tt, 1.0}};
      dc.push_back(std::move(el));
      continue;
    }
    const Index af = add_ineq(RowFamily::AngleFrom, name, br->id, -br->angle_max);
    const Index at = add_ineq(RowFamily::AngleTo, name, br->id, -br->angle_max);
    const Index ti = theta_idx[br->from_bus], tj = theta_idx[br->to_bus];
    linear.push_back({RowKind::Inequality, af, ti, 1.0});
    linear.push_back({RowKind::Inequality, af, tj, -1.0});
    linear.push_back({RowKind::Inequality, at, tj, 1.0});
    linear.push_back({RowKind::Inequality, at, ti, -1.0});
    const Index tf = add_ineq(RowFamily::ThermalFrom, name, br->id, -s2);
    const Index tt = add_ineq(RowFamily::ThermalTo, name, br->id, -s2);

    AcBranchElement el;
    el.branch = *br;
    el.omega_base = wb;
    el.in = {Input{v_idx[br->from_bus]}, Input{v_idx[br->to_bus]}, Input{ti}, Input{tj},
             omega_input(net.subnetwork_of_bus(br->from_bus))};
    el.out[0] = {{RowKind::Equality, p_row[br->from_bus], -1.0}};
    el.out[1] = {{RowKind::Equality, q_row[br->from_bus], -1.0}};
    el.out[2] = {{RowKind::Equality, p_row[br->to_bus], -1.0}};
    el.out[3] = {{RowKind::Equality, q_row[br->to_bus], -1.0}};
    el.out[4] = {{RowKind::Inequality, tf, 1.0}};
    el.out[5] = {{RowKind::Inequality, tt, 1.0}};
    ac.push_back(std::move(el));
  }

  // Converters: active power conservation, limits, optional F-OPF couplings.
  for (const ConverterInterface& iface : net.interfaces) {
    const Index bal = add_eq(RowFamily::InterfaceBalance, fmt::format("interface {}", iface.id), 0);
    for (int k = 0; k < 2; ++k) {
      const ConverterTerminal& t = iface.terminals[k];
      const std::string name = terminal_name(iface.id, k);
      linear.push_back({RowKind::Equality, bal, pc_idx[{iface.id, k}], 1.0});

      const Index vrow = add_ineq(RowFamily::ConverterVoltage, name, k, -t.v_max);
      linear.push_back({RowKind::Inequality, vrow, v_idx[t.bus], 1.0});
      const Index irow = add_ineq(RowFamily::ConverterCurrent, name, k, -t.i_arm_rms_max * t.i_arm_rms_max);

      ConverterElement el;
      el.modulation = iface.modulation_index;
      el.losses = iface.losses;
      el.in = {Input{pc_idx[{iface.id, k}]}, Input{qc_idx[{iface.id, k}]}, Input{v_idx[t.bus]}};
      el.out[0] = {{RowKind::Inequality, irow, 1.0}};
      if (iface.losses_enabled) el.out[1] = {{RowKind::Equality, bal, 1.0}};
      converters.push_back(std::move(el));
    }
    if (mode.kind == ControlKind::FOpf) {
      const std::string name = fmt::format("interface {}", iface.id);
      const int b0 = iface.terminals[0].bus, b1 = iface.terminals[1].bus;
      const Index rq = add_eq(RowFamily::CouplingQ, name, 0);
      linear.push_back({RowKind::Equality, rq, qc_idx[{iface.id, 0}], 1.0});
      linear.push_back({RowKind::Equality, rq, qc_idx[{iface.id, 1}], 1.0});
      const Index rv = add_eq(RowFamily::CouplingV, name, 0);
      linear.push_back({RowKind::Equality, rv, v_idx[b0], 1.0});
      linear.push_back({RowKind::Equality, rv, v_idx[b1], -1.0});
      const Index rt = add_eq(RowFamily::CouplingTheta, name, 0);
      linear.push_back({RowKind::Equality, rt, theta_idx[b0], 1.0});
      linear.push_back({RowKind::Equality, rt, theta_idx[b1], -1.0});
    }
  }

  // Objective.
  for (const Generator* g : gens) {
    if (const auto* poly = std::get_if<PolynomialCost>(&g->cost)) {
      CostElement el;
      el.coefficients = poly->coefficients;
      el.in = {Input{pg_idx[g->id]}};
      el.out[0] = {{RowKind::Objective, 0, 1.0}};
      costs.push_back(std::move(el));
      continue;
    }
    const auto& pts = std::get<PiecewiseLinearCost>(g->cost).points;
    const double p_start = starts[static_cast<std::size_t>(pg_idx[g->id])];
    double t_start = -kInf;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double slope = (pts[k + 1].second - pts[k].second) / (pts[k + 1].first - pts[k].first);
      t_start = std::max(t_start, pts[k].second + slope * (p_start - pts[k].first));
    }
    const Index t = add_var(VariableKind::CostEpigraph, fmt::format("generator {}", g->id), g->id, -kInf, kInf,
                            t_start + 1.0);
    linear.push_back({RowKind::Objective, 0, t, 1.0});
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double slope = (pts[k + 1].second - pts[k].second) / (pts[k + 1].first - pts[k].first);
      const Index row = add_ineq(RowFamily::CostSegment, fmt::format("generator {}", g->id), g->id,
                                 pts[k].second - slope * pts[k].first);
      linear.push_back({RowKind::Inequality, row, pg_idx[g->id], slope});
      linear.push_back({RowKind::Inequality, row, t, -1.0});
    }
  }

  lb = Eigen::Map<Vector>(lbs.data(), n);
  ub = Eigen::Map<Vector>(ubs.data(), n);
  x0 = Eigen::Map<Vector>(starts.data(), n);
  eq_const = Eigen::Map<Vector>(eq_c.data(), me);
  ineq_const = Eigen::Map<Vector>(ineq_c.data(), mi);
}

template <class E>
void OpfProblem::Impl::accumulate(const std::vector<E>& elements, const Vector& x, NlpEvaluation& out) const {
  std::array<double, E::kOut> y;
  Eigen::Matrix<double, E::kOut, E::kIn> jac;
  for (const E& el : elements) {
    ad::jacobian<E::kIn, E::kOut>(el, gather(el, x), y, jac);
    for (int k = 0; k < E::kOut; ++k) {
      for (const Target& t : el.out[k]) {
        double* value = nullptr;
        switch (t.kind) {
          case RowKind::Objective:
            value = &out.objective;
            for (int a = 0; a < E::kIn; ++a)
              if (el.in[a].var >= 0) out.gradient[el.in[a].var] += t.coeff * jac(k, a);
            break;
          case RowKind::Equality:
            value = &out.equalities[t.row];
            for (int a = 0; a < E::kIn; ++a)
              if (el.in[a].var >= 0) out.equality_jacobian(t.row, el.in[a].var) += t.coeff * jac(k, a);
            break;
          case RowKind::Inequality:
            value = &out.inequalities[t.row];
            for (int a = 0; a < E::kIn; ++a)
              if (el.in[a].var >= 0) out.inequality_jacobian(t.row, el.in[a].var) += t.coeff * jac(k, a);
            break;
        }
        *value += t.coeff * y[k];
      }
    }
  }
}

template <class E>
void OpfProblem::Impl::accumulate_hessian(const std::vector<E>& elements, const Vector& x, double obj_factor,
                                          const Vector& y_eq, const Vector& y_ineq, Matrix& h) const {
  for (const E& el : elements) {
    std::array<double, E::kOut> w{};
    bool any = false;
    for (int k = 0; k < E::kOut; ++k) {
      for (const Target& t : el.out[k]) {
        const double m = t.kind == RowKind::Objective  ? obj_factor
                         : t.kind == RowKind::Equality ? y_eq[t.row]
                                                       : y_ineq[t.row];
        w[k] += t.coeff * m;
      }
      any = any || w[k] != 0.0;
    }
    if (!any) continue;
    const auto he = ad::weighted_hessian<E::kIn, E::kOut>(el, gather(el, x), w);
    for (int a = 0; a < E::kIn; ++a) {
      if (el.in[a].var < 0) continue;
      for (int b = 0; b < E::kIn; ++b)
        if (el.in[b].var >= 0) h(el.in[a].var, el.in[b].var) += he(a, b);
    }
  }
}

OpfProblem::OpfProblem(MultiFrequencyNetwork net, ControlMode mode) : impl_(std::make_unique<Impl>()) {
  impl_->net = std::move(net);
  impl_->mode = mode;
  impl_->build();
}

OpfProblem::~OpfProblem() = default;
OpfProblem::OpfProblem(OpfProblem&&) noexcept = default;

Index OpfProblem::num_variables() const { return impl_->n; }
Index OpfProblem::num_equalities() const { return impl_->me; }
Index OpfProblem::num_inequalities() const { return impl_->mi; }
Vector OpfProblem::lower_bounds() const { return impl_->lb; }
Vector OpfProblem::upper_bounds() const { return impl_->ub; }
Vector OpfProblem::starting_point() const { return impl_->x0; }

void OpfProblem::evaluate(const Vector& x, NlpEvaluation& out) const {
  const Impl& d = *impl_;
  out.objective = d.obj_const;
  out.gradient = Vector::Zero(d.n);
  out.equalities = d.eq_const;
  out.equality_jacobian = Matrix::Zero(d.me, d.n);
  out.inequalities = d.ineq_const;
  out.inequality_jacobian = Matrix::Zero(d.mi, d.n);
  for (const LinearTerm& t : d.linear) {
    switch (t.kind) {
      case RowKind::Objective:
        out.objective += t.coeff * x[t.var];
        out.gradient[t.var] += t.coeff;
        break;
      case RowKind::Equality:
        out.equalities[t.row] += t.coeff * x[t.var];
        out.equality_jacobian(t.row, t.var) += t.coeff;
        break;
      case RowKind::Inequality:
        out.inequalities[t.row] += t.coeff * x[t.var];
        out.inequality_jacobian(t.row, t.var) += t.coeff;
        break;
    }
  }
  d.accumulate(d.ac, x, out);
  d.accumulate(d.dc, x, out);
  d.accumulate(d.shunts, x, out);
  d.accumulate(d.converters, x, out);
  d.accumulate(d.costs, x, out);
}

Matrix OpfProblem::lagrangian_hessian(const Vector& x, double objective_factor, const Vector& y_eq,
                                      const Vector& y_ineq) const {
  const Impl& d = *impl_;
  Matrix h = Matrix::Zero(d.n, d.n);
  d.accumulate_hessian(d.ac, x, objective_factor, y_eq, y_ineq, h);
  d.accumulate_hessian(d.dc, x, objective_factor, y_eq, y_ineq, h);
  d.accumulate_hessian(d.shunts, x, objective_factor, y_eq, y_ineq, h);
  d.accumulate_hessian(d.converters, x, objective_factor, y_eq, y_ineq, h);
  d.accumulate_hessian(d.costs, x, objective_factor, y_eq, y_ineq, h);
  return h;
}

const MultiFrequencyNetwork& OpfProblem::network() const { return impl_->net; }
const ControlMode& OpfProblem::mode() const { return impl_->mode; }
const std::vector<VariableLabel>& OpfProblem::variable_labels() const { return impl_->var_labels; }
const std::vector<RowLabel>& OpfProblem::equality_labels() const { return impl_->eq_labels; }
const std::vector<RowLabel>& OpfProblem::inequality_labels() const { return impl_->ineq_labels; }

Index OpfProblem::v_index(int bus) const { return impl_->v_idx.at(bus); }
Index OpfProblem::theta_index(int bus) const { return impl_->theta_idx.at(bus); }
Index OpfProblem::pgen_index(int gen) const { return impl_->pg_idx.at(gen); }
std::optional<Index> OpfProblem::omega_index(const std::string& subnetwork) const {
  if (auto it = impl_->w_idx.find(subnetwork); it != impl_->w_idx.end()) return it->second;
  return std::nullopt;
}

OpfState OpfProblem::state(const Vector& x) const {
  const Impl& d = *impl_;
  OpfState s;
  for (const auto& [id, i] : d.v_idx) s.v[id] = x[i];
  for (const auto& [id, i] : d.theta_idx) s.theta[id] = x[i];
  for (const auto& [id, i] : d.pg_idx) s.p_gen[id] = x[i];
  for (const auto& [id, i] : d.qg_idx) s.q_gen[id] = x[i];
  for (const Subnetwork& sub : d.net.subnetworks) {
    auto it = d.w_idx.find(sub.id);
    s.omega[sub.id] = it != d.w_idx.end() ? x[it->second] * d.net.base_omega : sub.omega_range().first;
  }
  for (const auto& [key, i] : d.pc_idx) s.p_conv[key] = x[i];
  for (const auto& [key, i] : d.qc_idx) s.q_conv[key] = x[i];
  return s;
}

Vector OpfProblem::encode(const OpfState& s) const {
  const Impl& d = *impl_;
  Vector x = d.x0;
  auto put = [&x](const auto& idx, const auto& values, double scale = 1.0) {
    for (const auto& [key, i] : idx)
      if (auto it = values.find(key); it != values.end()) x[i] = it->second * scale;
  };
  put(d.v_idx, s.v);
  put(d.theta_idx, s.theta);
  put(d.pg_idx, s.p_gen);
  put(d.qg_idx, s.q_gen);
  put(d.w_idx, s.omega, 1.0 / d.net.base_omega);
  put(d.pc_idx, s.p_conv);
  put(d.qc_idx, s.q_conv);
  return x;
}

OpfSolution extract_solution(const OpfProblem& problem, SolveResult result) {
  OpfSolution sol;
  const MultiFrequencyNetwork& net = problem.network();
  const ControlMode& mode = problem.mode();
  sol.state = problem.state(result.x);
  sol.inequality_values = problem.evaluate(result.x).inequalities;
  const OpfState& s = sol.state;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const double vi = s.v.at(br.from_bus), vj = s.v.at(br.to_bus);
    const double dtheta = s.theta.at(br.from_bus) - s.theta.at(br.to_bus);
    if (is_dc(br, mode)) {
      const auto [kc, ki] = dc_factors(br, mode);
      const double g = dc_conductance(br);
      sol.branches.push_back(
          {br.id, true, hvdc_flow(vi, vj, g, br.g_shunt, kc, ki), 0.0, hvdc_flow(vj, vi, g, br.g_shunt, kc, ki), 0.0,
           dtheta});
      continue;
    }
    const auto f = branch_flow(vi, vj, s.theta.at(br.from_bus), s.theta.at(br.to_bus), br,
                               s.omega.at(net.subnetwork_of_bus(br.from_bus)));
    sol.branches.push_back({br.id, false, f.p_from, f.q_from, f.p_to, f.q_to, dtheta});
  }
  for (const ConverterInterface& iface : net.interfaces) {
    for (int k = 0; k < 2; ++k) {
      const int bus = iface.terminals[k].bus;
      const double p = s.p_conv.at({iface.id, k}), q = s.q_conv.at({iface.id, k}), v = s.v.at(bus);
      const auto ac = arm_currents(p, q, v, iface.modulation_index);
      const double loss = iface.losses_enabled ? terminal_loss(ac, iface.losses) : 0.0;
      sol.converters.push_back({iface.id, k, bus, p, q, v, ac.i_rms_sq, loss});
    }
  }
  sol.result = std::move(result);
  return sol;
}

OpfSolution solve_opf(const MultiFrequencyNetwork& net, const ControlMode& mode, const SolverOptions& options,
                      const std::optional<Vector>& x0) {
  OpfProblem problem(net, mode);
  return extract_solution(problem, solve(problem, options, x0));
}

}  // namespace mfopf
