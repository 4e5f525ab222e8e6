#include "mfopf/io.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>

namespace mfopf {

namespace {

std::string hz(double omega) { return fmt::format("{:.6f}", rad_to_hz(omega)); }

const char* kind_name(BranchKind k) {
  switch (k) {
    case BranchKind::AcLine: return "ac";
    case BranchKind::Transformer: return "transformer";
    case BranchKind::HvdcLine: return "hvdc";
  }
  return "?";
}

template <class T, class Key>
std::vector<const T*> sorted(const std::vector<T>& items, Key key) {
  std::vector<const T*> out;
  for (const T& t : items) out.push_back(&t);
  std::sort(out.begin(), out.end(), [&](const T* a, const T* b) { return key(*a) < key(*b); });
  return out;
}

}  // namespace

std::string dump_network(const MultiFrequencyNetwork& net) {
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };
  line(fmt::format("network base_mva={:.6g} base_hz={}", net.base_mva, hz(net.base_omega)));
  for (const Subnetwork* s : sorted(net.subnetworks, [](const Subnetwork& s) { return s.id; })) {
    const auto [lo, hi] = s->omega_range();
    line(fmt::format("subnetwork {} {} hz=[{}, {}] ref={} buses={} branches={} generators={}", s->id,
                     s->is_variable() ? "variable" : "fixed", hz(lo), hz(hi), s->reference_bus,
                     fmt::join(s->bus_ids, ","), fmt::join(s->branch_ids, ","), fmt::join(s->generator_ids, ",")));
  }
  for (const Bus* b : sorted(net.buses, [](const Bus& b) { return b.id; })) {
    std::string shunt = "none";
    if (b->shunt)
      shunt = fmt::format("{}:{:.9g}", b->shunt->kind == ShuntElement::Kind::Capacitive ? "C" : "L", b->shunt->value);
    line(fmt::format("bus {} v=[{:.6g}, {:.6g}] load=({:.9g}, {:.9g}) gsh={:.9g} shunt={}{}", b->id, b->v_min,
                     b->v_max, b->p_load, b->q_load, b->g_shunt, shunt,
                     b->provenance.empty() ? "" : " provenance=" + b->provenance));
  }
  for (const Branch* br : sorted(net.branches, [](const Branch& b) { return b.id; })) {
    line(fmt::format("branch {} {}->{} {} r={:.9g} l={:.9g} gsh={:.9g} c={:.9g} tap={:.6g} shift={:.6g} "
                     "smax={:.6g} angmax={:.6g}{}{}{}",
                     br->id, br->from_bus, br->to_bus, kind_name(br->kind), br->r, br->l, br->g_shunt, br->c_shunt,
                     br->tap, br->shift, br->s_max, br->angle_max,
                     br->kind == BranchKind::HvdcLine
                         ? fmt::format(" k_cond={:.6g} k_ins={:.6g}", br->hvdc.k_cond, br->hvdc.k_ins)
                         : "",
                     br->in_service ? "" : " out_of_service",
                     br->provenance.empty() ? "" : " provenance=" + br->provenance));
  }
  for (const Generator* g : sorted(net.generators, [](const Generator& g) { return g.id; })) {
    std::string cost;
    if (const auto* poly = std::get_if<PolynomialCost>(&g->cost)) {
      cost = fmt::format("poly[{:.9g}]", fmt::join(poly->coefficients, ","));
    } else {
      std::vector<std::string> pts;
      for (const auto& [p, c] : std::get<PiecewiseLinearCost>(g->cost).points) pts.push_back(fmt::format("({:.9g},{:.9g})", p, c));
      cost = fmt::format("pwl[{}]", fmt::join(pts, ","));
    }
    line(fmt::format("generator {} bus={} p=[{:.9g}, {:.9g}] q=[{:.9g}, {:.9g}] cost={}{}", g->id, g->bus, g->p_min,
                     g->p_max, g->q_min, g->q_max, cost, g->in_service ? "" : " out_of_service"));
  }
  for (const ConverterInterface* c : sorted(net.interfaces, [](const ConverterInterface& c) { return c.id; })) {
    const auto& k = c->losses;
    line(fmt::format("interface {} m={:.6g} losses={} coeffs=({:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g})", c->id,
                     c->modulation_index, c->losses_enabled ? "on" : "off", k.c1, k.c2, k.c3, k.s1, k.s2, k.s3));
    for (int i = 0; i < 2; ++i) {
      const auto& t = c->terminals[i];
      line(fmt::format("  terminal {} bus={} subnetwork={} vmax={:.6g} imax={:.6g}{}", i, t.bus, t.subnetwork, t.v_max,
                       t.i_arm_rms_max, t.pi_branch ? fmt::format(" pi_branch={}", *t.pi_branch) : ""));
    }
  }
  line(fmt::format("corridor branches={} buses={}", fmt::join(net.corridor.branch_ids, ","),
                   fmt::join(net.corridor.bus_ids, ",")));
  return out;
}

}  // namespace mfopf
