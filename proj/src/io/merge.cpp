#include "mfopf/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace mfopf {

namespace {

const std::string kBaseSubnetwork = "base";

Bus& find_bus(PrimitiveNetwork& p, int id, const std::string& who) {
  auto it = std::find_if(p.buses.begin(), p.buses.end(), [id](const Bus& b) { return b.id == id; });
  if (it == p.buses.end()) throw DataError(fmt::format("{} references unknown bus {}", who, id));
  return *it;
}

Branch& find_branch(PrimitiveNetwork& p, int id, const std::string& who) {
  auto it = std::find_if(p.branches.begin(), p.branches.end(), [id](const Branch& b) { return b.id == id; });
  if (it == p.branches.end()) throw DataError(fmt::format("{} references unknown branch {}", who, id));
  return *it;
}

Generator& find_generator(PrimitiveNetwork& p, int id, const std::string& who) {
  auto it = std::find_if(p.generators.begin(), p.generators.end(), [id](const Generator& g) { return g.id == id; });
  if (it == p.generators.end()) throw DataError(fmt::format("{} references unknown generator {}", who, id));
  return *it;
}

void apply_scenario(PrimitiveNetwork& p, const ExtensionDocument::Scenario& sc) {
  for (int id : sc.branch_outages) {
    find_branch(p, id, "scenario branch outage");
    std::erase_if(p.branches, [id](const Branch& b) { return b.id == id; });
  }
  for (int id : sc.generator_outages) find_generator(p, id, "scenario generator outage").in_service = false;
  if (!(sc.load_scale >= 0.0)) throw DataError("scenario load_scale must be nonnegative");
  for (Bus& b : p.buses) {
    b.p_load *= sc.load_scale;
    b.q_load *= sc.load_scale;
  }
  for (const auto& entry : sc.generator_pmax_scale) {
    if (!(entry.factor >= 0.0)) throw DataError("scenario generator_pmax_scale factor must be nonnegative");
    for (int id : entry.generators) find_generator(p, id, "scenario generator_pmax_scale").p_max *= entry.factor;
  }
}

void apply_splits(PrimitiveNetwork& p, const std::vector<ExtensionDocument::Split>& splits) {
  for (const auto& s : splits) {
    const std::string who = fmt::format("split of bus {}", s.bus);
    const Bus original = find_bus(p, s.bus, who);
    if (std::any_of(p.buses.begin(), p.buses.end(), [&](const Bus& b) { return b.id == s.twin; }))
      throw DataError(fmt::format("{}: twin id {} already exists", who, s.twin));
    if (s.load_fraction < 0.0 || s.load_fraction > 1.0 || s.shunt_fraction < 0.0 || s.shunt_fraction > 1.0)
      throw DataError(fmt::format("{}: fractions must lie in [0, 1]", who));

    Bus twin = original;
    twin.id = s.twin;
    twin.provenance = fmt::format("split:{}", s.bus);
    twin.p_load = original.p_load * s.load_fraction;
    twin.q_load = original.q_load * s.load_fraction;
    twin.g_shunt = original.g_shunt * s.shunt_fraction;
    if (original.shunt && s.shunt_fraction > 0.0) {
      ShuntElement el = *original.shunt;
      // Capacitance scales with the share, inductance inversely.
      if (el.kind == ShuntElement::Kind::Capacitive) el.value *= s.shunt_fraction;
      else el.value /= s.shunt_fraction;
      twin.shunt = el;
    } else {
      twin.shunt.reset();
    }
    Bus& kept = find_bus(p, s.bus, who);
    kept.p_load -= twin.p_load;
    kept.q_load -= twin.q_load;
    kept.g_shunt -= twin.g_shunt;
    if (kept.shunt && s.shunt_fraction > 0.0) {
      if (s.shunt_fraction == 1.0) {
        kept.shunt.reset();
      } else if (kept.shunt->kind == ShuntElement::Kind::Capacitive) {
        kept.shunt->value *= 1.0 - s.shunt_fraction;
      } else {
        kept.shunt->value /= 1.0 - s.shunt_fraction;
      }
    }
    p.buses.push_back(twin);

    for (int id : s.branches) {
      Branch& br = find_branch(p, id, who);
      const bool from = br.from_bus == s.bus, to = br.to_bus == s.bus;
      if (from == to)
        throw DataError(fmt::format("{}: branch {} is {} incident to the split bus", who, id, from ? "doubly" : "not"));
      (from ? br.from_bus : br.to_bus) = s.twin;
    }
  }
}

}  // namespace

MultiFrequencyNetwork merge(const CaseDocument& doc, const ExtensionDocument& ext) {
  if (!(ext.base_frequency_hz > 0.0)) throw DataError("extension base_frequency_hz must be positive");
  PrimitiveNetwork p = derive_primitives(doc, hz_to_rad(ext.base_frequency_hz));
  apply_scenario(p, ext.scenario);
  apply_splits(p, ext.splits);

  MultiFrequencyNetwork net;
  net.base_mva = p.base_mva;
  net.base_omega = p.base_omega;

  // Converter interfaces, with an internal bus behind each Pi branch.
  int next_bus = 0, next_branch = 0;
  for (const Bus& b : p.buses) next_bus = std::max(next_bus, b.id);
  for (const Branch& b : p.branches) next_branch = std::max(next_branch, b.id);
  std::map<int, int> internal_of;  // internal bus -> terminal bus
  for (const auto& decl : ext.interfaces) {
    ConverterInterface iface;
    iface.id = decl.id;
    iface.modulation_index = decl.modulation_index;
    iface.losses = decl.losses;
    iface.losses_enabled = decl.losses_enabled;
    for (int k = 0; k < 2; ++k) {
      const auto& td = decl.terminals[k];
      const std::string who = fmt::format("interface {} terminal {}", decl.id, k);
      const Bus& outer = find_bus(p, td.bus, who);
      ConverterTerminal& t = iface.terminals[k];
      t.bus = td.bus;
      t.v_max = decl.v_max;
      t.i_arm_rms_max = decl.i_arm_rms_max;
      t.p_min = td.p_min;
      t.p_max = td.p_max;
      t.q_min = td.q_min;
      t.q_max = td.q_max;
      if (td.pi_branch) {
        Bus inner = outer;
        inner.id = ++next_bus;
        inner.p_load = inner.q_load = inner.g_shunt = 0.0;
        inner.shunt.reset();
        inner.provenance = fmt::format("converter:{}:{}", decl.id, k);
        Branch br;
        br.id = ++next_branch;
        br.from_bus = td.bus;
        br.to_bus = inner.id;
        br.r = td.pi_branch->r;
        br.l = td.pi_branch->x / p.base_omega;
        br.c_shunt = td.pi_branch->b / p.base_omega;
        br.s_max = td.pi_branch->rate > 0.0 ? td.pi_branch->rate : kUnlimitedRating;
        br.kind = BranchKind::Transformer;
        br.provenance = inner.provenance;
        internal_of[inner.id] = td.bus;
        p.buses.push_back(inner);
        p.branches.push_back(br);
        t.bus = inner.id;
        t.pi_branch = br.id;
      }
    }
    net.interfaces.push_back(iface);
  }

  for (const auto& decl : ext.hvdc) {
    for (int id : decl.branches) {
      Branch& br = find_branch(p, id, "hvdc declaration");
      br.kind = BranchKind::HvdcLine;
      br.hvdc = {decl.k_cond, decl.k_ins, decl.allow_any};
    }
  }

  // Subnetwork membership.
  std::map<int, std::string> owner;
  auto claim = [&](int bus, const std::string& sub) {
    auto [it, inserted] = owner.emplace(bus, sub);
    if (!inserted && it->second != sub)
      throw DataError(fmt::format("bus {} is claimed by subnetworks {} and {}", bus, it->second, sub));
  };
  for (const auto& decl : ext.subnetworks) {
    if (decl.id == kBaseSubnetwork) throw DataError("subnetwork id 'base' is reserved");
    for (int id : decl.buses) claim(find_bus(p, id, "subnetwork " + decl.id).id, decl.id);
    for (int id : decl.branches) {
      const Branch& br = find_branch(p, id, "subnetwork " + decl.id);
      claim(br.from_bus, decl.id);
      claim(br.to_bus, decl.id);
    }
  }
  for (const auto& [inner, outer] : internal_of)
    if (auto it = owner.find(outer); it != owner.end()) claim(inner, it->second);
  for (const Bus& b : p.buses)
    if (!owner.contains(b.id)) owner[b.id] = kBaseSubnetwork;

  std::vector<Subnetwork> subs;
  Subnetwork base;
  base.id = kBaseSubnetwork;
  base.frequency = FixedFrequency{p.base_omega};
  subs.push_back(base);
  for (const auto& decl : ext.subnetworks) {
    Subnetwork s;
    s.id = decl.id;
    if (decl.frequency.fixed_hz) s.frequency = FixedFrequency{hz_to_rad(*decl.frequency.fixed_hz)};
    else s.frequency = VariableFrequency{hz_to_rad(*decl.frequency.min_hz), hz_to_rad(*decl.frequency.max_hz)};
    subs.push_back(s);
  }
  auto sub_of = [&](const std::string& id) -> Subnetwork& {
    return *std::find_if(subs.begin(), subs.end(), [&](const Subnetwork& s) { return s.id == id; });
  };
  for (const auto& [bus, sub] : owner) sub_of(sub).bus_ids.insert(bus);
  for (const Branch& br : p.branches) sub_of(owner.at(br.from_bus)).branch_ids.insert(br.id);
  for (const Generator& g : p.generators)
    if (auto it = owner.find(g.bus); it != owner.end()) sub_of(it->second).generator_ids.insert(g.id);
  for (Subnetwork& s : subs) {
    if (s.bus_ids.empty()) continue;
    s.reference_bus = *s.bus_ids.begin();
    if (s.id == kBaseSubnetwork && p.reference_bus && s.bus_ids.contains(*p.reference_bus))
      s.reference_bus = *p.reference_bus;
  }
  for (const auto& decl : ext.subnetworks)
    if (decl.reference_bus) sub_of(decl.id).reference_bus = *decl.reference_bus;
  if (sub_of(kBaseSubnetwork).bus_ids.empty()) subs.erase(subs.begin());

  for (ConverterInterface& iface : net.interfaces)
    for (ConverterTerminal& t : iface.terminals) t.subnetwork = owner.at(t.bus);

  net.subnetworks = std::move(subs);
  net.buses = std::move(p.buses);
  net.branches = std::move(p.branches);
  net.generators = std::move(p.generators);
  net.corridor = ext.corridor;

  const auto violations = validate_network(net);
  if (!violations.empty()) {
    std::string msg = "network is invalid:";
    for (const auto& v : violations) msg += fmt::format("\n  {}: {}", v.entity, v.rule);
    throw DataError(msg);
  }
  return net;
}

MultiFrequencyNetwork merge_baseline(const CaseDocument& doc, const ExtensionDocument& ext) {
  ExtensionDocument baseline;
  baseline.base_frequency_hz = ext.base_frequency_hz;
  baseline.scenario = ext.scenario;
  return merge(doc, baseline);
}

}  // namespace mfopf
