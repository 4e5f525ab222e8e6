#include "mfopf/io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mfopf {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw DataError(fmt::format("{}: expected an object", where));
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw DataError(fmt::format("{}: unknown field '{}'", where, key));
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw DataError(fmt::format("{}: missing field '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: field '{}': {}", where, key, e.what()));
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return get<T>(j, key, where);
}

ExtensionDocument::TerminalDecl parse_terminal(const json& j, const std::string& where) {
  check_keys(j, {"bus", "pi_branch", "p_min", "p_max", "q_min", "q_max"}, where);
  ExtensionDocument::TerminalDecl t{get<int>(j, "bus", where), std::nullopt, get_opt<double>(j, "p_min", where),
                                    get_opt<double>(j, "p_max", where), get_opt<double>(j, "q_min", where),
                                    get_opt<double>(j, "q_max", where)};
  if (j.contains("pi_branch")) {
    const json& pb = j.at("pi_branch");
    const std::string w = where + ".pi_branch";
    check_keys(pb, {"r", "x", "b", "rate"}, w);
    t.pi_branch = ExtensionDocument::PiBranchDecl{get_or(pb, "r", 0.0, w), get_or(pb, "x", 0.0, w),
                                                  get_or(pb, "b", 0.0, w), get_or(pb, "rate", 0.0, w)};
  }
  return t;
}

}  // namespace

ExtensionDocument parse_extension(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("extension document: {}", e.what()));
  }
  const std::string top = "extension";
  check_keys(root, {"format", "version", "base_frequency_hz", "splits", "subnetworks", "interfaces", "hvdc",
                    "corridor", "scenario"},
             top);
  if (get<std::string>(root, "format", top) != "mfopf-extension")
    throw DataError("extension: format must be \"mfopf-extension\"");
  if (const int v = get<int>(root, "version", top); v != kSchemaVersion)
    throw DataError(fmt::format("extension: unsupported schema version {} (expected {})", v, kSchemaVersion));

  ExtensionDocument ext;
  ext.base_frequency_hz = get_or(root, "base_frequency_hz", 50.0, top);

  for (const json& s : root.value("splits", json::array())) {
    const std::string w = "splits";
    check_keys(s, {"bus", "twin", "branches", "load_fraction", "shunt_fraction"}, w);
    ext.splits.push_back({get<int>(s, "bus", w), get<int>(s, "twin", w), get_or(s, "branches", std::vector<int>{}, w),
                          get_or(s, "load_fraction", 0.0, w), get_or(s, "shunt_fraction", 0.0, w)});
  }

  for (const json& s : root.value("subnetworks", json::array())) {
    const std::string w = "subnetworks";
    check_keys(s, {"id", "frequency", "branches", "buses", "reference_bus"}, w);
    ExtensionDocument::SubnetworkDecl d;
    d.id = get<std::string>(s, "id", w);
    const std::string wf = fmt::format("subnetwork {}.frequency", d.id);
    const json& f = s.at("frequency");
    check_keys(f, {"fixed_hz", "min_hz", "max_hz"}, wf);
    d.frequency = {get_opt<double>(f, "fixed_hz", wf), get_opt<double>(f, "min_hz", wf),
                   get_opt<double>(f, "max_hz", wf)};
    if (d.frequency.fixed_hz.has_value() == (d.frequency.min_hz.has_value() || d.frequency.max_hz.has_value()) ||
        d.frequency.min_hz.has_value() != d.frequency.max_hz.has_value())
      throw DataError(fmt::format("{}: give either fixed_hz or both min_hz and max_hz", wf));
    d.branches = get_or(s, "branches", std::vector<int>{}, w);
    d.buses = get_or(s, "buses", std::vector<int>{}, w);
    d.reference_bus = get_opt<int>(s, "reference_bus", w);
    ext.subnetworks.push_back(std::move(d));
  }

  for (const json& s : root.value("interfaces", json::array())) {
    const std::string w = "interfaces";
    check_keys(s, {"id", "terminals", "modulation_index", "losses_enabled", "v_max", "i_arm_rms_max",
                   "loss_coefficients"},
               w);
    ExtensionDocument::InterfaceDecl d;
    d.id = get<std::string>(s, "id", w);
    const std::string wi = fmt::format("interface {}", d.id);
    const json& terms = s.at("terminals");
    if (!terms.is_array() || terms.size() != 2) throw DataError(wi + ": needs exactly two terminals");
    d.terminals = {parse_terminal(terms[0], wi + ".terminals[0]"), parse_terminal(terms[1], wi + ".terminals[1]")};
    d.modulation_index = get_or(s, "modulation_index", 0.9, wi);
    d.losses_enabled = get_or(s, "losses_enabled", false, wi);
    d.v_max = get_or(s, "v_max", 1.1, wi);
    d.i_arm_rms_max = get_or(s, "i_arm_rms_max", 1.0, wi);
    if (s.contains("loss_coefficients")) {
      const json& c = s.at("loss_coefficients");
      const std::string wc = wi + ".loss_coefficients";
      check_keys(c, {"c1", "c2", "c3", "s1", "s2", "s3"}, wc);
      d.losses = {get_or(c, "c1", 0.0, wc), get_or(c, "c2", 0.0, wc), get_or(c, "c3", 0.0, wc),
                  get_or(c, "s1", 0.0, wc), get_or(c, "s2", 0.0, wc), get_or(c, "s3", 0.0, wc)};
    }
    ext.interfaces.push_back(std::move(d));
  }

  for (const json& s : root.value("hvdc", json::array())) {
    const std::string w = "hvdc";
    check_keys(s, {"branches", "k_cond", "k_ins", "allow_any"}, w);
    ext.hvdc.push_back({get<std::vector<int>>(s, "branches", w), get_or(s, "k_cond", 2.0 / 3.0, w),
                        get_or(s, "k_ins", 1.0, w), get_or(s, "allow_any", false, w)});
  }

  if (root.contains("corridor")) {
    const json& c = root.at("corridor");
    check_keys(c, {"branches", "buses"}, "corridor");
    for (int id : get_or(c, "branches", std::vector<int>{}, "corridor")) ext.corridor.branch_ids.insert(id);
    for (int id : get_or(c, "buses", std::vector<int>{}, "corridor")) ext.corridor.bus_ids.insert(id);
  }

  if (root.contains("scenario")) {
    const json& s = root.at("scenario");
    const std::string w = "scenario";
    check_keys(s, {"branch_outages", "generator_outages", "load_scale", "generator_pmax_scale"}, w);
    ext.scenario.branch_outages = get_or(s, "branch_outages", std::vector<int>{}, w);
    ext.scenario.generator_outages = get_or(s, "generator_outages", std::vector<int>{}, w);
    ext.scenario.load_scale = get_or(s, "load_scale", 1.0, w);
    for (const json& p : s.value("generator_pmax_scale", json::array())) {
      check_keys(p, {"generators", "factor"}, "scenario.generator_pmax_scale");
      ext.scenario.generator_pmax_scale.push_back({get<std::vector<int>>(p, "generators", w), get<double>(p, "factor", w)});
    }
  }
  return ext;
}

ExtensionDocument load_extension(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read extension document {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_extension(buf.str());
}

}  // namespace mfopf
