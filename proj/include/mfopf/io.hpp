#pragma once

#include "mfopf/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfopf {

/// Tables of a Matpower-style case, in the file's own units (MW, MVAr, degrees).
struct CaseDocument {
  struct BusRow {
    int id;
    int type;  // 1 PQ, 2 PV, 3 reference, 4 isolated
    double pd, qd, gs, bs;
    double vmax, vmin;
    double base_kv;
    int line;
  };
  struct GenRow {
    int bus;
    double qmax, qmin;
    int status;
    double pmax, pmin;
    int line;
  };
  struct BranchRow {
    int from, to;
    double r, x, b;
    double rate_a;
    double ratio;
    double angle;  // degrees
    int status;
    std::optional<double> angmin, angmax;  // degrees
    int line;
  };
  struct CostRow {
    int model;  // 1 piecewise linear, 2 polynomial
    std::vector<double> params;
    int line;
  };

  double base_mva = 100.0;
  std::vector<BusRow> buses;
  std::vector<GenRow> generators;
  std::vector<BranchRow> branches;
  std::vector<CostRow> costs;
};

/// Parses Matpower case text (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch,
/// mpc.gencost). Throws DataError naming the offending line.
CaseDocument parse_case(const std::string& text);
CaseDocument load_case(const std::filesystem::path& path);

/// Frequency-independent per-unit data derived from a case.
struct PrimitiveNetwork {
  double base_mva = 100.0;
  double base_omega = 0.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;    // id = 1-based row, status-0 rows kept out of service
  std::vector<Generator> generators;
  std::optional<int> reference_bus;  // first type-3 bus
  std::vector<std::string> warnings;
};

/// Converts case units to per unit and reactances / susceptances given at
/// omega_base (rad/s) into inductances and capacitances.
PrimitiveNetwork derive_primitives(const CaseDocument& doc, double omega_base);

/// Large apparent-power limit used when a case rating is 0 (unlimited).
inline constexpr double kUnlimitedRating = 99.99;
/// Angle-difference limit used when a case gives none.
inline constexpr double kDefaultAngleLimit = std::numbers::pi / 6.0;

/// Multi-frequency extension document (JSON, "format": "mfopf-extension").
struct ExtensionDocument {
  struct Split {
    int bus;
    int twin;
    std::vector<int> branches;  // moved to the twin
    double load_fraction = 0.0;   // share of load moved to the twin
    double shunt_fraction = 0.0;  // share of bus shunt moved to the twin
  };
  struct FrequencyDecl {
    std::optional<double> fixed_hz;
    std::optional<double> min_hz, max_hz;
  };
  struct SubnetworkDecl {
    std::string id;
    FrequencyDecl frequency;
    std::vector<int> branches;
    std::vector<int> buses;
    std::optional<int> reference_bus;
  };
  struct PiBranchDecl {
    double r = 0.0, x = 0.0, b = 0.0;
    double rate = 0.0;  // pu, 0 = unlimited
  };
  struct TerminalDecl {
    int bus;
    std::optional<PiBranchDecl> pi_branch;
    std::optional<double> p_min, p_max, q_min, q_max;
  };
  struct InterfaceDecl {
    std::string id;
    std::array<TerminalDecl, 2> terminals;
    double modulation_index = 0.9;
    bool losses_enabled = false;
    double v_max = 1.1;
    double i_arm_rms_max = 1.0;
    LossCoefficients losses;
  };
  struct HvdcDecl {
    std::vector<int> branches;
    double k_cond = 2.0 / 3.0;
    double k_ins = 1.0;
    bool allow_any = false;
  };
  struct Scenario {
    std::vector<int> branch_outages;
    std::vector<int> generator_outages;
    double load_scale = 1.0;
    struct PmaxScale {
      std::vector<int> generators;
      double factor = 1.0;
    };
    std::vector<PmaxScale> generator_pmax_scale;
  };

  double base_frequency_hz = 50.0;
  std::vector<Split> splits;
  std::vector<SubnetworkDecl> subnetworks;
  std::vector<InterfaceDecl> interfaces;
  std::vector<HvdcDecl> hvdc;
  Corridor corridor;
  Scenario scenario;
};

ExtensionDocument parse_extension(const std::string& json_text);
ExtensionDocument load_extension(const std::filesystem::path& path);

/// Builds the validated multi-frequency network: scenario overrides, bus
/// splits, converter interfaces (with optional Pi branches and internal
/// buses), subnetwork assignment and HVDC flags. Elements not claimed by a
/// declared subnetwork form the fixed-frequency subnetwork "base".
/// Throws DataError when the result violates any network invariant.
MultiFrequencyNetwork merge(const CaseDocument& doc, const ExtensionDocument& ext);

/// The no-upgrade network: the case with the scenario overrides applied and
/// nothing else from the extension.
MultiFrequencyNetwork merge_baseline(const CaseDocument& doc, const ExtensionDocument& ext);

/// Deterministic text dump of a network for diffing and golden tests.
std::string dump_network(const MultiFrequencyNetwork& net);

}  // namespace mfopf
