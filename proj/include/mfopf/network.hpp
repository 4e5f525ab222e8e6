#pragma once

#include "mfopf/types.hpp"

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mfopf {

// Frequency-parametric network model. Every reactive quantity is stored as a
// frequency-independent primitive (inductance or capacitance, per-unit
// seconds) and turned into an admittance at a supplied angular frequency.

struct FixedFrequency {
  double omega;  // rad/s
};

struct VariableFrequency {
  double omega_min;  // rad/s
  double omega_max;  // rad/s
};

using FrequencySpec = std::variant<FixedFrequency, VariableFrequency>;

struct Subnetwork {
  std::string id;
  FrequencySpec frequency = FixedFrequency{hz_to_rad(50.0)};
  std::set<int> bus_ids;
  std::set<int> branch_ids;
  std::set<int> generator_ids;
  int reference_bus = 0;

  bool is_variable() const { return std::holds_alternative<VariableFrequency>(frequency); }
  /// Lower and upper frequency bound in rad/s (equal for fixed subnetworks).
  std::pair<double, double> omega_range() const;
};

struct ShuntElement {
  enum class Kind { Capacitive, Inductive };
  Kind kind = Kind::Capacitive;
  double value = 0.0;  // capacitance C or inductance L, per-unit seconds
};

struct Bus {
  int id = 0;
  double v_min = 0.9;
  double v_max = 1.1;
  double g_shunt = 0.0;
  std::optional<ShuntElement> shunt;
  double p_load = 0.0;
  double q_load = 0.0;
  double base_kv = 0.0;
  /// Empty for buses read from the case; "split:<bus>" for split twins and
  /// "converter:<iface>:<k>" for converter-internal nodes.
  std::string provenance;
};

enum class BranchKind { AcLine, Transformer, HvdcLine };

/// Conductor-utilization and insulation factors of a line that may be
/// operated as an HVDC corridor.
struct HvdcFactors {
  double k_cond = 2.0 / 3.0;
  double k_ins = 1.0;
  bool allow_any = false;  // accept values outside {2/3, 1} x {1, sqrt 2}
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;        // series resistance, pu
  double l = 0.0;        // series inductance, pu s (reactance at omega = 1)
  double g_shunt = 0.0;  // total shunt conductance, split between ends
  double c_shunt = 0.0;  // total shunt capacitance, pu s, split between ends
  double tap = 1.0;
  double shift = 0.0;  // rad
  double s_max = 99.99;
  double angle_max = std::numbers::pi / 6.0;
  BranchKind kind = BranchKind::AcLine;
  HvdcFactors hvdc;
  bool in_service = true;
  std::string provenance;
};

struct PolynomialCost {
  std::vector<double> coefficients;  // ascending powers of p (pu)
};

struct PiecewiseLinearCost {
  std::vector<std::pair<double, double>> points;  // (p pu, cost), increasing p
};

using CostFunction = std::variant<PolynomialCost, PiecewiseLinearCost>;

struct Generator {
  int id = 0;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  CostFunction cost = PolynomialCost{};
  bool in_service = true;
};

/// Converter loss coefficients in per-unit-consistent form.
struct LossCoefficients {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;  // conduction
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;  // switching
};

struct ConverterTerminal {
  int bus = 0;  // bus the converter injects into
  std::string subnetwork;
  std::optional<int> pi_branch;  // filter / transformer branch, if modeled
  double v_max = 1.1;            // maximum converter voltage, pu
  double i_arm_rms_max = 1.0;    // maximum arm rms current, pu
  std::optional<double> p_min, p_max, q_min, q_max;
};

struct ConverterInterface {
  std::string id;
  std::array<ConverterTerminal, 2> terminals;
  double modulation_index = 0.9;
  LossCoefficients losses;
  bool losses_enabled = false;
};

/// Branches and buses watched by binding-constraint regime classification.
struct Corridor {
  std::set<int> branch_ids;
  std::set<int> bus_ids;
};

struct MultiFrequencyNetwork {
  double base_mva = 100.0;
  double base_omega = hz_to_rad(50.0);
  std::vector<Subnetwork> subnetworks;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<ConverterInterface> interfaces;
  Corridor corridor;

  const Bus& bus(int id) const;
  const Branch& branch(int id) const;
  const Subnetwork& subnetwork(const std::string& id) const;
  /// Subnetwork id owning a bus; empty if the bus is not assigned.
  std::string subnetwork_of_bus(int bus_id) const;
};

template <class T>
struct Admittance {
  T g;
  T b;
};

/// Series admittance of R + j omega L.
template <class T>
Admittance<T> series_admittance(double r, double l, const T& omega) {
  const T x = omega * l;
  const T denom = r * r + x * x;
  return {r / denom, -x / denom};
}

/// Frequency-dependent susceptance of a shunt capacitor or reactor. Throws
/// EvaluationError for an inductive element at omega = 0.
template <class T>
T shunt_susceptance(const ShuntElement& element, const T& omega) {
  if (element.kind == ShuntElement::Kind::Capacitive) return omega * element.value;
  if (omega == 0.0) throw EvaluationError("inductive shunt evaluated at zero frequency");
  return T(-1.0) / (omega * element.value);
}

struct Violation {
  std::string entity;  // e.g. "branch 7", "subnetwork lfac"
  std::string rule;

  bool operator==(const Violation&) const = default;
};

/// Checks every structural invariant of the network. Empty result means the
/// network is well formed.
std::vector<Violation> validate_network(const MultiFrequencyNetwork& net);

/// Cost of one generator at active power p (pu). Piecewise-linear costs
/// extrapolate along their end segments.
double evaluate_cost(const CostFunction& cost, double p);

}  // namespace mfopf
