#pragma once

#include "mfopf/converter.hpp"
#include "mfopf/network.hpp"
#include "mfopf/nlp.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfopf {

enum class ControlKind { LfacOpf, PqOpf, FOpf, Hvdc };

/// Control capability of the frequency conversion interfaces.
///  - LfacOpf: frequencies of variable subnetworks are decision variables.
///  - PqOpf:   variable subnetworks are pinned to the base frequency.
///  - FOpf:    frequency control only; each converter passes reactive power,
///             voltage magnitude and angle straight through.
///  - Hvdc:    HvdcLine branches carry DC flow with the given factors
///             (branch data factors when unset).
struct ControlMode {
  ControlKind kind = ControlKind::LfacOpf;
  std::optional<double> k_cond;
  std::optional<double> k_ins;

  static ControlMode lfac() { return {ControlKind::LfacOpf, {}, {}}; }
  static ControlMode pq() { return {ControlKind::PqOpf, {}, {}}; }
  static ControlMode fopf() { return {ControlKind::FOpf, {}, {}}; }
  static ControlMode hvdc(std::optional<double> k_cond = {}, std::optional<double> k_ins = {}) {
    return {ControlKind::Hvdc, k_cond, k_ins};
  }
};

std::string to_string(const ControlMode& mode);
/// Parses "lfac", "pq", "f" or "hvdc" (case-insensitive).
ControlMode parse_control_mode(const std::string& text);

template <class T>
struct BranchFlow {
  T p_from, q_from, p_to, q_to;
};

/// Pi-model flows with an ideal transformer tap * exp(j shift) on the from
/// side. `y` is the series admittance, g_sh and b_sh the total shunt
/// admittance split evenly between both ends.
template <class T>
BranchFlow<T> pi_branch_flow(const T& vi, const T& vj, const T& ti, const T& tj, const Admittance<T>& y,
                             double g_sh, const T& b_sh, double tap, double shift) {
  using std::cos;
  using std::sin;
  const T dij = ti - tj - shift;
  const T cij = cos(dij), sij = sin(dij);
  const T vv = vi * vj / tap;
  const T vi2 = vi * vi / (tap * tap);
  const T vj2 = vj * vj;
  BranchFlow<T> f;
  f.p_from = vi2 * (y.g + g_sh / 2.0) - vv * (y.g * cij + y.b * sij);
  f.q_from = -vi2 * (y.b + b_sh / 2.0) - vv * (y.g * sij - y.b * cij);
  // cos(-d) = cos d, sin(-d) = -sin d
  f.p_to = vj2 * (y.g + g_sh / 2.0) - vv * (y.g * cij - y.b * sij);
  f.q_to = -vj2 * (y.b + b_sh / 2.0) - vv * (-y.g * sij - y.b * cij);
  return f;
}

/// AC flows of a branch at angular frequency omega (rad/s).
template <class T>
BranchFlow<T> branch_flow(const T& vi, const T& vj, const T& ti, const T& tj, const Branch& br, const T& omega) {
  const Admittance<T> y = series_admittance<T>(br.r, br.l, omega);
  const T b_sh = omega * br.c_shunt;
  return pi_branch_flow<T>(vi, vj, ti, tj, y, br.g_shunt, b_sh, br.tap, br.shift);
}

/// DC flow into a line from the end at voltage vi. The opposite end is
/// hvdc_flow(vj, vi, ...).
template <class T>
T hvdc_flow(const T& vi, const T& vj, double g, double g_sh, double k_cond, double k_ins) {
  const double k = k_cond * k_ins * k_ins / std::sqrt(3.0);
  return k * (vi * vi * (g + 4.0 / 3.0 * g_sh) - vi * vj * g);
}

/// Series conductance used for DC operation of a branch (1 / R).
double dc_conductance(const Branch& br);

/// Operating point keyed by element ids, independent of any variable layout.
struct OpfState {
  std::map<int, double> v;
  std::map<int, double> theta;
  std::map<int, double> p_gen;
  std::map<int, double> q_gen;
  std::map<std::string, double> omega;  // rad/s per subnetwork
  std::map<std::pair<std::string, int>, double> p_conv;  // (interface, terminal)
  std::map<std::pair<std::string, int>, double> q_conv;
};

struct BalanceResiduals {
  std::map<int, double> p;
  std::map<int, double> q;
};

/// Active and reactive power mismatch at every bus, computed directly from
/// the network data. Missing state entries count as zero (omega defaults to
/// the subnetwork's lower frequency bound).
BalanceResiduals nodal_balance_residuals(const OpfState& state, const MultiFrequencyNetwork& net,
                                         const ControlMode& mode = ControlMode::lfac());

/// Total generator cost of a state (out-of-service generators excluded).
double objective(const OpfState& state, const MultiFrequencyNetwork& net);

/// Which physical limit an inequality row encodes.
enum class RowFamily {
  AngleFrom,         // theta_i - theta_j <= angle_max
  AngleTo,           // theta_j - theta_i <= angle_max
  ThermalFrom,       // |s_from|^2 <= s_max^2
  ThermalTo,
  ConverterVoltage,  // V <= v_max of a converter terminal
  ConverterCurrent,  // i_rms^2 <= i_max^2
  CostSegment,       // epigraph of a piecewise-linear cost
  NodalP,
  NodalQ,
  Reference,
  InterfaceBalance,
  CouplingQ,
  CouplingV,
  CouplingTheta,
};

std::string to_string(RowFamily family);

struct RowLabel {
  RowFamily family;
  std::string entity;  // "branch 3", "bus 2", "interface c1:0", "subnetwork lfac"
  int id = 0;          // branch, bus or generator id; terminal index for converters
};

enum class VariableKind { V, Theta, PGen, QGen, Omega, PConv, QConv, CostEpigraph };

struct VariableLabel {
  VariableKind kind;
  std::string entity;
  int id = 0;
};

/// Problem (*) for one network and control mode, exposed as a smooth NLP.
/// Variables: V and theta per bus, p and q per in-service generator, scaled
/// frequency w = omega / omega_base per variable subnetwork, p and q per
/// converter terminal, plus one epigraph variable per piecewise-linear cost.
class OpfProblem : public NlpProblem {
 public:
  OpfProblem(MultiFrequencyNetwork net, ControlMode mode);
  ~OpfProblem() override;
  OpfProblem(OpfProblem&&) noexcept;

  Index num_variables() const override;
  Index num_equalities() const override;
  Index num_inequalities() const override;
  Vector lower_bounds() const override;
  Vector upper_bounds() const override;
  Vector starting_point() const override;
  void evaluate(const Vector& x, NlpEvaluation& out) const override;
  using NlpProblem::evaluate;
  bool has_hessian() const override { return true; }
  Matrix lagrangian_hessian(const Vector& x, double objective_factor, const Vector& y_eq,
                            const Vector& y_ineq) const override;

  const MultiFrequencyNetwork& network() const;
  const ControlMode& mode() const;
  const std::vector<VariableLabel>& variable_labels() const;
  const std::vector<RowLabel>& equality_labels() const;
  const std::vector<RowLabel>& inequality_labels() const;

  /// Index of a bus voltage magnitude / angle, generator or subnetwork frequency variable.
  Index v_index(int bus) const;
  Index theta_index(int bus) const;
  Index pgen_index(int gen) const;
  std::optional<Index> omega_index(const std::string& subnetwork) const;

  OpfState state(const Vector& x) const;
  /// Layout vector for a state; entries missing from the state keep the flat start.
  Vector encode(const OpfState& state) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Per-branch and per-converter quantities of a solved point.
struct BranchReport {
  int id;
  bool dc;
  double p_from, q_from, p_to, q_to;
  double angle_diff;
};

struct ConverterReport {
  std::string interface;
  int terminal;
  int bus;
  double p, q, v, i_rms_sq, loss;
};

struct OpfSolution {
  SolveResult result;
  OpfState state;
  std::vector<BranchReport> branches;
  std::vector<ConverterReport> converters;
  Vector inequality_values;  // h(x), <= 0 when feasible
};

OpfSolution extract_solution(const OpfProblem& problem, SolveResult result);

/// Assemble and solve in one call.
OpfSolution solve_opf(const MultiFrequencyNetwork& net, const ControlMode& mode, const SolverOptions& options = {},
                      const std::optional<Vector>& x0 = std::nullopt);

}  // namespace mfopf
