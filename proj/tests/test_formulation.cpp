#include "fixtures.hpp"
#include "mfopf/formulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mfopf;

namespace {

Bus load_bus(int id, double p = 0.0, double q = 0.0) {
  Bus b;
  b.id = id;
  b.p_load = p;
  b.q_load = q;
  return b;
}

const double kW0 = hz_to_rad(50.0);

Branch line(int id, int from, int to, double r, double x) {
  Branch br;
  br.id = id;
  br.from_bus = from;
  br.to_bus = to;
  br.r = r;
  br.l = x / kW0;
  return br;
}

MultiFrequencyNetwork two_bus() {
  MultiFrequencyNetwork net;
  net.buses = {load_bus(1), load_bus(2, 0.5, 0.1)};
  net.branches = {line(1, 1, 2, 0.01, 0.1)};
  Generator g;
  g.id = 1;
  g.bus = 1;
  g.p_max = 2.0;
  g.q_min = -1.0;
  g.q_max = 1.0;
  g.cost = PolynomialCost{{0.0, 10.0}};
  net.generators = {g};
  Subnetwork s;
  s.id = "main";
  s.frequency = FixedFrequency{kW0};
  s.bus_ids = {1, 2};
  s.branch_ids = {1};
  s.generator_ids = {1};
  s.reference_bus = 1;
  net.subnetworks = {s};
  return net;
}

// Twin of bus 2 in a variable-frequency subnetwork behind a back-to-back converter.
MultiFrequencyNetwork two_bus_with_converter() {
  auto net = two_bus();
  net.buses.push_back(load_bus(3));
  net.branches.push_back(line(2, 3, 2, 0.01, 0.1));
  net.subnetworks[0].bus_ids.insert(3);
  net.subnetworks[0].branch_ids.insert(2);
  net.buses.push_back(load_bus(4, 0.2));
  Subnetwork lf;
  lf.id = "lf";
  lf.frequency = VariableFrequency{hz_to_rad(1.0), hz_to_rad(50.0)};
  lf.bus_ids = {4};
  lf.reference_bus = 4;
  net.subnetworks.push_back(lf);
  ConverterInterface c;
  c.id = "c";
  c.terminals[0].bus = 3;
  c.terminals[0].subnetwork = "main";
  c.terminals[1].bus = 4;
  c.terminals[1].subnetwork = "lf";
  net.interfaces = {c};
  return net;
}

std::size_t count(const std::vector<RowLabel>& rows, RowFamily family) {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [family](const RowLabel& r) { return r.family == family; }));
}

std::size_t count(const std::vector<VariableLabel>& vars, VariableKind kind) {
  return static_cast<std::size_t>(
      std::count_if(vars.begin(), vars.end(), [kind](const VariableLabel& v) { return v.kind == kind; }));
}

}  // namespace

TEST_SUITE("formulation") {

TEST_CASE("branch flow of a lossless line") {
  Branch br = line(1, 1, 2, 0.0, 0.1);
  const auto f = branch_flow(1.0, 1.0, 0.1, 0.0, br, kW0);
  CHECK(f.p_from == doctest::Approx(std::sin(0.1) / 0.1));
  CHECK(f.p_from == doctest::Approx(0.998334).epsilon(1e-6));
  CHECK(f.q_from == doctest::Approx(0.049958).epsilon(1e-5));
  CHECK(f.p_to == doctest::Approx(-f.p_from));
}

TEST_CASE("branch flow vanishes at equal voltages without shunts") {
  const auto f = branch_flow(1.0, 1.0, 0.0, 0.0, line(1, 1, 2, 0.01, 0.1), kW0);
  CHECK(f.p_from == doctest::Approx(0.0));
  CHECK(f.q_from == doctest::Approx(0.0));
}

TEST_CASE("line charging produces reactive injection at both ends") {
  Branch br = line(1, 1, 2, 0.01, 0.1);
  br.c_shunt = 0.2 / kW0;
  const auto f = branch_flow(1.0, 1.0, 0.0, 0.0, br, kW0);
  CHECK(f.q_from == doctest::Approx(-0.1));
  CHECK(f.q_to == doctest::Approx(-0.1));
  // Charging halves with frequency.
  CHECK(branch_flow(1.0, 1.0, 0.0, 0.0, br, kW0 / 2.0).q_from == doctest::Approx(-0.05));
}

TEST_CASE("branch flow agrees with complex arithmetic") {
  Branch br = line(1, 1, 2, 0.02, 0.15);
  br.c_shunt = 0.04 / kW0;
  br.tap = 1.05;
  br.shift = 0.03;
  const double w = kW0 * 0.3;
  using cd = std::complex<double>;
  const cd vi = std::polar(1.02, 0.07), vj = std::polar(0.97, -0.02);
  const cd ys = 1.0 / cd(br.r, w * br.l), ysh(0.0, w * br.c_shunt / 2.0);
  const cd t = std::polar(br.tap, br.shift);
  const cd i_f = (ys + ysh) / std::norm(t) * vi - ys / std::conj(t) * vj;
  const cd i_t = (ys + ysh) * vj - ys / t * vi;
  const cd s_f = vi * std::conj(i_f), s_t = vj * std::conj(i_t);
  const auto f = branch_flow(1.02, 0.97, 0.07, -0.02, br, w);
  CHECK(f.p_from == doctest::Approx(s_f.real()).epsilon(1e-12));
  CHECK(f.q_from == doctest::Approx(s_f.imag()).epsilon(1e-12));
  CHECK(f.p_to == doctest::Approx(s_t.real()).epsilon(1e-12));
  CHECK(f.q_to == doctest::Approx(s_t.imag()).epsilon(1e-12));
}

TEST_CASE("hvdc flow") {
  CHECK(hvdc_flow(1.0, 0.96, 1.0, 0.0, 2.0 / 3.0, 1.0) == doctest::Approx(0.0153960).epsilon(1e-6));
  CHECK(hvdc_flow(1.0, 1.0, 1.0, 0.0, 2.0 / 3.0, 1.0) == doctest::Approx(0.0));
  const double a = hvdc_flow(1.0, 0.96, 1.0, 0.0, 2.0 / 3.0, 1.0);
  const double b = hvdc_flow(1.0, 0.96, 1.0, 0.0, 1.0, 1.0);
  CHECK(a / b == doctest::Approx(2.0 / 3.0));
  CHECK(hvdc_flow(1.0, 0.96, 1.0, 0.0, 1.0, std::sqrt(2.0)) == doctest::Approx(2.0 * b));
  Branch lossless = line(1, 1, 2, 0.0, 0.1);
  CHECK_THROWS_AS(dc_conductance(lossless), ConfigError);
}

TEST_CASE("nodal residuals of a flat state") {
  const auto net = two_bus();
  OpfState s;
  s.v = {{1, 1.0}, {2, 1.0}};
  s.theta = {{1, 0.0}, {2, 0.0}};
  s.p_gen = {{1, 0.5}};
  const auto r = nodal_balance_residuals(s, net);
  CHECK(r.p.at(1) == doctest::Approx(0.5));
  CHECK(r.p.at(2) == doctest::Approx(-0.5));
  CHECK(r.q.at(2) == doctest::Approx(-0.1));
}

TEST_CASE("nodal residuals vanish at a power flow solution") {
  // Lossless line: bus 2 draws p at angle -asin(p x).
  auto net = two_bus();
  net.branches[0].r = 0.0;
  net.buses[1].q_load = 0.0;
  OpfState s;
  const double d = std::asin(0.5 * 0.1);
  s.v = {{1, 1.0}, {2, 1.0}};
  s.theta = {{1, 0.0}, {2, -d}};
  s.p_gen = {{1, 0.5}};
  s.q_gen = {{1, (1.0 - std::cos(d)) / 0.1}};
  const auto r = nodal_balance_residuals(s, net);
  CHECK(std::abs(r.p.at(1)) < 1e-12);
  CHECK(std::abs(r.p.at(2)) < 1e-12);
  CHECK(std::abs(r.q.at(1)) < 1e-12);
  CHECK(r.q.at(2) == doctest::Approx(-(1.0 - std::cos(d)) / 0.1));
}

TEST_CASE("objective sums generator costs") {
  auto net = two_bus();
  OpfState s;
  s.p_gen = {{1, 2.0}};
  CHECK(objective(s, net) == doctest::Approx(20.0));
  net.generators[0].in_service = false;
  CHECK(objective(s, net) == 0.0);
}

TEST_CASE("problem dimensions of a single-frequency network") {
  const OpfProblem p(two_bus(), ControlMode::lfac());
  CHECK(p.num_variables() == 6);
  CHECK(count(p.equality_labels(), RowFamily::NodalP) == 2);
  CHECK(count(p.equality_labels(), RowFamily::NodalQ) == 2);
  CHECK(count(p.equality_labels(), RowFamily::Reference) == 1);
  CHECK(p.num_equalities() == 5);
  CHECK(count(p.inequality_labels(), RowFamily::AngleFrom) == 1);
  CHECK(count(p.inequality_labels(), RowFamily::ThermalFrom) == 1);
  CHECK_FALSE(p.omega_index("main").has_value());
}

TEST_CASE("a variable subnetwork with a converter adds frequency and converter variables") {
  const auto net = two_bus_with_converter();
  REQUIRE(validate_network(net).empty());
  const OpfProblem base(two_bus(), ControlMode::lfac());
  const OpfProblem p(net, ControlMode::lfac());
  CHECK(count(p.variable_labels(), VariableKind::Omega) == 1);
  CHECK(count(p.variable_labels(), VariableKind::PConv) == 2);
  CHECK(count(p.variable_labels(), VariableKind::QConv) == 2);
  CHECK(count(p.equality_labels(), RowFamily::InterfaceBalance) == 1);
  CHECK(count(p.equality_labels(), RowFamily::Reference) == 2);
  CHECK(count(p.inequality_labels(), RowFamily::ConverterVoltage) == 2);
  CHECK(count(p.inequality_labels(), RowFamily::ConverterCurrent) == 2);
  CHECK(p.omega_index("lf").has_value());

  const OpfProblem pq(net, ControlMode::pq());
  const auto lb = pq.lower_bounds(), ub = pq.upper_bounds();
  const auto w = *pq.omega_index("lf");
  CHECK(lb[w] == doctest::Approx(1.0));
  CHECK(ub[w] == doctest::Approx(1.0));

  const OpfProblem f(net, ControlMode::fopf());
  CHECK(count(f.equality_labels(), RowFamily::CouplingQ) == 1);
  CHECK(count(f.equality_labels(), RowFamily::CouplingV) == 1);
  CHECK(count(f.equality_labels(), RowFamily::CouplingTheta) == 1);
}

TEST_CASE("state and encode round trip") {
  const OpfProblem p(two_bus_with_converter(), ControlMode::lfac());
  Vector x = p.starting_point();
  for (Index i = 0; i < x.size(); ++i) x[i] += 0.01 * static_cast<double>(i + 1);
  const auto s = p.state(x);
  CHECK((p.encode(s) - x).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.omega.at("lf") == doctest::Approx(x[*p.omega_index("lf")] * p.network().base_omega));
}

TEST_CASE("the optimizer objective matches the direct cost") {
  const OpfProblem p(two_bus(), ControlMode::lfac());
  Vector x = p.starting_point();
  x[p.pgen_index(1)] = 0.7;
  CHECK(p.evaluate(x).objective == doctest::Approx(objective(p.state(x), p.network())));
}

TEST_CASE("optimizer equality rows reproduce the nodal residuals") {
  const OpfProblem p(two_bus_with_converter(), ControlMode::lfac());
  Vector x = p.starting_point();
  for (Index i = 0; i < x.size(); ++i) x[i] += 0.003 * static_cast<double>(i % 5);
  const auto r = nodal_balance_residuals(p.state(x), p.network());
  const auto e = p.evaluate(x);
  const auto& labels = p.equality_labels();
  int seen = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].family == RowFamily::NodalP) {
      CHECK(std::abs(e.equalities[static_cast<Index>(k)]) == doctest::Approx(std::abs(r.p.at(labels[k].id))));
      ++seen;
    } else if (labels[k].family == RowFamily::NodalQ) {
      CHECK(std::abs(e.equalities[static_cast<Index>(k)]) == doctest::Approx(std::abs(r.q.at(labels[k].id))));
      ++seen;
    }
  }
  CHECK(seen == 8);
}

TEST_CASE("solving the two-bus network yields a balanced, cheaper-than-naive dispatch") {
  const auto sol = solve_opf(two_bus(), ControlMode::lfac());
  REQUIRE(sol.result.optimal());
  const auto r = nodal_balance_residuals(sol.state, two_bus());
  for (const auto& [bus, v] : r.p) CHECK(std::abs(v) < 1e-6);
  CHECK(sol.state.p_gen.at(1) > 0.5);
  CHECK(sol.result.objective == doctest::Approx(10.0 * sol.state.p_gen.at(1)));
}

}  // TEST_SUITE
