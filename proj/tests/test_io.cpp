#include "fixtures.hpp"
#include "mfopf/io.hpp"

#include <doctest.h>

#include <algorithm>
#include <string>

using namespace mfopf;

namespace {

const char* kMinimal = R"(function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	10	0	-20	1	1	0	230	1	1.1	0.9;
	3	1	30	5	0	10	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	0	0	0	0	0	1	-30	30;
	2	3	0.01	0.1	0.02	120	0	0	0	0	1	0	0;
];
mpc.gencost = [
	2	0	0	3	0.01	10	0;
];
)";

std::string with_line(const std::string& text, const std::string& from, const std::string& to) {
  std::string s = text;
  s.replace(s.find(from), from.size(), to);
  return s;
}

ExtensionDocument split_ext() {
  return parse_extension(R"({
    "format": "mfopf-extension", "version": 1,
    "splits": [{"bus": 2, "twin": 4, "branches": [2]}],
    "subnetworks": [{"id": "lf", "frequency": {"min_hz": 1, "max_hz": 50}, "branches": [2]}],
    "interfaces": [{"id": "c", "terminals": [{"bus": 2}, {"bus": 4}]}]
  })");
}

int degree(const MultiFrequencyNetwork& net, int bus) {
  return static_cast<int>(std::count_if(net.branches.begin(), net.branches.end(), [bus](const Branch& b) {
    return b.in_service && (b.from_bus == bus || b.to_bus == bus);
  }));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("parses the tables of a minimal case") {
  const auto doc = parse_case(kMinimal);
  CHECK(doc.base_mva == 100.0);
  REQUIRE(doc.buses.size() == 3);
  CHECK(doc.buses[1].pd == 50.0);
  REQUIRE(doc.branches.size() == 2);
  CHECK(doc.branches[0].angmax == 30.0);
  REQUIRE(doc.costs.size() == 1);
  CHECK(doc.costs[0].params == std::vector<double>{0.01, 10, 0});
}

TEST_CASE("a short row names its line") {
  const auto bad = with_line(kMinimal, "2	1	50	10	0	-20	1	1	0	230	1	1.1	0.9;", "2	1	50	10;");
  try {
    parse_case(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
}

TEST_CASE("malformed numbers are rejected") {
  CHECK_THROWS_AS(parse_case(with_line(kMinimal, "0.01	10	0;", "0.01	1x0	0;")), DataError);
  CHECK_THROWS_AS(parse_case("mpc.baseMVA = 100;\n"), DataError);
}

TEST_CASE("per-unit conversion and primitives") {
  const double w0 = hz_to_rad(50.0);
  const auto p = derive_primitives(parse_case(kMinimal), w0);
  CHECK(p.reference_bus == 1);
  CHECK(p.buses[1].p_load == doctest::Approx(0.5));
  CHECK(p.branches[0].l == doctest::Approx(3.18310e-4).epsilon(1e-5));
  CHECK(p.branches[0].c_shunt == doctest::Approx(6.36620e-5).epsilon(1e-5));
  CHECK(p.branches[0].l * w0 == doctest::Approx(0.1));
  CHECK(derive_primitives(parse_case(kMinimal), hz_to_rad(60.0)).branches[0].l ==
        doctest::Approx(2.65258e-4).epsilon(1e-5));
  REQUIRE(p.buses[1].shunt.has_value());
  CHECK(p.buses[1].shunt->kind == ShuntElement::Kind::Inductive);
  CHECK(shunt_susceptance(*p.buses[1].shunt, w0) == doctest::Approx(-0.2));
  CHECK(shunt_susceptance(*p.buses[2].shunt, w0) == doctest::Approx(0.1));
  // Quadratic cost 0.01 MW^2 + 10 MW becomes 100 p^2 + 1000 p in per unit.
  const auto& poly = std::get<PolynomialCost>(p.generators[0].cost);
  CHECK(poly.coefficients == std::vector<double>{0.0, 1000.0, 100.0});
}

TEST_CASE("zero rating becomes unlimited with a warning") {
  const auto p = derive_primitives(parse_case(kMinimal), hz_to_rad(50.0));
  CHECK(p.branches[0].s_max == kUnlimitedRating);
  CHECK(p.branches[1].s_max == doctest::Approx(1.2));
  REQUIRE(p.warnings.size() == 1);
  CHECK(p.warnings[0].find("branch 1") != std::string::npos);
  CHECK(p.branches[1].angle_max == kDefaultAngleLimit);
}

TEST_CASE("an empty extension gives a single fixed subnetwork") {
  const auto net = merge(parse_case(kMinimal), ExtensionDocument{});
  REQUIRE(net.subnetworks.size() == 1);
  CHECK_FALSE(net.subnetworks[0].is_variable());
  CHECK(net.subnetworks[0].bus_ids.size() == 3);
  CHECK(net.subnetworks[0].reference_bus == 1);
  CHECK(validate_network(net).empty());
}

TEST_CASE("a branch outage removes the branch") {
  auto ext = ExtensionDocument{};
  ext.scenario.branch_outages = {2};
  // Bus 3 loses its only connection; merge still succeeds structurally.
  const auto net = merge_baseline(parse_case(kMinimal), ext);
  CHECK(net.branches.size() == 1);
  CHECK(degree(net, 3) == 0);
}

TEST_CASE("load scaling") {
  ExtensionDocument ext;
  ext.scenario.load_scale = 1.5;
  const auto net = merge_baseline(parse_case(kMinimal), ext);
  CHECK(net.bus(2).p_load == doctest::Approx(0.75));
}

TEST_CASE("splitting a bus moves the listed branches to the twin") {
  const auto net = merge(parse_case(kMinimal), split_ext());
  CHECK(degree(net, 2) == 1);
  CHECK(degree(net, 4) == 1);
  CHECK(net.subnetwork_of_bus(4) == "lf");
  CHECK(net.subnetwork_of_bus(3) == "lf");
  CHECK(net.subnetwork_of_bus(2) == "base");
  CHECK(net.subnetwork("lf").is_variable());
  CHECK(validate_network(net).empty());
}

TEST_CASE("extension documents are checked strictly") {
  CHECK_THROWS_AS(parse_extension("{"), DataError);
  CHECK_THROWS_AS(parse_extension(R"({"format": "other", "version": 1})"), DataError);
  CHECK_THROWS_AS(parse_extension(R"({"format": "mfopf-extension", "version": 7})"), DataError);
  CHECK_THROWS_AS(parse_extension(R"({"format": "mfopf-extension", "version": 1, "colour": 1})"), DataError);
  CHECK_THROWS_AS(parse_extension(R"({"format": "mfopf-extension", "version": 1,
      "subnetworks": [{"id": "x", "frequency": {"fixed_hz": 10, "min_hz": 1, "max_hz": 2}}]})"),
                  DataError);
  CHECK_THROWS_AS(parse_extension(R"({"format": "mfopf-extension", "version": 1,
      "interfaces": [{"id": "c", "terminals": [{"bus": 2}]}]})"),
                  DataError);
}

TEST_CASE("merge rejects references to unknown elements") {
  auto ext = split_ext();
  ext.interfaces[0].terminals[1].bus = 99;
  try {
    merge(parse_case(kMinimal), ext);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
  auto bad = split_ext();
  bad.subnetworks[0].id = "base";
  CHECK_THROWS_AS(merge(parse_case(kMinimal), bad), DataError);
}

TEST_CASE("network dump is deterministic") {
  const auto a = dump_network(merge(parse_case(kMinimal), split_ext()));
  const auto b = dump_network(merge(parse_case(kMinimal), split_ext()));
  CHECK(a == b);
  CHECK(a.find("subnetwork lf variable") != std::string::npos);
  CHECK(a.find("interface c") != std::string::npos);
}

TEST_CASE("bundled fixtures load and validate") {
  for (const auto& [c, e] : std::vector<std::pair<std::string, std::string>>{
           {"two_bus.m", ""},
           {"three_bus.m", ""},
           {"three_bus_radial.m", "three_bus_radial_converter.json"},
           {"corridor.m", "corridor_lfac.json"},
           {"corridor.m", "corridor_lfac_lossy.json"},
           {"corridor_uncongested.m", "corridor_uncongested.json"}}) {
    CAPTURE(c);
    const auto net = fixtures::network(c, e);
    CHECK(validate_network(net).empty());
  }
}

}  // TEST_SUITE
