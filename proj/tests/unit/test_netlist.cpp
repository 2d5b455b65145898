#include <doctest.h>

#include <random>

#include "gatescope/netlist.hpp"
#include "support.hpp"

using namespace gatescope;
using gstest::Builder;

TEST_CASE("add and connect keep both directions consistent") {
  Netlist nl(gstest::cells());
  NetId n1 = nl.add_net("n1"), n2 = nl.add_net("n2");
  GateId g = nl.add_gate("inv", "INV");
  nl.connect(g, "A", n1);
  nl.connect(g, "Y", n2);
  REQUIRE(nl.net(n2)->drivers.size() == 1);
  CHECK(nl.net(n2)->drivers[0] == Endpoint::at_pin(g, "Y", n2));
  CHECK(nl.net(n1)->sinks == std::vector<Endpoint>{Endpoint::at_pin(g, "A", n1)});
  CHECK_FALSE(nl.check_consistency().has_value());
  CHECK(g.value == 1);
  CHECK(n1.value == 1);
}

TEST_CASE("construction errors") {
  Netlist nl(gstest::cells());
  NetId n1 = nl.add_net("n1"), n2 = nl.add_net("n2");
  GateId g = nl.add_gate("inv", "INV");
  nl.connect(g, "A", n1);
  CHECK_THROWS_AS(nl.connect(g, "A", n2), NetlistError);
  CHECK_THROWS_AS(nl.add_gate("x", "XYZ"), NetlistError);
  CHECK_THROWS_AS(nl.connect(g, "Z", n2), NetlistError);
  CHECK_THROWS_AS(nl.connect(GateId{99}, "A", n2), NetlistError);
  CHECK_THROWS_AS(nl.connect(g, "Y", NetId{99}), NetlistError);
}

TEST_CASE("ids are never reused") {
  Netlist nl(gstest::cells());
  GateId a = nl.add_gate("a", "INV");
  nl.remove_gate(a);
  GateId b = nl.add_gate("b", "INV");
  CHECK(b.value == a.value + 1);
  NetId n = nl.add_net("n");
  nl.remove_net(n);
  CHECK(nl.add_net("m").value == n.value + 1);
}

TEST_CASE("removing a gate leaves no dangling endpoints") {
  Builder b;
  NetId a = b.input("a");
  NetId x = b.gate("INV", {a});
  GateId g1 = b.last_gate();
  NetId y = b.gate("AND2", {x, a});
  b.output(y);
  b.nl.remove_gate(g1);
  CHECK(b.nl.net(x)->drivers.empty());
  for (const auto& s : b.nl.net(a)->sinks) CHECK(s.gate != g1);
  CHECK_FALSE(b.nl.check_consistency().has_value());
}

TEST_CASE("module creation, ports and cycles") {
  Builder b;
  NetId a = b.input("a");
  NetId x = b.gate("INV", {a});
  GateId g1 = b.last_gate();
  NetId y = b.gate("INV", {x});
  GateId g2 = b.last_gate();
  NetId z = b.gate("INV", {y});
  b.output(z);
  Netlist& nl = b.nl;
  ModuleId m = nl.create_module("m", nl.top_module(), {g1, g2});
  CHECK(nl.module(m)->gates == std::set<GateId>{g1, g2});
  CHECK(nl.gate(g1)->module == m);
  const auto ports = nl.module_ports(m);
  REQUIRE(ports.size() == 2);
  CHECK(ports[0] == ModulePort{a, PortDirection::input});
  CHECK(ports[1] == ModulePort{y, PortDirection::output});
  ModuleId empty = nl.create_module("empty", m, {});
  CHECK(nl.module(empty)->gates.empty());
  CHECK_THROWS_AS(nl.move_module(m, empty), NetlistError);
  CHECK_THROWS_AS(nl.move_module(m, m), NetlistError);
  // A gate from a sibling subtree cannot be pulled in.
  ModuleId other = nl.create_module("other", nl.top_module(), {});
  CHECK_THROWS_AS(nl.create_module("bad", other, {g1}), NetlistError);
  // Ports follow mutations.
  nl.move_gates(m, {b.last_gate()});
  const auto after = nl.module_ports(m);
  REQUIRE(after.size() == 2);
  CHECK(after[1] == ModulePort{z, PortDirection::output});
  CHECK_FALSE(nl.check_consistency().has_value());
}

TEST_CASE("neighbors") {
  Builder b;
  NetId n1 = b.input("n1");
  NetId n2 = b.gate("INV", {n1}, "G1");
  GateId g1 = b.last_gate();
  NetId n3 = b.gate("INV", {n2}, "G2");
  GateId g2 = b.last_gate();
  b.output(n3);
  CHECK(b.nl.neighbors(g1, Direction::successors) == std::vector<Endpoint>{Endpoint::at_pin(g2, "A", n2)});
  CHECK(b.nl.neighbors(n1, Direction::predecessors) == std::vector<Endpoint>{Endpoint::global_input(n1)});
  NetId s = b.input("s");
  b.gate("INV", {s});
  b.gate("INV", {s});
  b.gate("BUF", {s});
  CHECK(b.nl.neighbors(s, Direction::successors).size() == 3);
  CHECK_THROWS_AS((void)b.nl.neighbors(GateId{999}, Direction::successors), NetlistError);
}

TEST_CASE("extract_cone") {
  Builder b;
  NetId a = b.input("a");
  NetId x = b.gate("INV", {a});
  GateId g1 = b.last_gate();
  NetId y = b.gate("INV", {x});
  GateId g2 = b.last_gate();
  b.output(y);
  auto all = b.nl.extract_cone({y}, Direction::predecessors, std::nullopt, true);
  CHECK(all.gates == std::set<GateId>{g1, g2});
  CHECK(all.boundary_nets == std::set<NetId>{a});
  auto one = b.nl.extract_cone({y}, Direction::predecessors, 1, true);
  CHECK(one.gates == std::set<GateId>{g2});

  // Through a DFF.
  NetId clk = b.input("clk");
  NetId q = b.dff(y, clk);
  GateId ff = b.last_gate();
  NetId z = b.gate("INV", {q});
  GateId g3 = b.last_gate();
  auto stop = b.nl.extract_cone({z}, Direction::predecessors, std::nullopt, true);
  CHECK(stop.gates == std::set<GateId>{g3, ff});
  auto through = b.nl.extract_cone({z}, Direction::predecessors, std::nullopt, false);
  CHECK(through.gates == std::set<GateId>{g1, g2, g3, ff});
  // Fixpoint: restarting from the result adds nothing.
  std::vector<ObjectRef> again(through.gates.begin(), through.gates.end());
  auto re = b.nl.extract_cone(again, Direction::predecessors, std::nullopt, false);
  CHECK(re.gates == through.gates);
}

TEST_CASE("groupings are exclusive") {
  Builder b;
  NetId a = b.input("a");
  b.gate("INV", {a});
  GateId g = b.last_gate();
  GroupingId red = b.nl.create_grouping("red", Color{255, 0, 0});
  GroupingId blue = b.nl.create_grouping("blue", Color{0, 0, 255});
  b.nl.assign_to_grouping(red, {g}, {a});
  CHECK(b.nl.grouping_of(g) == red);
  b.nl.assign_to_grouping(blue, {g});
  CHECK(b.nl.grouping_of(g) == blue);
  CHECK_FALSE(b.nl.grouping(red)->gates.contains(g));
  CHECK(b.nl.grouping_of(a) == red);
}

TEST_CASE("lint flags multi-driver nets as errors") {
  Builder b;
  NetId a = b.input("a");
  NetId x = b.gate("INV", {a});
  b.gate_into("INV", {a}, x);
  const auto report = b.nl.lint();
  CHECK_FALSE(report.clean());
  CHECK_THROWS_AS(require_lint_clean(b.nl), NetlistError);
}

TEST_CASE("property: random mutation sequences keep the netlist consistent") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const Netlist nl = gstest::random_netlist(seed, 120);
    const auto problem = nl.check_consistency();
    CHECK_MESSAGE(!problem.has_value(), "seed " << seed << ": " << problem.value_or(""));
    // Every gate reachable from the top module exactly once.
    CHECK(nl.gates_in_subtree(nl.top_module()).size() == nl.gates().size());
  }
}

TEST_CASE("copies compare equal and are independent") {
  Netlist a = gstest::random_netlist(5, 60);
  Netlist b = a;
  CHECK(a == b);
  b.rename_gate(b.gates().begin()->first, "changed");
  CHECK_FALSE(a == b);
}
