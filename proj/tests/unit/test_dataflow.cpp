#include <doctest.h>

#include <deque>

#include "gatescope/dataflow.hpp"
#include "gatescope/dot.hpp"
#include "generators.hpp"

using namespace gatescope;
using gstest::Builder;

namespace {

// Oracle: backwards BFS from each data pin through combinational gates.
std::map<GateId, std::set<GateId>> bfs_fanin(const Netlist& nl) {
  std::map<GateId, std::set<GateId>> out;
  for (const auto& [id, g] : nl.gates()) {
    if (!g.type->is_sequential()) continue;
    auto& found = out[id];
    std::set<NetId> seen;
    std::deque<NetId> work;
    for (const auto& pin : g.type->data_pins()) {
      if (auto n = g.net_at(pin)) work.push_back(*n);
    }
    while (!work.empty()) {
      NetId n = work.front();
      work.pop_front();
      if (!seen.insert(n).second) continue;
      for (const auto& d : nl.get_net(n).drivers) {
        const Gate& dg = nl.get_gate(d.gate);
        if (dg.type->is_sequential()) {
          found.insert(d.gate);
          continue;
        }
        for (const auto& [pin, net] : dg.connections) {
          if (dg.type->pin_direction(pin) == PinDirection::input) work.push_back(net);
        }
      }
    }
  }
  return out;
}

std::set<std::set<GateId>> partition_of(const DataflowGraph& g) {
  std::set<std::set<GateId>> out;
  for (const auto& [id, grp] : g.groups) out.insert(std::set<GateId>(grp.members.begin(), grp.members.end()));
  return out;
}

void check_invariants(const Netlist& nl, const DataflowGraph& g) {
  std::set<GateId> seen;
  for (const auto& [id, grp] : g.groups) {
    CHECK(grp.name == "reg_" + std::to_string(id));
    CHECK_FALSE(grp.members.empty());
    for (GateId m : grp.members) {
      CHECK(nl.get_gate(m).type->is_sequential());
      CHECK(seen.insert(m).second);
      CHECK(g.group_of(m) == id);
    }
  }
  for (GateId u : g.unclustered) CHECK(seen.insert(u).second);
  CHECK(seen.size() == nl.sequential_gates().size());
  // Edges: exactly the group pairs with a bit-level path.
  std::map<GroupEdge, std::set<BitPath>> expected;
  for (const auto& [dst, srcs] : bfs_fanin(nl)) {
    auto d = g.group_of(dst);
    if (!d) continue;
    for (GateId s : srcs) {
      if (auto sg = g.group_of(s)) expected[{*sg, *d}].insert({s, dst});
    }
  }
  CHECK(g.edges == expected);
}

}  // namespace

TEST_CASE("purely combinational netlist gives an empty graph") {
  const auto fx = gstest::random_combinational(1, 4, 20);
  const auto g = recover_registers(fx.netlist);
  CHECK(g.groups.empty());
  CHECK(g.edges.empty());
  CHECK(g.unclustered.empty());
}

TEST_CASE("eight flip-flops with shared enable and round feedback form one group") {
  Builder b;
  NetId clk = b.input("clk"), en = b.input("en");
  std::vector<NetId> q, k;
  for (int i = 0; i < 8; ++i) {
    q.push_back(b.wire("s" + std::to_string(i)));
    k.push_back(b.input("k" + std::to_string(i)));
  }
  std::vector<GateId> ffs;
  for (int i = 0; i < 8; ++i) {
    NetId mix = b.gate("XOR2", {b.gate("XOR2", {q[(i + 1) % 8], q[(i + 3) % 8]}), k[i]});
    b.dff(b.gate("MUX2", {q[i], mix, en}), clk, "st" + std::to_string(i), q[i]);
    ffs.push_back(b.last_gate());
  }
  const auto g = recover_registers(b.nl);
  REQUIRE(g.groups.size() == 1);
  const auto& grp = g.groups.begin()->second;
  CHECK(grp.members.size() == 8);
  CHECK(grp.control.enables == std::set<NetId>{en});
  CHECK(grp.control.clock_nets == std::set<NetId>{clk});
  CHECK(g.edges.size() == 1);
  CHECK(g.edges.contains({grp.id, grp.id}));
  check_invariants(b.nl, g);
}

TEST_CASE("two shift chains on different clocks") {
  Builder b;
  NetId c0 = b.input("c0"), c1 = b.input("c1"), d0 = b.input("d0"), d1 = b.input("d1");
  std::vector<GateId> chain0, chain1;
  NetId x = d0, y = d1;
  for (int i = 0; i < 4; ++i) {
    x = b.dff(x, c0);
    chain0.push_back(b.last_gate());
    y = b.dff(y, c1);
    chain1.push_back(b.last_gate());
  }
  const auto g = recover_registers(b.nl);
  REQUIRE(g.groups.size() == 2);
  const auto& g1 = g.groups.at(1);
  const auto& g2 = g.groups.at(2);
  CHECK(g1.members == chain0);
  CHECK(g1.ordered);
  CHECK(g2.members == chain1);
  CHECK(g.edges.size() == 2);
  check_invariants(b.nl, g);
}

TEST_CASE("pipeline edges and no reverse edge") {
  Builder b;
  NetId clk = b.input("clk");
  std::vector<NetId> a, c;
  for (int i = 0; i < 4; ++i) a.push_back(b.dff(b.input("i" + std::to_string(i)), clk));
  for (int i = 0; i < 4; ++i) {
    c.push_back(b.dff(b.gate("NAND2", {a[i], a[(i + 1) % 4]}), clk));
    b.output(c.back());
  }
  const auto g = recover_registers(b.nl);
  REQUIRE(g.groups.size() == 2);
  CHECK(g.edges.size() == 1);
  CHECK(g.edges.contains({1, 2}));
  CHECK_FALSE(g.edges.contains({2, 1}));
  CHECK(g.edges.at({1, 2}).size() == 8);
  check_invariants(b.nl, g);
}

TEST_CASE("enable is detected functionally, not by cell type") {
  Builder b;
  NetId clk = b.input("clk"), en = b.input("load"), d = b.input("d");
  NetId q = b.wire("q");
  // q' = (en & d) | (!en & q), built from NAND gates.
  NetId nen = b.gate("INV", {en});
  NetId t0 = b.gate("NAND2", {en, d});
  NetId t1 = b.gate("NAND2", {nen, q});
  b.dff(b.gate("NAND2", {t0, t1}), clk, "r", q);
  const auto sig = control_signature(b.nl, b.last_gate());
  CHECK(sig.enables == std::set<NetId>{en});
  CHECK(sig.clock == "n" + std::to_string(clk.value));
  CHECK_THROWS_AS(control_signature(b.nl, GateId{t0.value}), Error);
}

TEST_CASE("excluded flip-flops are reported as unclustered") {
  Builder b;
  NetId clk = b.input("clk");
  b.dff(b.input("a"), clk);
  GateId f0 = b.last_gate();
  b.dff(b.input("b"), clk);
  DataflowConfig cfg;
  cfg.exclude = {f0};
  const auto g = recover_registers(b.nl, cfg);
  CHECK(g.unclustered == std::set<GateId>{f0});
  CHECK_FALSE(g.group_of(f0).has_value());
  check_invariants(b.nl, g);
}

TEST_CASE("unsettled groups dissolve, then merge subject to expected widths") {
  // Eight two-bit stages; each bit of stage i mixes both bits of stage i-1.
  Builder b;
  NetId clk = b.input("clk");
  NetId a = b.input("a"), c = b.input("c");
  for (int i = 0; i < 8; ++i) {
    NetId na = b.dff(b.gate("XOR2", {a, c}), clk);
    NetId nc = b.dff(b.gate("XNOR2", {a, c}), clk);
    a = na;
    c = nc;
  }
  b.output(a);
  b.output(c);
  const auto settled = recover_registers(b.nl);
  CHECK(settled.groups.size() == 8);
  DataflowConfig cfg;
  cfg.max_rounds = 1;
  const auto merged = recover_registers(b.nl, cfg);
  CHECK(merged.groups.size() == 8);
  CHECK(partition_of(merged) == partition_of(settled));
  cfg.expected_widths = std::set<std::size_t>{1};
  const auto vetoed = recover_registers(b.nl, cfg);
  // Round one separates the first and last stage; those stay whole, the
  // six middle stages dissolve and may not merge back.
  std::size_t pairs = 0;
  for (const auto& [id, grp] : vetoed.groups) pairs += grp.members.size() == 2 ? 1 : 0;
  CHECK(vetoed.groups.size() == 14);
  CHECK(pairs == 2);
  check_invariants(b.nl, vetoed);
}

TEST_CASE("generated designs are recovered exactly") {
  std::size_t exact = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto design = gstest::generate_register_design(seed);
    const auto g = recover_registers(design.netlist);
    check_invariants(design.netlist, g);
    std::set<std::set<GateId>> truth;
    for (const auto& r : design.registers) truth.insert(std::set<GateId>(r.begin(), r.end()));
    const bool ok = partition_of(g) == truth;
    CHECK_MESSAGE(ok, "seed " << seed);
    exact += ok ? 1 : 0;
    // Shift chains keep their bit order.
    for (std::size_t r = 0; r < design.specs.size(); ++r) {
      if (!design.specs[r].shift) continue;
      const auto* grp = &g.groups.at(*g.group_of(design.registers[r].front()));
      if (grp->members.size() == design.registers[r].size()) CHECK(grp->members == design.registers[r]);
    }
  }
  CHECK(exact == 30);
}

TEST_CASE("recovery is deterministic") {
  const auto design = gstest::generate_register_design(77);
  CHECK(recover_registers(design.netlist) == recover_registers(design.netlist));
  const Netlist copy = design.netlist;
  CHECK(recover_registers(copy) == recover_registers(design.netlist));
}

TEST_CASE("edges match an independent search on random sequential netlists") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto fx = gstest::random_sequential(seed, 3 + seed % 14, 3, 150);
    const auto g = recover_registers(fx.netlist);
    check_invariants(fx.netlist, g);
    CHECK(flip_flop_fanin(fx.netlist) == bfs_fanin(fx.netlist));
  }
}

TEST_CASE("dot export") {
  DataflowGraph g;
  g.groups[1] = RegisterGroup{1, "reg_1", {GateId{1}, GateId{2}}, false, {}};
  g.groups[2] = RegisterGroup{2, "reg_2", {GateId{3}}, false, {}};
  g.edges[{1, 2}] = {{GateId{1}, GateId{3}}};
  const std::string plain = export_dataflow_dot(g);
  CHECK(plain.find("digraph") == 0);
  CHECK(plain.find("g1 [label=\"reg_1 (2)\"]") != std::string::npos);
  CHECK(plain.find("g2 [label=\"reg_2 (1)\"]") != std::string::npos);
  CHECK(plain.find("g1 -> g2;") != std::string::npos);
  CHECK(plain.find("red") == std::string::npos);
  DotOptions opt;
  opt.highlight = {{1, 2}};
  CHECK(export_dataflow_dot(g, opt).find("g1 -> g2 [color=red];") != std::string::npos);
  const std::string empty = export_dataflow_dot(DataflowGraph{});
  CHECK(empty.find("digraph") == 0);
  CHECK(empty.find("->") == std::string::npos);
  CHECK(empty.find('}') != std::string::npos);
}
