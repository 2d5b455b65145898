#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gatescope/serialize.hpp"
#include "gatescope/symbolic.hpp"
#include "gatescope/verilog.hpp"
#include "gatescope/word_level.hpp"
#include "word_fixtures.hpp"

using namespace gatescope;
using gstest::Builder;

namespace {

// Independent soundness check: every assignment of the operand bits (4096
// random ones beyond 12 bits), result compared against integer arithmetic in
// the reported bit orders.
bool exhaustive_sound(const Netlist& nl, const IdentifiedModule& m) {
  std::vector<NetId> vars;
  for (const auto& w : m.operands) vars.insert(vars.end(), w.begin(), w.end());
  if (m.enable) vars.push_back(*m.enable);
  ConeStops stops;
  stops.cut_nets.insert(vars.begin(), vars.end());
  const auto fns = cone_functions(nl, std::set<NetId>(m.result.begin(), m.result.end()), stops);
  const std::size_t rows = std::min<std::size_t>(std::size_t{1} << vars.size(), 4096);
  const std::uint64_t mask = (std::uint64_t{1} << m.result.size()) - 1;
  std::mt19937_64 rng(99);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t r = vars.size() <= 12 ? i : rng();
    Assignment asg;
    for (std::size_t v = 0; v < vars.size(); ++v) asg[net_variable(vars[v])] = ((r >> v) & 1U) != 0;
    auto word = [&](const std::vector<NetId>& w) {
      std::uint64_t x = 0;
      for (std::size_t k = 0; k < w.size(); ++k) x |= std::uint64_t{asg.at(net_variable(w[k]))} << k;
      return x;
    };
    std::uint64_t got = 0;
    for (std::size_t k = 0; k < m.result.size(); ++k) {
      const auto& f = fns.at(m.result[k]);
      // Unused inputs may be missing from the assignment keys; fill them.
      Assignment full = asg;
      for (const auto& v : f.support()) full.try_emplace(v, false);
      got |= std::uint64_t{evaluate(f, full)} << k;
    }
    const std::uint64_t a = word(m.operands[0]);
    const std::uint64_t b = m.operands.size() > 1 ? word(m.operands[1]) : 0;
    std::uint64_t want = 0, care = mask;
    switch (m.kind) {
      case ModuleKind::add: want = a + b; break;
      case ModuleKind::sub: want = a - b; break;
      case ModuleKind::const_mul: want = a * m.constant; break;
      case ModuleKind::counter: want = (!m.enable || asg.at(net_variable(*m.enable))) ? a + m.constant : a; break;
      case ModuleKind::shift_reg:
        want = a << 1;
        care &= ~std::uint64_t{1};
        break;
      case ModuleKind::unknown: return false;
    }
    if ((got & care) != (want & care)) return false;
  }
  return true;
}

void check_fixture(const gstest::WordFixture& f) {
  const auto m = identify_module(f.netlist, f.candidate);
  CHECK(m.kind == f.kind);
  CHECK(m.verification == Verification::verified);
  CHECK(m.constant == f.constant);
  CHECK(m.operands == f.operands);
  CHECK(m.result == f.result);
  CHECK(exhaustive_sound(f.netlist, m));
}

}  // namespace

TEST_CASE("ripple-carry adders") {
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
    check_fixture(gstest::adder_fixture(4, false, seed));
    check_fixture(gstest::adder_fixture(4, true, seed));
    check_fixture(gstest::adder_fixture(8, true, seed));
  }
}

TEST_CASE("subtractor reports the minuend first") {
  for (std::uint64_t seed : {0, 5, 6, 7, 8}) check_fixture(gstest::subtractor_fixture(4, seed));
  check_fixture(gstest::subtractor_fixture(6, 9));
}

TEST_CASE("times three") {
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) check_fixture(gstest::times3_fixture(4, seed));
  check_fixture(gstest::times3_fixture(6, 12));
}

TEST_CASE("counters") {
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) check_fixture(gstest::counter_fixture(3, 1, seed));
  check_fixture(gstest::counter_fixture(6, 1, 21));
}

TEST_CASE("counter with a step found by exhaustive order search") {
  // Step 2: bit 0 holds and bit 1 toggles, so supports are not nested.
  const auto f = gstest::counter_fixture(4, 2, 17);
  const auto m = identify_module(f.netlist, f.candidate);
  CHECK(m.kind == ModuleKind::counter);
  CHECK(m.constant == 2);
  CHECK(m.operands == f.operands);
  CHECK(m.method.find("exhaustive") != std::string::npos);
  CHECK(exhaustive_sound(f.netlist, m));
}

TEST_CASE("counter with an enable") {
  Netlist nl = parse_verilog(gstest::read_data("counter4.v"), gstest::cells(), "counter4.v");
  std::vector<GateId> ffs = nl.sequential_gates();
  const auto m = identify_module(nl, register_candidate(nl, ffs));
  CHECK(m.kind == ModuleKind::counter);
  CHECK(m.constant == 1);
  REQUIRE(m.enable.has_value());
  CHECK(nl.get_net(*m.enable).name == "en");
  std::vector<std::string> names;
  for (NetId n : m.operands[0]) names.push_back(nl.get_net(n).name);
  CHECK(names == std::vector<std::string>{"q[0]", "q[1]", "q[2]", "q[3]"});
  CHECK(exhaustive_sound(nl, m));
}

TEST_CASE("shift registers") {
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) check_fixture(gstest::shift_register_fixture(8, seed));
}

TEST_CASE("independent inverters are unknown") {
  Builder b;
  std::set<NetId> in, out;
  for (int i = 0; i < 4; ++i) {
    NetId x = b.input("x" + std::to_string(i));
    in.insert(x);
    out.insert(b.gate("INV", {x}));
  }
  const auto m = identify_module(b.nl, {{in}, out});
  CHECK(m.kind == ModuleKind::unknown);
  CHECK(m.verification == Verification::failed);
}

TEST_CASE("width cap and malformed candidates") {
  const auto f = gstest::adder_fixture(8, false, 0);
  IdentifyConfig cfg;
  cfg.max_width = 6;
  CHECK_THROWS_AS(identify_module(f.netlist, f.candidate, cfg), Error);
  CHECK_THROWS_AS(identify_module(f.netlist, ModuleCandidate{}), Error);
  ModuleCandidate bad = f.candidate;
  bad.outputs.insert(NetId{999999});
  CHECK_THROWS_AS(identify_module(f.netlist, bad), Error);
}

TEST_CASE("inconclusive proofs are not reported as identified") {
  const auto f = gstest::adder_fixture(8, true, 0);
  IdentifyConfig cfg;
  cfg.equivalence.brute_force_max_vars = 0;
  cfg.equivalence.conflict_budget = 0;
  const auto m = identify_module(f.netlist, f.candidate, cfg);
  if (m.verification == Verification::inconclusive) {
    CHECK(m.kind == ModuleKind::unknown);
    CHECK(m.tentative == ModuleKind::add);
  } else {
    CHECK(m.kind == ModuleKind::add);
  }
}

TEST_CASE("property: word order within the candidate does not matter") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto f = gstest::adder_fixture(4, seed % 2 == 0, seed);
    const auto m1 = identify_module(f.netlist, f.candidate);
    std::swap(f.candidate.inputs[0], f.candidate.inputs[1]);
    const auto m2 = identify_module(f.netlist, f.candidate);
    CHECK(m1.kind == m2.kind);
    CHECK(m1.result == m2.result);
    CHECK(std::set(m1.operands.begin(), m1.operands.end()) == std::set(m2.operands.begin(), m2.operands.end()));
    auto s = gstest::subtractor_fixture(4, seed);
    std::swap(s.candidate.inputs[0], s.candidate.inputs[1]);
    const auto m3 = identify_module(s.netlist, s.candidate);
    CHECK(m3.kind == ModuleKind::sub);
    CHECK(m3.operands == s.operands);
  }
}

namespace {

// Register r (4 DFFs created in shuffled order) whose outputs feed operand a
// of an adder through `perm`: Q of r's i-th flip-flop is a[perm[i]]. The sum
// is registered in s; a copy register c follows r through buffers.
struct OrderDesign {
  Netlist netlist{gstest::cells()};
  std::vector<GateId> r, s, c, e;  // by creation
  std::vector<NetId> a, sum;
  IdentifiedModule adder;
};

OrderDesign order_design(const std::vector<std::size_t>& perm) {
  Builder b;
  OrderDesign d;
  NetId clk = b.input("clk");
  const std::size_t w = perm.size();
  auto a = gstest::shuffled_nets(b.nl, "a", w, 0, false);
  auto bb = gstest::shuffled_nets(b.nl, "b", w, 0, true);
  auto sum = gstest::shuffled_nets(b.nl, "sum", w, 0, false);
  for (std::size_t i = 0; i < w; ++i) {
    b.dff(b.input("din" + std::to_string(i)), clk, "r" + std::to_string(i), a[perm[i]]);
    d.r.push_back(b.last_gate());
  }
  NetId carry = b.gate("AND2", {a[0], bb[0]});
  b.gate_into("XOR2", {a[0], bb[0]}, sum[0]);
  for (std::size_t i = 1; i < w; ++i) {
    NetId p = b.gate("XOR2", {a[i], bb[i]});
    b.gate_into("XOR2", {p, carry}, sum[i]);
    carry = b.gate("OR2", {b.gate("AND2", {a[i], bb[i]}), b.gate("AND2", {p, carry})});
  }
  for (std::size_t i = 0; i < w; ++i) {
    b.output(b.dff(sum[w - 1 - i], clk, "s" + std::to_string(i)));
    d.s.push_back(b.last_gate());
  }
  for (std::size_t i = 0; i < w; ++i) {
    NetId q = b.dff(b.gate("BUF", {a[perm[(i + 1) % w]]}), clk, "c" + std::to_string(i));
    d.c.push_back(b.last_gate());
    b.output(b.dff(b.gate("INV", {q}), clk, "e" + std::to_string(i)));
    d.e.push_back(b.last_gate());
  }
  d.a = a;
  d.sum = sum;
  d.netlist = std::move(b.nl);
  d.adder = identify_module(d.netlist, {{{a.begin(), a.end()}, {bb.begin(), bb.end()}}, {sum.begin(), sum.end()}});
  return d;
}

std::uint32_t group_with(const DataflowGraph& g, GateId f) { return *g.group_of(f); }

}  // namespace

TEST_CASE("anchors") {
  const auto d = order_design({2, 0, 3, 1});
  REQUIRE(d.adder.kind == ModuleKind::add);
  const auto df = recover_registers(d.netlist);
  const auto anchors = find_anchors(d.netlist, df, {d.adder});
  CHECK(anchors.size() == 3);
  CHECK(anchors[0].nets == d.a);
  CHECK(anchors[2].nets == d.sum);

  const auto sr = gstest::shift_register_fixture(4, 3);
  const auto sdf = recover_registers(sr.netlist);
  const auto chain = find_anchors(sr.netlist, sdf, {});
  REQUIRE(chain.size() == 1);
  CHECK(chain[0].nets == sr.operands[0]);

  Builder b;
  b.dff(b.input("x"), b.input("clk"));
  CHECK(find_anchors(b.nl, recover_registers(b.nl), {}).empty());
}

TEST_CASE("bit order propagates from an adder operand") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 6; ++round) {
    std::vector<std::size_t> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto d = order_design(perm);
    REQUIRE(d.adder.kind == ModuleKind::add);
    const auto df = recover_registers(d.netlist);
    const auto result = propagate_bit_order(d.netlist, df, find_anchors(d.netlist, df, {d.adder}));
    // Register r: position perm[i] holds r[i], i.e. the inverse permutation.
    std::vector<GateId> want_r(4), want_s(4), want_c(4);
    for (std::size_t i = 0; i < 4; ++i) {
      want_r[perm[i]] = d.r[i];
      want_s[3 - i] = d.s[i];
      want_c[perm[(i + 1) % 4]] = d.c[i];
    }
    // The second copy stage mirrors the first one position for position.
    std::vector<GateId> want_e(4);
    for (std::size_t k = 0; k < 4; ++k) {
      want_e[k] = d.e[static_cast<std::size_t>(std::find(d.c.begin(), d.c.end(), want_c[k]) - d.c.begin())];
    }
    const auto& gr = result.groups.at(group_with(df, d.r[0]));
    CHECK(gr.order == want_r);
    CHECK(gr.confidence == OrderConfidence::anchor);
    CHECK(result.groups.at(group_with(df, d.s[0])).order == want_s);
    const auto& gc = result.groups.at(group_with(df, d.c[0]));
    CHECK(gc.order == want_c);
    CHECK(gc.confidence == OrderConfidence::anchor);
    CHECK(gc.distance == 0);
    const auto& ge = result.groups.at(group_with(df, d.e[0]));
    CHECK(ge.order == want_e);
    CHECK(ge.confidence == OrderConfidence::propagated);
    CHECK(ge.distance == 1);
    CHECK_NOTHROW(validate_result("bitorder", to_json(result), d.netlist));
  }
}

TEST_CASE("conflicting anchors leave a group unordered") {
  const auto d = order_design({0, 1, 2, 3});
  const auto df = recover_registers(d.netlist);
  std::vector<NetId> reversed(d.a.rbegin(), d.a.rend());
  const auto result = propagate_bit_order(d.netlist, df, {{d.a, "first"}, {reversed, "second"}});
  const auto& g = result.groups.at(group_with(df, d.r[0]));
  CHECK(g.confidence == OrderConfidence::conflict);
  CHECK(g.order.empty());
  CHECK(g.sources == std::vector<std::string>{"first", "second"});
}

TEST_CASE("groups without a path to an anchor stay absent") {
  Builder b;
  NetId clk = b.input("clk");
  std::vector<GateId> lone;
  for (int i = 0; i < 3; ++i) {
    b.output(b.dff(b.gate("NAND2", {b.input("p" + std::to_string(i)), b.input("q" + std::to_string(i))}), clk));
    lone.push_back(b.last_gate());
  }
  const auto df = recover_registers(b.nl);
  const auto result = propagate_bit_order(b.nl, df, {{{b.input("z")}, "unrelated"}});
  CHECK(result.groups.empty());
}

TEST_CASE("property: propagation is monotone and idempotent") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 6; ++round) {
    std::vector<std::size_t> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto d = order_design(perm);
    const auto df = recover_registers(d.netlist);
    const std::vector<Anchor> few = {{d.sum, "sum"}};
    const auto base = propagate_bit_order(d.netlist, df, few);
    auto more = few;
    for (const auto& a : find_anchors(d.netlist, df, {d.adder})) more.push_back(a);
    const auto bigger = propagate_bit_order(d.netlist, df, more);
    for (const auto& [g, o] : base.groups) {
      if (o.confidence == OrderConfidence::conflict) continue;
      REQUIRE(bigger.groups.contains(g));
      CHECK(bigger.groups.at(g).order == o.order);
    }
    // Feeding the assigned orders back as anchors changes no order.
    auto again = more;
    for (const auto& [g, o] : bigger.groups) {
      std::vector<NetId> q;
      for (GateId f : o.order) q.push_back(*d.netlist.get_gate(f).net_at("Q"));
      again.push_back({q, "fed back"});
    }
    const auto fixpoint = propagate_bit_order(d.netlist, df, again);
    CHECK(fixpoint.groups.size() == bigger.groups.size());
    for (const auto& [g, o] : bigger.groups) CHECK(fixpoint.groups.at(g).order == o.order);
  }
}

TEST_CASE("identification serializes with live ids") {
  const auto f = gstest::adder_fixture(4, true, 2);
  const auto m = identify_module(f.netlist, f.candidate);
  const auto j = to_json(m);
  CHECK(j.at("kind") == "ADD");
  CHECK(j.at("verification") == "verified");
  CHECK_NOTHROW(validate_result("identify", nlohmann::json::array({j}), f.netlist));
}
