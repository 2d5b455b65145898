#include "support.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef GATESCOPE_TEST_DATA
#error "GATESCOPE_TEST_DATA must point at tests/data"
#endif

namespace gstest {

std::string data_path(const std::string& name) { return std::string(GATESCOPE_TEST_DATA) + "/" + name; }

std::string read_data(const std::string& name) {
  std::ifstream in(data_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing test data " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const GateLibrary> cells() {
  static const auto lib = std::make_shared<const GateLibrary>(parse_liberty(read_data("cells.lib"), "cells.lib"));
  return lib;
}

NetId Builder::input(const std::string& name) {
  NetId n = nl.add_net(name);
  nl.set_global_input(n);
  return n;
}

NetId Builder::gate(const std::string& type, std::initializer_list<NetId> inputs, const std::string& name) {
  return gate(type, std::vector<NetId>(inputs), name);
}

NetId Builder::gate(const std::string& type, const std::vector<NetId>& inputs, const std::string& name) {
  const std::string gname = name.empty() ? "g" + std::to_string(++counter_) : name;
  const GateType* t = nl.library()->lookup(type);
  if (t == nullptr) throw std::runtime_error("no cell " + type);
  NetId out = nl.add_net(gname + "_" + t->output_pins().front());
  gate_into(type, inputs, out, gname);
  return out;
}

GateId Builder::gate_into(const std::string& type, const std::vector<NetId>& inputs, NetId out,
                          const std::string& name) {
  const std::string gname = name.empty() ? "g" + std::to_string(++counter_) : name;
  GateId g = nl.add_gate(gname, type);
  const GateType& t = *nl.gate(g)->type;
  const auto pins = t.input_pins();
  if (pins.size() != inputs.size()) throw std::runtime_error("pin count mismatch for " + type);
  for (std::size_t i = 0; i < pins.size(); ++i) nl.connect(g, pins[i], inputs[i]);
  nl.connect(g, t.output_pins().front(), out);
  last_ = g;
  return g;
}

NetId Builder::dff(NetId d, NetId clk, const std::string& name, std::optional<NetId> q) {
  const std::string gname = name.empty() ? "ff" + std::to_string(++counter_) : name;
  NetId out = q ? *q : nl.add_net(gname + "_Q");
  GateId g = nl.add_gate(gname, "DFF");
  nl.connect(g, "D", d);
  nl.connect(g, "CLK", clk);
  nl.connect(g, "Q", out);
  last_ = g;
  return out;
}

BooleanFunction random_function(std::mt19937_64& rng, const std::vector<std::string>& vars, std::size_t size) {
  if (size == 0) {
    if (rng() % 16 == 0) return BooleanFunction::constant(rng() & 1U);
    return BooleanFunction::variable(vars[rng() % vars.size()]);
  }
  switch (rng() % 5) {
    case 0: return !random_function(rng, vars, size - 1);
    default: {
      const std::size_t arity = 2 + rng() % 2;
      std::vector<BooleanFunction> ops;
      std::size_t remaining = size - 1;
      for (std::size_t i = 0; i < arity; ++i) {
        const std::size_t share = i + 1 == arity ? remaining : rng() % (remaining + 1);
        remaining -= share;
        ops.push_back(random_function(rng, vars, share));
      }
      static constexpr BooleanFunction::Kind kinds[] = {BooleanFunction::Kind::op_and, BooleanFunction::Kind::op_or,
                                                        BooleanFunction::Kind::op_xor};
      return BooleanFunction::make(kinds[rng() % 3], std::move(ops));
    }
  }
}

namespace {

const std::vector<std::string> kCombTypes = {"INV", "BUF", "AND2", "OR2", "NAND2", "NOR2", "XOR2", "XNOR2", "AND3", "MUX2"};

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[rng() % v.size()];
}

}  // namespace

Netlist random_netlist(std::uint64_t seed, std::size_t max_gates) {
  std::mt19937_64 rng(seed);
  Netlist nl(cells(), "random_" + std::to_string(seed));
  std::vector<std::string> types;
  for (const auto& [name, t] : nl.library()->types()) types.push_back(name);
  const std::size_t gates = 1 + rng() % max_gates;
  std::vector<NetId> nets;
  const std::size_t net_count = gates + 4 + rng() % (gates + 1);
  static const std::vector<std::string> odd_names = {"a\"quoted\"", "back\\slash", "sp ace", "ünï", "w[3]", ""};
  for (std::size_t i = 0; i < net_count; ++i) {
    std::string name = rng() % 20 == 0 ? pick(rng, odd_names) : "n" + std::to_string(i);
    nets.push_back(nl.add_net(name));
    if (rng() % 8 == 0) nl.set_global_input(nets.back());
    if (rng() % 8 == 0) nl.set_global_output(nets.back());
  }
  std::vector<GateId> created;
  for (std::size_t i = 0; i < gates; ++i) {
    const std::string& type = pick(rng, types);
    GateId g = nl.add_gate(rng() % 25 == 0 ? pick(rng, odd_names) : "u" + std::to_string(i), type);
    created.push_back(g);
    const GateType& t = *nl.gate(g)->type;
    for (const auto& pin : t.input_pins()) {
      if (rng() % 10 != 0) nl.connect(g, pin, pick(rng, nets));
    }
    for (const auto& pin : t.output_pins()) {
      if (rng() % 6 == 0) continue;
      // Prefer an undriven net so most nets keep a single driver.
      for (int attempt = 0; attempt < 4; ++attempt) {
        NetId n = pick(rng, nets);
        if (nl.net(n)->drivers.empty() || attempt == 3) {
          nl.connect(g, pin, n);
          break;
        }
      }
    }
  }
  // Module tree.
  std::vector<ModuleId> modules{nl.top_module()};
  const std::size_t module_count = rng() % 6;
  for (std::size_t i = 0; i < module_count; ++i) {
    ModuleId parent = pick(rng, modules);
    std::set<GateId> members;
    for (GateId g : nl.gates_in_subtree(parent)) {
      if (rng() % 3 == 0) members.insert(g);
    }
    modules.push_back(nl.create_module("m" + std::to_string(i), parent, members));
  }
  if (modules.size() > 2 && rng() % 2 == 0) {
    try {
      nl.move_module(modules[1], modules.back());
    } catch (const NetlistError&) {
    }
  }
  // Deletions leave id gaps.
  for (std::size_t i = 0; i < created.size() / 10; ++i) {
    GateId g = pick(rng, created);
    if (nl.gate(g) != nullptr) nl.remove_gate(g);
  }
  for (std::size_t i = 0; i < nets.size() / 12; ++i) {
    NetId n = pick(rng, nets);
    if (nl.net(n) != nullptr) nl.remove_net(n);
  }
  if (modules.size() > 3 && rng() % 2 == 0) nl.remove_module(modules[2]);
  // Groupings.
  const std::size_t grouping_count = rng() % 4;
  for (std::size_t i = 0; i < grouping_count; ++i) {
    GroupingId gr = nl.create_grouping(
        "group" + std::to_string(i),
        Color{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
    std::set<GateId> gs;
    std::set<NetId> ns;
    std::set<ModuleId> ms;
    for (const auto& [id, g] : nl.gates()) {
      if (rng() % 7 == 0) gs.insert(id);
    }
    for (const auto& [id, n] : nl.nets()) {
      if (rng() % 9 == 0) ns.insert(id);
    }
    for (const auto& [id, m] : nl.modules()) {
      if (rng() % 4 == 0) ms.insert(id);
    }
    nl.assign_to_grouping(gr, gs, ns, ms);
  }
  if (grouping_count > 1 && rng() % 2 == 0) nl.remove_grouping(GroupingId{1});
  return nl;
}

SequentialFixture random_sequential(std::uint64_t seed, std::size_t ffs, std::size_t inputs, std::size_t max_gates) {
  std::mt19937_64 rng(seed);
  Builder b(cells(), "seq_" + std::to_string(seed));
  SequentialFixture f{Netlist(cells()), {}, {}, {}};
  NetId clk = b.input("clk");
  std::vector<NetId> pool;
  std::vector<NetId> qs;
  for (std::size_t i = 0; i < inputs; ++i) {
    f.inputs.push_back(b.input("in" + std::to_string(i)));
    pool.push_back(f.inputs.back());
  }
  for (std::size_t i = 0; i < ffs; ++i) {
    qs.push_back(b.wire("q" + std::to_string(i)));
    pool.push_back(qs.back());
  }
  const std::size_t logic = std::max<std::size_t>(1, max_gates > ffs ? max_gates - ffs : 1);
  const std::size_t count = logic / 2 + rng() % (logic / 2 + 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string& type = pick(rng, kCombTypes);
    const std::size_t arity = b.nl.library()->lookup(type)->input_pins().size();
    std::vector<NetId> ins;
    for (std::size_t k = 0; k < arity; ++k) {
      // Bias towards recent nets for depth.
      const std::size_t span = std::min<std::size_t>(pool.size(), 12);
      ins.push_back(rng() % 2 ? pool[pool.size() - 1 - rng() % span] : pick(rng, pool));
    }
    pool.push_back(b.gate(type, ins));
  }
  for (std::size_t i = 0; i < ffs; ++i) {
    const std::size_t span = std::min<std::size_t>(pool.size(), 3 * ffs + 4);
    NetId d = pool[pool.size() - 1 - rng() % span];
    b.dff(d, clk, "ff" + std::to_string(i), qs[i]);
    f.flip_flops.push_back(b.last_gate());
    if (rng() % 3 == 0) b.output(qs[i]);
  }
  f.netlist = std::move(b.nl);
  f.clock = clk;
  return f;
}

CombinationalFixture random_combinational(std::uint64_t seed, std::size_t inputs, std::size_t gates) {
  std::mt19937_64 rng(seed);
  Builder b(cells(), "comb_" + std::to_string(seed));
  CombinationalFixture f{Netlist(cells()), {}, {}};
  std::vector<NetId> pool;
  for (std::size_t i = 0; i < inputs; ++i) {
    f.inputs.push_back(b.input("in" + std::to_string(i)));
    pool.push_back(f.inputs.back());
  }
  for (std::size_t i = 0; i < gates; ++i) {
    const std::string& type = pick(rng, kCombTypes);
    const std::size_t arity = b.nl.library()->lookup(type)->input_pins().size();
    std::vector<NetId> ins;
    for (std::size_t k = 0; k < arity; ++k) ins.push_back(pick(rng, pool));
    pool.push_back(b.gate(type, ins));
  }
  const std::size_t outs = std::min<std::size_t>(gates, 1 + rng() % 4);
  for (std::size_t i = 0; i < outs; ++i) {
    f.outputs.push_back(pool[pool.size() - 1 - i]);
    b.output(f.outputs.back());
  }
  f.netlist = std::move(b.nl);
  return f;
}

namespace {

std::string verilog_name(const std::string& name) {
  bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char c : name) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$');
  return plain ? name : "\\" + name + " ";
}

}  // namespace

std::string to_verilog(const Netlist& nl, const std::string& module_name) {
  std::ostringstream os;
  std::vector<std::string> ports, inputs, outputs, wires;
  for (const auto& [id, n] : nl.nets()) {
    if (n.global_input && n.global_output) throw std::runtime_error("net " + n.name + " is both input and output");
    const std::string v = verilog_name(n.name);
    if (n.global_input) {
      ports.push_back(v);
      inputs.push_back(v);
    } else if (n.global_output) {
      ports.push_back(v);
      outputs.push_back(v);
    } else {
      wires.push_back(v);
    }
  }
  os << "module " << module_name << " (";
  for (std::size_t i = 0; i < ports.size(); ++i) os << (i ? ", " : "") << ports[i];
  os << ");\n";
  for (const auto& v : inputs) os << "  input " << v << ";\n";
  for (const auto& v : outputs) os << "  output " << v << ";\n";
  for (const auto& v : wires) os << "  wire " << v << ";\n";
  for (const auto& [id, g] : nl.gates()) {
    os << "  " << g.type->name() << " " << verilog_name(g.name) << " (";
    bool first = true;
    for (const auto& [pin, net] : g.connections) {
      os << (first ? "" : ", ") << "." << pin << "(" << verilog_name(nl.get_net(net).name) << ")";
      first = false;
    }
    os << ");\n";
  }
  os << "endmodule\n";
  return os.str();
}

}  // namespace gstest
