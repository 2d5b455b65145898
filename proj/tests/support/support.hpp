#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gatescope/boolean_function.hpp"
#include "gatescope/gate_library.hpp"
#include "gatescope/netlist.hpp"

namespace gstest {

using namespace gatescope;

std::string data_path(const std::string& name);
std::string read_data(const std::string& name);

/// The fixture cell library (tests/data/cells.lib), parsed once.
std::shared_ptr<const GateLibrary> cells();

/// Small helper for building netlists in code.
class Builder {
 public:
  explicit Builder(std::shared_ptr<const GateLibrary> lib = cells(), std::string id = "fixture") : nl(std::move(lib), std::move(id)) {}

  NetId input(const std::string& name);
  void output(NetId net) { nl.set_global_output(net); }
  NetId wire(const std::string& name) { return nl.add_net(name); }
  /// Instantiates `type`, connecting its input pins in declaration order.
  /// Returns the net on the (first) output pin.
  NetId gate(const std::string& type, std::initializer_list<NetId> inputs, const std::string& name = {});
  NetId gate(const std::string& type, const std::vector<NetId>& inputs, const std::string& name = {});
  /// Gate whose output drives an existing net.
  GateId gate_into(const std::string& type, const std::vector<NetId>& inputs, NetId out, const std::string& name = {});
  /// DFF with D, CLK; returns the Q net. `q` may be given to close feedback loops.
  NetId dff(NetId d, NetId clk, const std::string& name = {}, std::optional<NetId> q = std::nullopt);
  GateId last_gate() const { return last_; }

  Netlist nl;

 private:
  GateId last_;
  std::size_t counter_ = 0;
};

/// Structural Verilog for `nl`: one module whose ports are the global
/// inputs and outputs, names escaped where needed. Throws on a net that is
/// both a global input and a global output.
std::string to_verilog(const Netlist& nl, const std::string& module_name = "top");

/// Random expression over `vars` with about `size` operator nodes.
BooleanFunction random_function(std::mt19937_64& rng, const std::vector<std::string>& vars, std::size_t size);

/// Random netlist for persistence tests: gates of every library type, a
/// module tree, groupings, global markers and id gaps from deletions.
Netlist random_netlist(std::uint64_t seed, std::size_t max_gates);

/// Random single-clock sequential fixture: `ffs` DFFs fed by acyclic random
/// logic over the flip-flop outputs and `inputs` global inputs.
struct SequentialFixture {
  Netlist netlist;
  NetId clock;
  std::vector<NetId> inputs;
  std::vector<GateId> flip_flops;
};
SequentialFixture random_sequential(std::uint64_t seed, std::size_t ffs, std::size_t inputs, std::size_t max_gates);

/// Random acyclic combinational block with `inputs` global inputs.
struct CombinationalFixture {
  Netlist netlist;
  std::vector<NetId> inputs;
  std::vector<NetId> outputs;
};
CombinationalFixture random_combinational(std::uint64_t seed, std::size_t inputs, std::size_t gates);

}  // namespace gstest
