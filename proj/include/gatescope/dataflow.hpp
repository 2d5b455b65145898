#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gatescope/netlist.hpp"

namespace gatescope {

/// Control inputs shared by the bits of one register.
struct ControlSignature {
  std::string clock;  // clock function over n<id> variables
  std::set<NetId> clock_nets;
  std::set<NetId> enables;  // nets whose inactive value makes the flip-flop hold
  std::set<NetId> resets;
  std::set<NetId> sets;

  auto operator<=>(const ControlSignature&) const = default;
};

struct RegisterGroup {
  std::uint32_t id = 0;
  std::string name;
  /// Bit order when `ordered`, else ascending gate id.
  std::vector<GateId> members;
  bool ordered = false;
  ControlSignature control;

  friend bool operator==(const RegisterGroup&, const RegisterGroup&) = default;
};

using GroupEdge = std::pair<std::uint32_t, std::uint32_t>;  // (source group, destination group)
using BitPath = std::pair<GateId, GateId>;                  // (source flip-flop, destination flip-flop)

struct DataflowGraph {
  std::map<std::uint32_t, RegisterGroup> groups;
  std::map<GroupEdge, std::set<BitPath>> edges;
  std::set<GateId> unclustered;

  [[nodiscard]] std::optional<std::uint32_t> group_of(GateId ff) const;
  [[nodiscard]] const RegisterGroup* find(std::string_view name) const;

  friend bool operator==(const DataflowGraph&, const DataflowGraph&) = default;
};

struct DataflowConfig {
  /// When set, merges producing other widths are rejected.
  std::optional<std::set<std::size_t>> expected_widths;
  std::size_t max_rounds = 25;
  /// Flip-flops left out of grouping; reported as unclustered.
  std::set<GateId> exclude;
};

/// Control signature of one flip-flop; enables are found functionally on the
/// data cone (a net is an enable when one of its values makes the next state
/// equal the current state).
ControlSignature control_signature(const Netlist& netlist, GateId ff);

/// Groups every sequential gate into word-level registers and connects them.
DataflowGraph recover_registers(const Netlist& netlist, const DataflowConfig& config = {});

/// Edge (A, B) with its bit-level paths for every flip-flop pair whose state
/// output reaches a data pin through combinational gates only.
std::map<GroupEdge, std::set<BitPath>> group_connections(const Netlist& netlist,
                                                         const std::map<std::uint32_t, RegisterGroup>& groups);

/// For every flip-flop, the flip-flops with a combinational path into its data pins.
std::map<GateId, std::set<GateId>> flip_flop_fanin(const Netlist& netlist);

}  // namespace gatescope
