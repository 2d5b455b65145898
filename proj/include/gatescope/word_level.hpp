#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gatescope/dataflow.hpp"
#include "gatescope/equivalence.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

enum class ModuleKind { add, sub, const_mul, counter, shift_reg, unknown };
std::string to_string(ModuleKind k);

enum class Verification { verified, inconclusive, failed };
std::string to_string(Verification v);

/// Unordered words around a combinational block. A sequential candidate has
/// one input word of flip-flop outputs and the flip-flops' data nets as output.
struct ModuleCandidate {
  std::vector<std::set<NetId>> inputs;
  std::set<NetId> outputs;
};

/// Candidate for one step of the register `flip_flops`.
ModuleCandidate register_candidate(const Netlist& netlist, const std::vector<GateId>& flip_flops);

struct IdentifiedModule {
  ModuleKind kind = ModuleKind::unknown;
  /// CONST_MUL constant or COUNTER step.
  std::uint64_t constant = 0;
  /// Operand words and result, least significant bit first. For SUB the
  /// minuend comes first; for sequential kinds the operand is the state.
  std::vector<std::vector<NetId>> operands;
  std::vector<NetId> result;
  /// COUNTER only: net that makes the register hold when 0.
  std::optional<NetId> enable;
  /// verified for every kind except UNKNOWN; for UNKNOWN either failed or
  /// inconclusive, the latter naming the kind that could not be proven.
  Verification verification = Verification::failed;
  std::optional<ModuleKind> tentative;
  std::string method;
};

struct IdentifyConfig {
  EquivalenceConfig equivalence;
  std::size_t max_width = 12;
  /// Exhaustive order search is tried up to this word width.
  std::size_t fallback_width = 6;
};

/// Throws Error when a word exceeds the width cap or the candidate shape is
/// not supported; cone errors propagate.
IdentifiedModule identify_module(const Netlist& netlist, const ModuleCandidate& candidate,
                                 const IdentifyConfig& config = {});

/// An ordered word fixing a bit order, least significant bit first.
struct Anchor {
  std::vector<NetId> nets;
  std::string source;
};

/// Operand and result words of verified modules plus the nets of every
/// ordered (shift chain) register group.
std::vector<Anchor> find_anchors(const Netlist& netlist, const DataflowGraph& dataflow,
                                 const std::vector<IdentifiedModule>& identified);

enum class OrderConfidence { anchor, propagated, conflict };
std::string to_string(OrderConfidence c);

struct GroupOrder {
  std::vector<GateId> order;  // empty on conflict
  OrderConfidence confidence = OrderConfidence::anchor;
  std::size_t distance = 0;
  std::vector<std::string> sources;

  friend bool operator==(const GroupOrder&, const GroupOrder&) = default;
};

struct BitOrderAssignment {
  std::map<std::uint32_t, GroupOrder> groups;

  friend bool operator==(const BitOrderAssignment&, const BitOrderAssignment&) = default;
};

/// Fixpoint over register groups: a flip-flop takes position i when its
/// output or data net reaches bit i of an ordered word through single-input
/// gates only. A group is ordered when every member gets a distinct
/// position; implications at the smallest distance must agree.
BitOrderAssignment propagate_bit_order(const Netlist& netlist, const DataflowGraph& dataflow,
                                       const std::vector<Anchor>& anchors);

nlohmann::json to_json(const IdentifiedModule& m);
nlohmann::json to_json(const BitOrderAssignment& a);

}  // namespace gatescope
