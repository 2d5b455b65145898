#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gatescope/boolean_function.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

// Variable naming shared by every pass that turns netlist structure into
// Boolean functions.
std::string net_variable(NetId net);                     // n<id>
std::string state_variable(GateId gate);                 // s<id>
std::string cycle_variable(NetId net, std::size_t cycle);  // n<id>@<cycle>
/// Inverse of net_variable; empty for any other name.
std::optional<NetId> parse_net_variable(std::string_view name);
std::optional<GateId> parse_state_variable(std::string_view name);

class CombinationalCycleError : public NetlistError {
 public:
  CombinationalCycleError(const std::string& message, std::vector<NetId> cycle)
      : NetlistError(message), cycle_(std::move(cycle)) {}
  [[nodiscard]] const std::vector<NetId>& cycle() const { return cycle_; }

 private:
  std::vector<NetId> cycle_;
};

/// Where cone extraction stops. Global inputs, undriven nets and outputs of
/// sequential gates always stop the traversal.
struct ConeStops {
  std::set<NetId> cut_nets;
};

/// Function of each requested net over the stop-boundary variables n<id>,
/// built by composing library gate functions. Throws CombinationalCycleError.
std::map<NetId, BooleanFunction> cone_functions(const Netlist& netlist, const std::set<NetId>& outputs,
                                                const ConeStops& stops = {});

/// Per-net stimulus policy for sequential unrolling.
struct InputPolicy {
  enum class Kind { symbolic_per_cycle, constant_sequence };
  Kind kind = Kind::symbolic_per_cycle;
  /// Value at cycle t is values[min(t, size-1)].
  std::vector<bool> values;

  static InputPolicy symbolic() { return {}; }
  static InputPolicy constants(std::vector<bool> v) { return {Kind::constant_sequence, std::move(v)}; }
};

/// Flip-flop gate -> stored value as a function of s<gate> initial-state
/// variables and n<net>@<cycle> input variables.
using SymbolicState = std::map<GateId, BooleanFunction>;

/// Next-state function of every flip-flop in `region` (whole netlist when
/// empty), over its own net variables: flip-flop outputs and region inputs.
struct TransitionSystem {
  std::vector<GateId> flip_flops;
  std::map<GateId, BooleanFunction> next_state;
  std::map<GateId, std::optional<BooleanFunction>> async_reset;
  std::map<GateId, std::optional<BooleanFunction>> async_set;
  /// Output nets of each flip-flop with their polarity relative to the state.
  std::map<NetId, std::pair<GateId, bool>> state_nets;  // net -> (ff, negated)
  std::set<NetId> input_nets;
};

/// Throws NetlistError when the region's flip-flops do not share one clock.
TransitionSystem build_transition_system(const Netlist& netlist, const std::optional<std::set<GateId>>& region);

/// States after 0..cycles clock edges; index 0 holds the initial variables.
/// Nets without an entry in `inputs` are treated as symbolic per cycle.
std::vector<SymbolicState> sequential_unroll(const Netlist& netlist, const std::optional<std::set<GateId>>& region,
                                             std::size_t cycles,
                                             const std::map<NetId, InputPolicy>& inputs = {});

}  // namespace gatescope
