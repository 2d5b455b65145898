#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gatescope/gate_library.hpp"
#include "gatescope/ids.hpp"

namespace gatescope {

/// One side of a net connection: a gate pin, or the netlist's own boundary.
struct Endpoint {
  enum class Kind : std::uint8_t { gate_pin, global_input, global_output };

  GateId gate;
  std::string pin;
  NetId net;
  Kind kind = Kind::gate_pin;

  static Endpoint at_pin(GateId g, std::string p, NetId n) { return Endpoint{g, std::move(p), n, Kind::gate_pin}; }
  static Endpoint global_input(NetId n) { return Endpoint{GateId{}, {}, n, Kind::global_input}; }
  static Endpoint global_output(NetId n) { return Endpoint{GateId{}, {}, n, Kind::global_output}; }

  auto operator<=>(const Endpoint&) const = default;
};

struct Gate {
  GateId id;
  std::string name;
  const GateType* type = nullptr;
  ModuleId module;
  std::map<std::string, NetId> connections;  // pin -> net, partial

  [[nodiscard]] std::optional<NetId> net_at(const std::string& pin) const {
    auto it = connections.find(pin);
    return it == connections.end() ? std::nullopt : std::optional<NetId>(it->second);
  }
};

struct Net {
  NetId id;
  std::string name;
  std::vector<Endpoint> drivers;  // gate output pins, sorted
  std::vector<Endpoint> sinks;    // gate input pins, sorted
  bool global_input = false;
  bool global_output = false;

  [[nodiscard]] std::size_t driver_count() const { return drivers.size() + (global_input ? 1 : 0); }
  /// The unique driving gate, if exactly one gate and no global input drive it.
  [[nodiscard]] std::optional<GateId> driver_gate() const {
    if (drivers.size() == 1 && !global_input) return drivers.front().gate;
    return std::nullopt;
  }
};

struct Module {
  ModuleId id;
  std::string name;
  std::optional<ModuleId> parent;
  std::set<ModuleId> children;
  std::set<GateId> gates;  // direct members only
};

enum class PortDirection { input, output };

struct ModulePort {
  NetId net;
  PortDirection direction = PortDirection::input;

  friend bool operator==(const ModulePort&, const ModulePort&) = default;
};

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Color&, const Color&) = default;
};

struct Grouping {
  GroupingId id;
  std::string name;
  Color color;
  std::set<GateId> gates;
  std::set<NetId> nets;
  std::set<ModuleId> modules;
};

enum class Direction { predecessors, successors };

using ObjectRef = std::variant<GateId, NetId>;

/// Result of a cone traversal: member gates plus the nets that enter the
/// cone from outside (inputs of member gates not driven by a member).
struct ConeView {
  std::set<GateId> gates;
  std::set<NetId> boundary_nets;
};

struct LintIssue {
  enum class Kind { multi_driver, undriven, unconnected_input };
  Kind kind;
  bool error = false;
  NetId net;
  GateId gate;
  std::string pin;
  std::string message;
};

struct LintReport {
  std::vector<LintIssue> issues;
  [[nodiscard]] bool clean() const {
    for (const auto& i : issues) {
      if (i.error) return false;
    }
    return true;
  }
};

/// The netlist graph. Ids are dense, start at 1 and are never reused.
/// Mutations must be externally serialized; const member functions may run
/// concurrently.
class Netlist {
 public:
  explicit Netlist(std::shared_ptr<const GateLibrary> library, std::string id = "netlist");
  Netlist(const Netlist& other);
  Netlist& operator=(const Netlist& other);
  Netlist(Netlist&&) noexcept;
  Netlist& operator=(Netlist&&) noexcept;
  ~Netlist();

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const std::shared_ptr<const GateLibrary>& library() const { return library_; }
  /// Replaces the library with an extended copy; every type in use must keep its definition.
  void set_library(std::shared_ptr<const GateLibrary> library);

  // construction ---------------------------------------------------------
  GateId add_gate(std::string name, std::string_view type_name, std::optional<ModuleId> module = std::nullopt,
                  std::optional<GateId> forced_id = std::nullopt);
  NetId add_net(std::string name, std::optional<NetId> forced_id = std::nullopt);
  /// Errors: unknown gate, net or pin; pin already connected.
  void connect(GateId gate, const std::string& pin, NetId net);
  void disconnect(GateId gate, const std::string& pin);
  void set_global_input(NetId net, bool value = true);
  void set_global_output(NetId net, bool value = true);
  void remove_gate(GateId gate);
  void remove_net(NetId net);
  void rename_gate(GateId gate, std::string name);
  void rename_net(NetId net, std::string name);

  // hierarchy ------------------------------------------------------------
  [[nodiscard]] ModuleId top_module() const { return top_; }
  /// Moves `gates` (members of `parent` or its descendants) into a new child of `parent`.
  ModuleId create_module(std::string name, ModuleId parent, const std::set<GateId>& gates = {},
                         std::optional<ModuleId> forced_id = std::nullopt);
  /// Errors with a cycle error when `new_parent` is `module` or one of its descendants.
  void move_module(ModuleId module, ModuleId new_parent);
  void move_gates(ModuleId module, const std::set<GateId>& gates);
  /// Members and children are handed to the parent. The top module cannot be removed.
  void remove_module(ModuleId module);
  void rename_module(ModuleId module, std::string name);
  /// Nets crossing the module boundary (descendants included), by net id.
  [[nodiscard]] std::vector<ModulePort> module_ports(ModuleId module) const;
  /// Gates of the module and all of its descendants.
  [[nodiscard]] std::set<GateId> gates_in_subtree(ModuleId module) const;
  [[nodiscard]] bool is_ancestor(ModuleId ancestor, ModuleId module) const;

  // groupings -------------------------------------------------------------
  GroupingId create_grouping(std::string name, Color color, std::optional<GroupingId> forced_id = std::nullopt);
  /// Each object ends up in this grouping only; previous memberships are dropped.
  void assign_to_grouping(GroupingId grouping, const std::set<GateId>& gates, const std::set<NetId>& nets = {},
                          const std::set<ModuleId>& modules = {});
  void remove_grouping(GroupingId grouping);
  void set_grouping_color(GroupingId grouping, Color color);

  // lookup ----------------------------------------------------------------
  [[nodiscard]] const Gate* gate(GateId id) const;
  [[nodiscard]] const Net* net(NetId id) const;
  [[nodiscard]] const Module* module(ModuleId id) const;
  [[nodiscard]] const Grouping* grouping(GroupingId id) const;
  /// Throwing variants.
  const Gate& get_gate(GateId id) const;
  const Net& get_net(NetId id) const;
  const Module& get_module(ModuleId id) const;
  const Grouping& get_grouping(GroupingId id) const;
  [[nodiscard]] std::optional<GroupingId> grouping_of(const std::variant<GateId, NetId, ModuleId>& object) const;

  [[nodiscard]] const std::map<GateId, Gate>& gates() const { return gates_; }
  [[nodiscard]] const std::map<NetId, Net>& nets() const { return nets_; }
  [[nodiscard]] const std::map<ModuleId, Module>& modules() const { return modules_; }
  [[nodiscard]] const std::map<GroupingId, Grouping>& groupings() const { return groupings_; }

  [[nodiscard]] std::vector<GateId> sequential_gates() const;

  struct Counters {
    std::uint32_t gate = 1, net = 1, module = 1, grouping = 1;
    friend bool operator==(const Counters&, const Counters&) = default;
  };
  [[nodiscard]] Counters next_ids() const { return next_; }
  /// Raise the id counters (used when restoring a project); never lowers them.
  void reserve_ids(const Counters& next);

  // traversal -------------------------------------------------------------
  /// Immediate fan-in or fan-out endpoints in ascending order.
  [[nodiscard]] std::vector<Endpoint> neighbors(ObjectRef object, Direction direction) const;
  /// Breadth-first closure from `start` up to `depth` gate hops (unbounded
  /// when empty). A start gate sits at depth 0; a start net's driver or sink
  /// gates at depth 1. With `stop_at_sequential`, sequential gates are
  /// included but never expanded.
  [[nodiscard]] ConeView extract_cone(const std::vector<ObjectRef>& start, Direction direction,
                                      std::optional<std::size_t> depth, bool stop_at_sequential) const;

  [[nodiscard]] LintReport lint() const;
  /// Full scan of the bidirectional endpoint and hierarchy invariants;
  /// returns a description of the first violation, or nothing.
  [[nodiscard]] std::optional<std::string> check_consistency() const;

  friend bool operator==(const Netlist& a, const Netlist& b);

 private:
  Gate& mutable_gate(GateId id);
  Net& mutable_net(NetId id);
  Module& mutable_module(ModuleId id);
  Grouping& mutable_grouping(GroupingId id);
  void invalidate_ports();
  void drop_from_groupings(const std::variant<GateId, NetId, ModuleId>& object);

  std::string id_;
  std::shared_ptr<const GateLibrary> library_;
  std::map<GateId, Gate> gates_;
  std::map<NetId, Net> nets_;
  std::map<ModuleId, Module> modules_;
  std::map<GroupingId, Grouping> groupings_;
  ModuleId top_;
  Counters next_;

  struct PortCache {
    std::mutex mutex;
    bool dirty = true;
    std::map<ModuleId, std::vector<ModulePort>> ports;
  };
  std::unique_ptr<PortCache> port_cache_;
};

/// Throws NetlistError naming the first lint error.
void require_lint_clean(const Netlist& netlist);

std::string to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

}  // namespace gatescope
