#include "gatescope/netlist.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace gatescope {

namespace {

template <typename IdT>
std::string describe(const char* what, IdT id) {
  return std::string(what) + " " + std::to_string(id.value);
}

void insert_sorted(std::vector<Endpoint>& v, Endpoint e) {
  auto it = std::lower_bound(v.begin(), v.end(), e);
  v.insert(it, std::move(e));
}

void erase_endpoint(std::vector<Endpoint>& v, const Endpoint& e) {
  auto it = std::lower_bound(v.begin(), v.end(), e);
  if (it != v.end() && *it == e) v.erase(it);
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::predecessors ? "predecessors" : "successors"; }

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "predecessors" || text == "pred" || text == "fan-in") return Direction::predecessors;
  if (text == "successors" || text == "succ" || text == "fan-out") return Direction::successors;
  return std::nullopt;
}

Netlist::Netlist(std::shared_ptr<const GateLibrary> library, std::string id)
    : id_(std::move(id)), library_(std::move(library)), port_cache_(std::make_unique<PortCache>()) {
  if (!library_) throw NetlistError("netlist requires a gate library");
  top_ = ModuleId{next_.module++};
  modules_.emplace(top_, Module{top_, "top", std::nullopt, {}, {}});
}

Netlist::Netlist(const Netlist& other)
    : id_(other.id_),
      library_(other.library_),
      gates_(other.gates_),
      nets_(other.nets_),
      modules_(other.modules_),
      groupings_(other.groupings_),
      top_(other.top_),
      next_(other.next_),
      port_cache_(std::make_unique<PortCache>()) {}

Netlist& Netlist::operator=(const Netlist& other) {
  if (this != &other) {
    Netlist copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Netlist::Netlist(Netlist&&) noexcept = default;
Netlist& Netlist::operator=(Netlist&&) noexcept = default;
Netlist::~Netlist() = default;

void Netlist::set_library(std::shared_ptr<const GateLibrary> library) {
  if (!library) throw NetlistError("netlist requires a gate library");
  for (auto& [id, g] : gates_) {
    const GateType* t = library->lookup(g.type->name());
    if (t == nullptr || !(*t == *g.type)) {
      throw NetlistError("replacement library changes gate type '" + g.type->name() + "'");
    }
  }
  for (auto& [id, g] : gates_) g.type = library->lookup(g.type->name());
  library_ = std::move(library);
}

void Netlist::invalidate_ports() {
  std::lock_guard lock(port_cache_->mutex);
  port_cache_->dirty = true;
  port_cache_->ports.clear();
}

Gate& Netlist::mutable_gate(GateId id) {
  auto it = gates_.find(id);
  if (it == gates_.end()) throw NetlistError("unknown " + describe("gate", id));
  return it->second;
}
Net& Netlist::mutable_net(NetId id) {
  auto it = nets_.find(id);
  if (it == nets_.end()) throw NetlistError("unknown " + describe("net", id));
  return it->second;
}
Module& Netlist::mutable_module(ModuleId id) {
  auto it = modules_.find(id);
  if (it == modules_.end()) throw NetlistError("unknown " + describe("module", id));
  return it->second;
}
Grouping& Netlist::mutable_grouping(GroupingId id) {
  auto it = groupings_.find(id);
  if (it == groupings_.end()) throw NetlistError("unknown " + describe("grouping", id));
  return it->second;
}

const Gate* Netlist::gate(GateId id) const {
  auto it = gates_.find(id);
  return it == gates_.end() ? nullptr : &it->second;
}
const Net* Netlist::net(NetId id) const {
  auto it = nets_.find(id);
  return it == nets_.end() ? nullptr : &it->second;
}
const Module* Netlist::module(ModuleId id) const {
  auto it = modules_.find(id);
  return it == modules_.end() ? nullptr : &it->second;
}
const Grouping* Netlist::grouping(GroupingId id) const {
  auto it = groupings_.find(id);
  return it == groupings_.end() ? nullptr : &it->second;
}
const Gate& Netlist::get_gate(GateId id) const { return const_cast<Netlist*>(this)->mutable_gate(id); }
const Net& Netlist::get_net(NetId id) const { return const_cast<Netlist*>(this)->mutable_net(id); }
const Module& Netlist::get_module(ModuleId id) const { return const_cast<Netlist*>(this)->mutable_module(id); }
const Grouping& Netlist::get_grouping(GroupingId id) const {
  return const_cast<Netlist*>(this)->mutable_grouping(id);
}

void Netlist::reserve_ids(const Counters& next) {
  next_.gate = std::max(next_.gate, next.gate);
  next_.net = std::max(next_.net, next.net);
  next_.module = std::max(next_.module, next.module);
  next_.grouping = std::max(next_.grouping, next.grouping);
}

// --- construction ---------------------------------------------------------

GateId Netlist::add_gate(std::string name, std::string_view type_name, std::optional<ModuleId> module,
                         std::optional<GateId> forced_id) {
  const GateType* type = library_->lookup(type_name);
  if (type == nullptr) throw NetlistError("unknown gate type '" + std::string(type_name) + "'");
  const ModuleId owner = module.value_or(top_);
  Module& m = mutable_module(owner);
  GateId id;
  if (forced_id) {
    if (!forced_id->valid() || gates_.contains(*forced_id)) throw NetlistError("gate id " + std::to_string(forced_id->value) + " unavailable");
    id = *forced_id;
    next_.gate = std::max(next_.gate, id.value + 1);
  } else {
    id = GateId{next_.gate++};
  }
  gates_.emplace(id, Gate{id, std::move(name), type, owner, {}});
  m.gates.insert(id);
  invalidate_ports();
  return id;
}

NetId Netlist::add_net(std::string name, std::optional<NetId> forced_id) {
  NetId id;
  if (forced_id) {
    if (!forced_id->valid() || nets_.contains(*forced_id)) throw NetlistError("net id " + std::to_string(forced_id->value) + " unavailable");
    id = *forced_id;
    next_.net = std::max(next_.net, id.value + 1);
  } else {
    id = NetId{next_.net++};
  }
  Net n;
  n.id = id;
  n.name = std::move(name);
  nets_.emplace(id, std::move(n));
  return id;
}

void Netlist::connect(GateId gate_id, const std::string& pin, NetId net_id) {
  Gate& g = mutable_gate(gate_id);
  Net& n = mutable_net(net_id);
  const auto dir = g.type->pin_direction(pin);
  if (!dir) throw NetlistError("gate type '" + g.type->name() + "' has no pin '" + pin + "'");
  if (auto it = g.connections.find(pin); it != g.connections.end()) {
    if (*dir == PinDirection::input) {
      throw NetlistError("input pin '" + pin + "' of gate " + std::to_string(gate_id.value) + " is already driven by net " +
                         std::to_string(it->second.value));
    }
    throw NetlistError("output pin '" + pin + "' of gate " + std::to_string(gate_id.value) + " is already connected");
  }
  g.connections.emplace(pin, net_id);
  auto e = Endpoint::at_pin(gate_id, pin, net_id);
  if (*dir == PinDirection::output) {
    insert_sorted(n.drivers, std::move(e));
  } else {
    insert_sorted(n.sinks, std::move(e));
  }
  invalidate_ports();
}

void Netlist::disconnect(GateId gate_id, const std::string& pin) {
  Gate& g = mutable_gate(gate_id);
  auto it = g.connections.find(pin);
  if (it == g.connections.end()) throw NetlistError("pin '" + pin + "' of gate " + std::to_string(gate_id.value) + " is not connected");
  Net& n = mutable_net(it->second);
  const auto e = Endpoint::at_pin(gate_id, pin, n.id);
  if (g.type->pin_direction(pin) == PinDirection::output) {
    erase_endpoint(n.drivers, e);
  } else {
    erase_endpoint(n.sinks, e);
  }
  g.connections.erase(it);
  invalidate_ports();
}

void Netlist::set_global_input(NetId net_id, bool value) {
  mutable_net(net_id).global_input = value;
  invalidate_ports();
}

void Netlist::set_global_output(NetId net_id, bool value) {
  mutable_net(net_id).global_output = value;
  invalidate_ports();
}

void Netlist::remove_gate(GateId gate_id) {
  Gate& g = mutable_gate(gate_id);
  std::vector<std::string> pins;
  for (const auto& [pin, _] : g.connections) pins.push_back(pin);
  for (const auto& pin : pins) disconnect(gate_id, pin);
  mutable_module(g.module).gates.erase(gate_id);
  drop_from_groupings(gate_id);
  gates_.erase(gate_id);
  invalidate_ports();
}

void Netlist::remove_net(NetId net_id) {
  Net& n = mutable_net(net_id);
  std::vector<Endpoint> all = n.drivers;
  all.insert(all.end(), n.sinks.begin(), n.sinks.end());
  for (const auto& e : all) disconnect(e.gate, e.pin);
  drop_from_groupings(net_id);
  nets_.erase(net_id);
  invalidate_ports();
}

void Netlist::rename_gate(GateId gate, std::string name) { mutable_gate(gate).name = std::move(name); }
void Netlist::rename_net(NetId net, std::string name) { mutable_net(net).name = std::move(name); }
void Netlist::rename_module(ModuleId module, std::string name) { mutable_module(module).name = std::move(name); }

std::vector<GateId> Netlist::sequential_gates() const {
  std::vector<GateId> out;
  for (const auto& [id, g] : gates_) {
    if (g.type->is_sequential()) out.push_back(id);
  }
  return out;
}

// --- hierarchy ------------------------------------------------------------

bool Netlist::is_ancestor(ModuleId ancestor, ModuleId module) const {
  std::optional<ModuleId> cur = module;
  while (cur) {
    if (*cur == ancestor) return true;
    cur = get_module(*cur).parent;
  }
  return false;
}

ModuleId Netlist::create_module(std::string name, ModuleId parent, const std::set<GateId>& gate_ids,
                                std::optional<ModuleId> forced_id) {
  mutable_module(parent);
  for (GateId gid : gate_ids) {
    const Gate& g = get_gate(gid);
    if (!is_ancestor(parent, g.module)) {
      throw NetlistError("gate " + std::to_string(gid.value) + " is not available for moving: it belongs to module " +
                         std::to_string(g.module.value) + ", outside module " + std::to_string(parent.value));
    }
  }
  ModuleId id;
  if (forced_id) {
    if (!forced_id->valid() || modules_.contains(*forced_id)) throw NetlistError("module id " + std::to_string(forced_id->value) + " unavailable");
    id = *forced_id;
    next_.module = std::max(next_.module, id.value + 1);
  } else {
    id = ModuleId{next_.module++};
  }
  modules_.emplace(id, Module{id, std::move(name), parent, {}, {}});
  mutable_module(parent).children.insert(id);
  for (GateId gid : gate_ids) {
    Gate& g = mutable_gate(gid);
    mutable_module(g.module).gates.erase(gid);
    g.module = id;
    mutable_module(id).gates.insert(gid);
  }
  invalidate_ports();
  return id;
}

void Netlist::move_module(ModuleId module_id, ModuleId new_parent) {
  if (module_id == top_) throw NetlistError("the top module cannot be moved");
  Module& m = mutable_module(module_id);
  mutable_module(new_parent);
  if (is_ancestor(module_id, new_parent)) {
    throw NetlistError("cycle in module hierarchy: module " + std::to_string(new_parent.value) + " is module " +
                       std::to_string(module_id.value) + " or one of its descendants");
  }
  mutable_module(*m.parent).children.erase(module_id);
  m.parent = new_parent;
  mutable_module(new_parent).children.insert(module_id);
  invalidate_ports();
}

void Netlist::move_gates(ModuleId module_id, const std::set<GateId>& gate_ids) {
  mutable_module(module_id);
  for (GateId gid : gate_ids) get_gate(gid);
  for (GateId gid : gate_ids) {
    Gate& g = mutable_gate(gid);
    mutable_module(g.module).gates.erase(gid);
    g.module = module_id;
    mutable_module(module_id).gates.insert(gid);
  }
  invalidate_ports();
}

void Netlist::remove_module(ModuleId module_id) {
  if (module_id == top_) throw NetlistError("the top module cannot be removed");
  Module m = get_module(module_id);
  Module& parent = mutable_module(*m.parent);
  parent.children.erase(module_id);
  for (GateId gid : m.gates) {
    mutable_gate(gid).module = parent.id;
    parent.gates.insert(gid);
  }
  for (ModuleId child : m.children) {
    mutable_module(child).parent = parent.id;
    parent.children.insert(child);
  }
  drop_from_groupings(module_id);
  modules_.erase(module_id);
  invalidate_ports();
}

std::set<GateId> Netlist::gates_in_subtree(ModuleId module_id) const {
  std::set<GateId> out;
  std::vector<ModuleId> work{module_id};
  while (!work.empty()) {
    const Module& m = get_module(work.back());
    work.pop_back();
    out.insert(m.gates.begin(), m.gates.end());
    work.insert(work.end(), m.children.begin(), m.children.end());
  }
  return out;
}

std::vector<ModulePort> Netlist::module_ports(ModuleId module_id) const {
  get_module(module_id);
  std::lock_guard lock(port_cache_->mutex);
  if (!port_cache_->dirty) {
    if (auto it = port_cache_->ports.find(module_id); it != port_cache_->ports.end()) return it->second;
  } else {
    port_cache_->ports.clear();
    port_cache_->dirty = false;
  }
  const auto inside = gates_in_subtree(module_id);
  std::set<NetId> touched;
  for (GateId gid : inside) {
    for (const auto& [pin, nid] : get_gate(gid).connections) touched.insert(nid);
  }
  std::vector<ModulePort> ports;
  for (NetId nid : touched) {
    const Net& n = get_net(nid);
    bool driven_inside = false;
    bool driven_outside = n.global_input;
    for (const auto& d : n.drivers) (inside.contains(d.gate) ? driven_inside : driven_outside) = true;
    bool read_inside = false;
    bool read_outside = n.global_output;
    for (const auto& s : n.sinks) (inside.contains(s.gate) ? read_inside : read_outside) = true;
    if (driven_outside && read_inside) {
      ports.push_back({nid, PortDirection::input});
    } else if (driven_inside && read_outside) {
      ports.push_back({nid, PortDirection::output});
    }
  }
  port_cache_->ports.emplace(module_id, ports);
  return ports;
}

// --- groupings ------------------------------------------------------------

GroupingId Netlist::create_grouping(std::string name, Color color, std::optional<GroupingId> forced_id) {
  GroupingId id;
  if (forced_id) {
    if (!forced_id->valid() || groupings_.contains(*forced_id)) throw NetlistError("grouping id " + std::to_string(forced_id->value) + " unavailable");
    id = *forced_id;
    next_.grouping = std::max(next_.grouping, id.value + 1);
  } else {
    id = GroupingId{next_.grouping++};
  }
  groupings_.emplace(id, Grouping{id, std::move(name), color, {}, {}, {}});
  return id;
}

void Netlist::drop_from_groupings(const std::variant<GateId, NetId, ModuleId>& object) {
  for (auto& [_, gr] : groupings_) {
    std::visit(
        [&](auto id) {
          using T = decltype(id);
          if constexpr (std::is_same_v<T, GateId>) gr.gates.erase(id);
          if constexpr (std::is_same_v<T, NetId>) gr.nets.erase(id);
          if constexpr (std::is_same_v<T, ModuleId>) gr.modules.erase(id);
        },
        object);
  }
}

void Netlist::assign_to_grouping(GroupingId grouping_id, const std::set<GateId>& gate_ids,
                                 const std::set<NetId>& net_ids, const std::set<ModuleId>& module_ids) {
  mutable_grouping(grouping_id);
  for (GateId g : gate_ids) get_gate(g);
  for (NetId n : net_ids) get_net(n);
  for (ModuleId m : module_ids) get_module(m);
  for (GateId g : gate_ids) drop_from_groupings(g);
  for (NetId n : net_ids) drop_from_groupings(n);
  for (ModuleId m : module_ids) drop_from_groupings(m);
  Grouping& gr = mutable_grouping(grouping_id);
  gr.gates.insert(gate_ids.begin(), gate_ids.end());
  gr.nets.insert(net_ids.begin(), net_ids.end());
  gr.modules.insert(module_ids.begin(), module_ids.end());
}

void Netlist::remove_grouping(GroupingId grouping_id) {
  mutable_grouping(grouping_id);
  groupings_.erase(grouping_id);
}

void Netlist::set_grouping_color(GroupingId grouping_id, Color color) { mutable_grouping(grouping_id).color = color; }

std::optional<GroupingId> Netlist::grouping_of(const std::variant<GateId, NetId, ModuleId>& object) const {
  for (const auto& [id, gr] : groupings_) {
    const bool member = std::visit(
        [&](auto oid) {
          using T = decltype(oid);
          if constexpr (std::is_same_v<T, GateId>) return gr.gates.contains(oid);
          if constexpr (std::is_same_v<T, NetId>) return gr.nets.contains(oid);
          if constexpr (std::is_same_v<T, ModuleId>) return gr.modules.contains(oid);
        },
        object);
    if (member) return id;
  }
  return std::nullopt;
}

// --- traversal ------------------------------------------------------------

std::vector<Endpoint> Netlist::neighbors(ObjectRef object, Direction direction) const {
  std::vector<Endpoint> out;
  auto net_side = [&](const Net& n) {
    if (direction == Direction::predecessors) {
      if (n.global_input) out.push_back(Endpoint::global_input(n.id));
      out.insert(out.end(), n.drivers.begin(), n.drivers.end());
    } else {
      if (n.global_output) out.push_back(Endpoint::global_output(n.id));
      out.insert(out.end(), n.sinks.begin(), n.sinks.end());
    }
  };
  if (const auto* gid = std::get_if<GateId>(&object)) {
    const Gate& g = get_gate(*gid);
    for (const auto& [pin, nid] : g.connections) {
      const bool is_input = g.type->pin_direction(pin) == PinDirection::input;
      if ((direction == Direction::predecessors) == is_input) net_side(get_net(nid));
    }
  } else {
    net_side(get_net(std::get<NetId>(object)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ConeView Netlist::extract_cone(const std::vector<ObjectRef>& start, Direction direction,
                               std::optional<std::size_t> depth, bool stop_at_sequential) const {
  if (depth && *depth == 0) throw NetlistError("cone depth must be positive");
  ConeView view;
  std::deque<std::pair<GateId, std::size_t>> queue;
  auto visit = [&](GateId g, std::size_t d) {
    if (depth && d > *depth) return;
    if (view.gates.insert(g).second) queue.emplace_back(g, d);
  };
  auto gates_across = [&](const Net& n, std::size_t d) {
    const auto& eps = direction == Direction::predecessors ? n.drivers : n.sinks;
    for (const auto& e : eps) visit(e.gate, d);
  };
  for (const auto& obj : start) {
    if (const auto* gid = std::get_if<GateId>(&obj)) {
      get_gate(*gid);
      visit(*gid, 0);
    } else {
      gates_across(get_net(std::get<NetId>(obj)), 1);
    }
  }
  while (!queue.empty()) {
    auto [gid, d] = queue.front();
    queue.pop_front();
    const Gate& g = get_gate(gid);
    if (stop_at_sequential && g.type->is_sequential()) continue;
    for (const auto& [pin, nid] : g.connections) {
      const bool is_input = g.type->pin_direction(pin) == PinDirection::input;
      if ((direction == Direction::predecessors) != is_input) continue;
      gates_across(get_net(nid), d + 1);
    }
  }
  for (GateId gid : view.gates) {
    const Gate& g = get_gate(gid);
    for (const auto& [pin, nid] : g.connections) {
      if (g.type->pin_direction(pin) != PinDirection::input) continue;
      const Net& n = get_net(nid);
      const bool internal = std::any_of(n.drivers.begin(), n.drivers.end(),
                                        [&](const Endpoint& e) { return view.gates.contains(e.gate); });
      if (!internal) view.boundary_nets.insert(nid);
    }
  }
  return view;
}

// --- checks ---------------------------------------------------------------

LintReport Netlist::lint() const {
  LintReport report;
  for (const auto& [id, n] : nets_) {
    if (n.driver_count() > 1) {
      report.issues.push_back({LintIssue::Kind::multi_driver, true, id, {}, {},
                               "net '" + n.name + "' (" + std::to_string(id.value) + ") has " +
                                   std::to_string(n.driver_count()) + " drivers"});
    } else if (n.driver_count() == 0 && (!n.sinks.empty() || n.global_output)) {
      report.issues.push_back({LintIssue::Kind::undriven, false, id, {}, {},
                               "net '" + n.name + "' (" + std::to_string(id.value) + ") has no driver"});
    }
  }
  for (const auto& [id, g] : gates_) {
    for (const auto& p : g.type->pins()) {
      if (p.direction == PinDirection::input && !g.connections.contains(p.name)) {
        report.issues.push_back({LintIssue::Kind::unconnected_input, false, {}, id, p.name,
                                 "input pin '" + p.name + "' of gate '" + g.name + "' (" + std::to_string(id.value) +
                                     ") is unconnected"});
      }
    }
  }
  return report;
}

void require_lint_clean(const Netlist& netlist) {
  for (const auto& issue : netlist.lint().issues) {
    if (issue.error) throw NetlistError("netlist is not lint-clean: " + issue.message);
  }
}

std::optional<std::string> Netlist::check_consistency() const {
  std::ostringstream why;
  std::size_t mirrored = 0;
  for (const auto& [gid, g] : gates_) {
    if (g.id != gid) return "gate key mismatch";
    const Module* m = module(g.module);
    if (m == nullptr || !m->gates.contains(gid)) {
      why << "gate " << gid << " missing from its module";
      return why.str();
    }
    for (const auto& [pin, nid] : g.connections) {
      const Net* n = net(nid);
      const auto dir = g.type->pin_direction(pin);
      if (n == nullptr || !dir) {
        why << "gate " << gid << " pin " << pin << " references a missing net or pin";
        return why.str();
      }
      const auto& side = *dir == PinDirection::output ? n->drivers : n->sinks;
      if (!std::binary_search(side.begin(), side.end(), Endpoint::at_pin(gid, pin, nid))) {
        why << "net " << nid << " lacks endpoint of gate " << gid << " pin " << pin;
        return why.str();
      }
      ++mirrored;
    }
  }
  std::size_t endpoints = 0;
  for (const auto& [nid, n] : nets_) {
    if (!std::is_sorted(n.drivers.begin(), n.drivers.end()) || !std::is_sorted(n.sinks.begin(), n.sinks.end())) {
      why << "net " << nid << " endpoints not sorted";
      return why.str();
    }
    endpoints += n.drivers.size() + n.sinks.size();
    for (const auto* side : {&n.drivers, &n.sinks}) {
      for (const auto& e : *side) {
        const Gate* g = gate(e.gate);
        if (g == nullptr || e.net != nid || g->net_at(e.pin) != nid) {
          why << "net " << nid << " has dangling endpoint (gate " << e.gate << ", pin " << e.pin << ")";
          return why.str();
        }
      }
    }
  }
  if (endpoints != mirrored) return "endpoint count mismatch between gates and nets";

  std::size_t seen = 0;
  for (const auto& [mid, m] : modules_) {
    if (mid == top_) {
      if (m.parent) return "top module has a parent";
    } else {
      if (!m.parent || !modules_.contains(*m.parent) || !get_module(*m.parent).children.contains(mid)) {
        why << "module " << mid << " has a broken parent link";
        return why.str();
      }
      std::size_t steps = 0;
      std::optional<ModuleId> cur = m.parent;
      while (cur && *cur != top_) {
        cur = get_module(*cur).parent;
        if (++steps > modules_.size()) return "module hierarchy contains a cycle";
      }
      if (!cur) {
        why << "module " << mid << " is not below the top module";
        return why.str();
      }
    }
    for (GateId gid : m.gates) {
      const Gate* g = gate(gid);
      if (g == nullptr || g->module != mid) {
        why << "module " << mid << " lists foreign gate " << gid;
        return why.str();
      }
    }
    seen += m.gates.size();
  }
  if (seen != gates_.size()) return "gates not covered exactly once by the module tree";

  std::set<GateId> gg;
  std::set<NetId> gn;
  std::set<ModuleId> gm;
  for (const auto& [id, gr] : groupings_) {
    for (GateId g : gr.gates) {
      if (!gate(g) || !gg.insert(g).second) return "grouping membership violation";
    }
    for (NetId n : gr.nets) {
      if (!net(n) || !gn.insert(n).second) return "grouping membership violation";
    }
    for (ModuleId m : gr.modules) {
      if (!module(m) || !gm.insert(m).second) return "grouping membership violation";
    }
  }
  return std::nullopt;
}

bool operator==(const Netlist& a, const Netlist& b) {
  if (a.id_ != b.id_ || a.top_ != b.top_ || !(a.next_ == b.next_)) return false;
  if (!(*a.library_ == *b.library_)) return false;
  if (a.gates_.size() != b.gates_.size() || a.nets_.size() != b.nets_.size() ||
      a.modules_.size() != b.modules_.size() || a.groupings_.size() != b.groupings_.size()) {
    return false;
  }
  for (auto ia = a.gates_.begin(), ib = b.gates_.begin(); ia != a.gates_.end(); ++ia, ++ib) {
    const Gate& x = ia->second;
    const Gate& y = ib->second;
    if (x.id != y.id || x.name != y.name || x.type->name() != y.type->name() || x.module != y.module ||
        x.connections != y.connections) {
      return false;
    }
  }
  for (auto ia = a.nets_.begin(), ib = b.nets_.begin(); ia != a.nets_.end(); ++ia, ++ib) {
    const Net& x = ia->second;
    const Net& y = ib->second;
    if (x.id != y.id || x.name != y.name || x.drivers != y.drivers || x.sinks != y.sinks ||
        x.global_input != y.global_input || x.global_output != y.global_output) {
      return false;
    }
  }
  for (auto ia = a.modules_.begin(), ib = b.modules_.begin(); ia != a.modules_.end(); ++ia, ++ib) {
    const Module& x = ia->second;
    const Module& y = ib->second;
    if (x.id != y.id || x.name != y.name || x.parent != y.parent || x.children != y.children || x.gates != y.gates) {
      return false;
    }
  }
  for (auto ia = a.groupings_.begin(), ib = b.groupings_.begin(); ia != a.groupings_.end(); ++ia, ++ib) {
    const Grouping& x = ia->second;
    const Grouping& y = ib->second;
    if (x.id != y.id || x.name != y.name || !(x.color == y.color) || x.gates != y.gates || x.nets != y.nets ||
        x.modules != y.modules) {
      return false;
    }
  }
  return true;
}

}  // namespace gatescope
