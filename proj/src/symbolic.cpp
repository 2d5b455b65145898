#include "gatescope/symbolic.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

namespace gatescope {

std::string net_variable(NetId net) { return "n" + std::to_string(net.value); }
std::string state_variable(GateId gate) { return "s" + std::to_string(gate.value); }
std::string cycle_variable(NetId net, std::size_t cycle) {
  return net_variable(net) + "@" + std::to_string(cycle);
}

namespace {

std::optional<std::uint32_t> parse_prefixed(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  std::uint32_t v = 0;
  const char* first = name.data() + 1;
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || v == 0) return std::nullopt;
  return v;
}

}  // namespace

std::optional<NetId> parse_net_variable(std::string_view name) {
  auto v = parse_prefixed(name, 'n');
  return v ? std::optional<NetId>(NetId{*v}) : std::nullopt;
}

std::optional<GateId> parse_state_variable(std::string_view name) {
  auto v = parse_prefixed(name, 's');
  return v ? std::optional<GateId>(GateId{*v}) : std::nullopt;
}

std::map<NetId, BooleanFunction> cone_functions(const Netlist& netlist, const std::set<NetId>& outputs,
                                                const ConeStops& stops) {
  std::unordered_map<NetId, BooleanFunction> done;
  std::unordered_set<NetId> on_stack;

  // Null when the net is a boundary of the traversal.
  auto driver_of = [&](const Net& n) -> const Gate* {
    if (n.driver_count() > 1) {
      throw NetlistError("net '" + n.name + "' (" + std::to_string(n.id.value) + ") has multiple drivers");
    }
    if (stops.cut_nets.contains(n.id) || n.global_input || n.drivers.empty()) return nullptr;
    const Gate& g = netlist.get_gate(n.drivers.front().gate);
    return g.type->is_sequential() ? nullptr : &g;
  };

  struct Frame {
    NetId net;
    bool expanded = false;
  };
  for (NetId root : outputs) {
    std::vector<Frame> stack{{root}};
    while (!stack.empty()) {
      Frame& frame = stack.back();
      if (done.contains(frame.net)) {
        stack.pop_back();
        continue;
      }
      const Net& n = netlist.get_net(frame.net);
      const Gate* g = driver_of(n);
      if (g == nullptr) {
        done.emplace(n.id, BooleanFunction::variable(net_variable(n.id)));
        stack.pop_back();
        continue;
      }
      const std::string& out_pin = n.drivers.front().pin;
      const BooleanFunction& gate_fn = g->type->output_functions().at(out_pin);
      if (!frame.expanded) {
        frame.expanded = true;
        on_stack.insert(n.id);
        std::vector<NetId> pending;
        for (const auto& pin : gate_fn.support()) {
          auto in = g->net_at(pin);
          if (!in) {
            throw NetlistError("input pin '" + pin + "' of gate '" + g->name + "' (" + std::to_string(g->id.value) +
                               ") is unconnected");
          }
          if (on_stack.contains(*in)) {
            std::vector<NetId> cycle;
            bool inside = false;
            for (const auto& f : stack) {
              if (f.net == *in) inside = true;
              if (inside && f.expanded) cycle.push_back(f.net);
            }
            std::string msg = "combinational cycle through nets";
            for (NetId c : cycle) msg += " " + std::to_string(c.value);
            throw CombinationalCycleError(msg, std::move(cycle));
          }
          if (!done.contains(*in)) pending.push_back(*in);
        }
        for (NetId p : pending) stack.push_back(Frame{p});
        continue;
      }
      std::map<std::string, BooleanFunction, std::less<>> args;
      for (const auto& pin : gate_fn.support()) args.emplace(pin, done.at(*g->net_at(pin)));
      done.emplace(n.id, substitute(gate_fn, args));
      on_stack.erase(n.id);
      stack.pop_back();
    }
  }
  std::map<NetId, BooleanFunction> result;
  for (NetId o : outputs) result.emplace(o, done.at(o));
  return result;
}

TransitionSystem build_transition_system(const Netlist& netlist, const std::optional<std::set<GateId>>& region) {
  TransitionSystem ts;
  ConeStops stops;
  if (region) {
    for (const auto& [nid, n] : netlist.nets()) {
      for (const auto& d : n.drivers) {
        if (!region->contains(d.gate)) stops.cut_nets.insert(nid);
      }
    }
  }
  for (GateId gid : netlist.sequential_gates()) {
    if (!region || region->contains(gid)) ts.flip_flops.push_back(gid);
  }

  auto pin_net = [&](const Gate& g, const std::string& pin) {
    auto n = g.net_at(pin);
    if (!n) {
      throw NetlistError("pin '" + pin + "' of flip-flop '" + g.name + "' (" + std::to_string(g.id.value) +
                         ") is unconnected");
    }
    return *n;
  };

  std::set<NetId> wanted;
  for (GateId gid : ts.flip_flops) {
    const Gate& g = netlist.get_gate(gid);
    for (const auto& pin : g.type->input_pins()) {
      if (g.net_at(pin)) wanted.insert(*g.net_at(pin));
    }
  }
  const auto cones = cone_functions(netlist, wanted, stops);

  std::optional<std::string> clock_signature;
  for (GateId gid : ts.flip_flops) {
    const Gate& g = netlist.get_gate(gid);
    const FlipFlopSpec& ff = *g.type->ff();
    auto lift = [&](const BooleanFunction& f) {
      std::map<std::string, BooleanFunction, std::less<>> args;
      for (const auto& pin : f.support()) args.emplace(pin, cones.at(pin_net(g, pin)));
      return substitute(f, args);
    };
    std::map<std::string, std::string, std::less<>> clock_names;
    for (const auto& pin : ff.clock.support()) clock_names.emplace(pin, net_variable(pin_net(g, pin)));
    const std::string sig = rename(ff.clock, clock_names).to_string();
    if (clock_signature && *clock_signature != sig) {
      throw NetlistError("multiple clocks in region: '" + *clock_signature + "' and '" + sig + "'");
    }
    clock_signature = sig;
    ts.next_state.emplace(gid, lift(ff.next_state));
    ts.async_reset.emplace(gid, ff.async_reset ? std::optional(lift(*ff.async_reset)) : std::nullopt);
    ts.async_set.emplace(gid, ff.async_set ? std::optional(lift(*ff.async_set)) : std::nullopt);
    for (const auto& [pin, binding] : ff.output_binding) {
      if (auto n = g.net_at(pin)) ts.state_nets.emplace(*n, std::make_pair(gid, binding == StateBinding::negated_state));
    }
  }

  auto collect = [&](const BooleanFunction& f) {
    for (const auto& v : f.support()) {
      auto nid = parse_net_variable(v);
      if (nid && !ts.state_nets.contains(*nid)) ts.input_nets.insert(*nid);
    }
  };
  for (const auto& [_, f] : ts.next_state) collect(f);
  for (const auto& [_, f] : ts.async_reset) {
    if (f) collect(*f);
  }
  for (const auto& [_, f] : ts.async_set) {
    if (f) collect(*f);
  }
  return ts;
}

std::vector<SymbolicState> sequential_unroll(const Netlist& netlist, const std::optional<std::set<GateId>>& region,
                                             std::size_t cycles, const std::map<NetId, InputPolicy>& inputs) {
  const TransitionSystem ts = build_transition_system(netlist, region);
  for (const auto& [nid, policy] : inputs) {
    if (policy.kind == InputPolicy::Kind::constant_sequence && policy.values.empty()) {
      throw Error("constant input sequence for net " + std::to_string(nid.value) + " is empty");
    }
  }

  std::vector<SymbolicState> states(1);
  for (GateId g : ts.flip_flops) states[0].emplace(g, BooleanFunction::variable(state_variable(g)));

  for (std::size_t t = 0; t < cycles; ++t) {
    const SymbolicState& cur = states.back();
    std::map<std::string, BooleanFunction, std::less<>> args;
    for (const auto& [nid, owner] : ts.state_nets) {
      const auto& s = cur.at(owner.first);
      args.emplace(net_variable(nid), owner.second ? !s : s);
    }
    for (NetId nid : ts.input_nets) {
      auto it = inputs.find(nid);
      if (it == inputs.end() || it->second.kind == InputPolicy::Kind::symbolic_per_cycle) {
        args.emplace(net_variable(nid), BooleanFunction::variable(cycle_variable(nid, t)));
      } else {
        const auto& vals = it->second.values;
        args.emplace(net_variable(nid), BooleanFunction::constant(vals[std::min(t, vals.size() - 1)]));
      }
    }

    auto async_level = [&](const std::optional<BooleanFunction>& f, GateId g, const char* what) {
      if (!f) return false;
      const auto v = simplify(substitute(*f, args));
      if (!v.is_constant()) {
        throw NetlistError(std::string("asynchronous ") + what + " of flip-flop " + std::to_string(g.value) +
                           " is not constant during unrolling");
      }
      return v.constant_value();
    };

    std::vector<BooleanFunction> next;
    next.reserve(ts.flip_flops.size());
    for (GateId g : ts.flip_flops) {
      if (async_level(ts.async_reset.at(g), g, "reset")) {
        next.push_back(BooleanFunction::constant(false));
      } else if (async_level(ts.async_set.at(g), g, "set")) {
        next.push_back(BooleanFunction::constant(true));
      } else {
        next.push_back(substitute(ts.next_state.at(g), args));
      }
    }
    auto simplified = simplify_all(next);
    SymbolicState state;
    for (std::size_t i = 0; i < ts.flip_flops.size(); ++i) state.emplace(ts.flip_flops[i], std::move(simplified[i]));
    states.push_back(std::move(state));
  }
  return states;
}

}  // namespace gatescope
