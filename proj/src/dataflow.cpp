#include "gatescope/dataflow.hpp"

#include <algorithm>
#include <random>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "gatescope/equivalence.hpp"
#include "gatescope/symbolic.hpp"

namespace gatescope {

std::optional<std::uint32_t> DataflowGraph::group_of(GateId ff) const {
  for (const auto& [id, g] : groups) {
    if (std::find(g.members.begin(), g.members.end(), ff) != g.members.end()) return id;
  }
  return std::nullopt;
}

const RegisterGroup* DataflowGraph::find(std::string_view name) const {
  for (const auto& [id, g] : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

namespace {

// Nets feeding the function of `pin` on a combinational gate.
std::vector<NetId> function_inputs(const Gate& g, const std::string& pin) {
  std::vector<NetId> out;
  auto it = g.type->output_functions().find(pin);
  if (it == g.type->output_functions().end()) return out;
  for (const auto& p : it->second.support()) {
    if (auto n = g.net_at(p)) out.push_back(*n);
  }
  return out;
}

std::vector<NetId> pin_nets(const Gate& g, const std::vector<std::string>& pins) {
  std::vector<NetId> out;
  for (const auto& p : pins) {
    if (auto n = g.net_at(p)) out.push_back(*n);
  }
  return out;
}

std::vector<std::string> support_pins(const std::optional<BooleanFunction>& f) {
  return f ? f->support() : std::vector<std::string>{};
}

// Flip-flop sources of every net through combinational gates, as bitsets
// over flip-flop indices; the extra last bit marks a global input.
class StructuralFanin {
 public:
  explicit StructuralFanin(const Netlist& nl) : nl_(nl), ffs_(nl.sequential_gates()) {
    for (std::size_t i = 0; i < ffs_.size(); ++i) index_.emplace(ffs_[i], i);
    words_ = (ffs_.size() + 1 + 63) / 64;
  }

  [[nodiscard]] const std::vector<GateId>& flip_flops() const { return ffs_; }
  [[nodiscard]] std::size_t input_bit() const { return ffs_.size(); }

  const std::vector<std::uint64_t>& of(NetId root) {
    struct Frame {
      NetId net;
      bool expanded;
    };
    std::vector<Frame> stack{{root, false}};
    std::unordered_set<NetId> on_stack;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (memo_.contains(f.net)) {
        stack.pop_back();
        continue;
      }
      const Net& n = nl_.get_net(f.net);
      if (!f.expanded) {
        f.expanded = true;
        on_stack.insert(n.id);
        std::vector<NetId> pending;
        for (const auto& d : n.drivers) {
          const Gate& g = nl_.get_gate(d.gate);
          if (g.type->is_sequential()) continue;
          for (NetId in : function_inputs(g, d.pin)) {
            if (!memo_.contains(in) && !on_stack.contains(in)) pending.push_back(in);
          }
        }
        for (NetId p : pending) stack.push_back({p, false});
        continue;
      }
      std::vector<std::uint64_t> bits(words_, 0);
      auto set = [&](std::size_t b) { bits[b / 64] |= std::uint64_t{1} << (b % 64); };
      if (n.global_input) set(input_bit());
      for (const auto& d : n.drivers) {
        const Gate& g = nl_.get_gate(d.gate);
        if (g.type->is_sequential()) {
          set(index_.at(g.id));
          continue;
        }
        for (NetId in : function_inputs(g, d.pin)) {
          auto it = memo_.find(in);
          if (it == memo_.end()) continue;  // combinational loop back-edge
          for (std::size_t w = 0; w < words_; ++w) bits[w] |= it->second[w];
        }
      }
      memo_.emplace(n.id, std::move(bits));
      on_stack.erase(n.id);
      stack.pop_back();
    }
    return memo_.at(root);
  }

  std::vector<std::size_t> indices(const std::vector<std::uint64_t>& bits) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ffs_.size(); ++i) {
      if ((bits[i / 64] >> (i % 64)) & 1U) out.push_back(i);
    }
    return out;
  }
  bool has_input(const std::vector<std::uint64_t>& bits) const {
    return (bits[input_bit() / 64] >> (input_bit() % 64)) & 1U;
  }

  // Sources over the data pins of flip-flop `i`.
  std::vector<std::uint64_t> data_sources(std::size_t i) {
    const Gate& g = nl_.get_gate(ffs_[i]);
    std::vector<std::uint64_t> bits(words_, 0);
    for (NetId n : pin_nets(g, g.type->data_pins())) {
      const auto& s = of(n);
      for (std::size_t w = 0; w < words_; ++w) bits[w] |= s[w];
    }
    return bits;
  }

 private:
  const Netlist& nl_;
  std::vector<GateId> ffs_;
  std::unordered_map<GateId, std::size_t> index_;
  std::size_t words_ = 1;
  std::unordered_map<NetId, std::vector<std::uint64_t>> memo_;
};

struct FlipFlopInfo {
  ControlSignature control;
  std::set<GateId> sources;
  bool from_input = false;
  std::optional<GateId> chain_source;  // data function is exactly that flip-flop's state
};

// Functional view of flip-flop data cones, with every flip-flop output
// replaced by its state variable s<id>.
class FunctionalAnalysis {
 public:
  FunctionalAnalysis(const Netlist& nl, const std::vector<GateId>& ffs) : nl_(nl) {
    std::set<NetId> wanted;
    for (GateId id : ffs) {
      const Gate& g = nl.get_gate(id);
      for (NetId n : pin_nets(g, g.type->data_pins())) wanted.insert(n);
    }
    for (GateId id : nl.sequential_gates()) {
      const Gate& g = nl.get_gate(id);
      const auto state = BooleanFunction::variable(state_variable(id));
      for (const auto& [pin, binding] : g.type->ff()->output_binding) {
        auto n = g.net_at(pin);
        if (!n) continue;
        state_map_.emplace(net_variable(*n), binding == StateBinding::state ? state : !state);
        state_nets_.emplace(state_variable(id), *n);
      }
    }
    try {
      cones_ = cone_functions(nl, wanted);
      ok_ = true;
    } catch (const NetlistError&) {
      ok_ = false;
    }
  }

  FlipFlopInfo analyze(GateId id, StructuralFanin* structural) {
    const Gate& g = nl_.get_gate(id);
    const FlipFlopSpec& ff = *g.type->ff();
    FlipFlopInfo info;
    ControlSignature& c = info.control;
    std::map<std::string, std::string, std::less<>> clock_names;
    for (const auto& pin : ff.clock.support()) {
      if (auto n = g.net_at(pin)) {
        clock_names.emplace(pin, net_variable(*n));
        c.clock_nets.insert(*n);
      }
    }
    c.clock = rename(ff.clock, clock_names).to_string();
    for (const auto& pin : support_pins(ff.async_reset)) {
      if (auto n = g.net_at(pin)) c.resets.insert(*n);
    }
    for (const auto& pin : support_pins(ff.async_set)) {
      if (auto n = g.net_at(pin)) c.sets.insert(*n);
    }

    if (!ok_) {
      if (structural != nullptr) {
        const auto& ffs = structural->flip_flops();
        auto it = std::find(ffs.begin(), ffs.end(), id);
        auto bits = structural->data_sources(static_cast<std::size_t>(it - ffs.begin()));
        for (std::size_t i : structural->indices(bits)) info.sources.insert(ffs[i]);
        info.from_input = structural->has_input(bits);
      }
      return info;
    }

    std::map<std::string, BooleanFunction, std::less<>> args;
    for (const auto& pin : ff.next_state.support()) {
      auto n = g.net_at(pin);
      if (!n) continue;
      args.emplace(pin, substitute(cones_.at(*n), state_map_));
    }
    BooleanFunction next = substitute(ff.next_state, args);
    const std::string own = state_variable(id);
    const auto vars = next.support();
    std::map<std::string, bool, std::less<>> enables;  // variable -> active value
    if (std::binary_search(vars.begin(), vars.end(), own)) enables = find_enables(next, vars, own);

    BooleanFunction data = next;
    if (!enables.empty()) {
      std::map<std::string, BooleanFunction, std::less<>> active;
      for (const auto& [v, level] : enables) {
        active.emplace(v, BooleanFunction::constant(level));
        c.enables.insert(variable_net(v));
      }
      data = simplify(substitute(next, active));
    }
    for (const auto& v : data.support()) {
      if (auto s = parse_state_variable(v)) {
        info.sources.insert(*s);
      } else if (auto n = parse_net_variable(v); n && nl_.get_net(*n).global_input) {
        info.from_input = true;
      }
    }
    BooleanFunction core = data;
    if (core.kind() == BooleanFunction::Kind::op_not) core = core.operands()[0];
    if (core.is_variable()) {
      if (auto s = parse_state_variable(core.name()); s && *s != id) info.chain_source = *s;
    }
    return info;
  }

 private:
  NetId variable_net(const std::string& v) const {
    if (auto it = state_nets_.find(v); it != state_nets_.end()) return it->second;
    return *parse_net_variable(v);
  }

  std::map<std::string, bool, std::less<>> find_enables(const BooleanFunction& next,
                                                        const std::vector<std::string>& vars,
                                                        const std::string& own) {
    std::map<std::string, bool, std::less<>> out;
    const auto own_index = static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), own) - vars.begin());
    const BooleanFunction roots[] = {next};
    CompiledFunctions compiled(roots, vars);
    std::mt19937_64 rng(0x5eed);
    constexpr int kRounds = 2;
    std::vector<std::vector<std::uint64_t>> samples(kRounds, std::vector<std::uint64_t>(vars.size()));
    for (auto& s : samples) {
      for (auto& w : s) w = rng();
    }
    std::vector<std::uint64_t> scratch;
    const auto own_fn = BooleanFunction::variable(own);
    for (std::size_t v = 0; v < vars.size(); ++v) {
      if (v == own_index) continue;
      for (bool hold_value : {false, true}) {
        bool holds = true;
        for (auto s : samples) {
          s[v] = hold_value ? ~std::uint64_t{0} : 0;
          std::uint64_t result = 0;
          compiled.run(s, std::span(&result, 1), scratch);
          if (result != s[own_index]) {
            holds = false;
            break;
          }
        }
        if (!holds) continue;
        auto cofactor = simplify(substitute(next, vars[v], BooleanFunction::constant(hold_value)));
        if (equivalent(cofactor, own_fn).equal()) {
          out.emplace(vars[v], !hold_value);
          break;
        }
      }
    }
    return out;
  }

  const Netlist& nl_;
  bool ok_ = false;
  std::map<NetId, BooleanFunction> cones_;
  std::map<std::string, BooleanFunction, std::less<>> state_map_;
  std::map<std::string, NetId, std::less<>> state_nets_;
};

using SetKey = std::vector<std::size_t>;

}  // namespace

ControlSignature control_signature(const Netlist& netlist, GateId ff) {
  const Gate& g = netlist.get_gate(ff);
  if (!g.type->is_sequential()) throw NetlistError("gate '" + g.name + "' is not sequential");
  FunctionalAnalysis fa(netlist, {ff});
  return fa.analyze(ff, nullptr).control;
}

std::map<GateId, std::set<GateId>> flip_flop_fanin(const Netlist& netlist) {
  StructuralFanin s(netlist);
  std::map<GateId, std::set<GateId>> out;
  const auto& ffs = s.flip_flops();
  for (std::size_t i = 0; i < ffs.size(); ++i) {
    auto& dst = out[ffs[i]];
    for (std::size_t j : s.indices(s.data_sources(i))) dst.insert(ffs[j]);
  }
  return out;
}

std::map<GroupEdge, std::set<BitPath>> group_connections(const Netlist& netlist,
                                                         const std::map<std::uint32_t, RegisterGroup>& groups) {
  std::unordered_map<GateId, std::uint32_t> owner;
  for (const auto& [id, g] : groups) {
    for (GateId m : g.members) owner.emplace(m, id);
  }
  std::map<GroupEdge, std::set<BitPath>> edges;
  for (const auto& [dst, sources] : flip_flop_fanin(netlist)) {
    auto d = owner.find(dst);
    if (d == owner.end()) continue;
    for (GateId src : sources) {
      auto s = owner.find(src);
      if (s == owner.end()) continue;
      edges[{s->second, d->second}].insert({src, dst});
    }
  }
  return edges;
}

DataflowGraph recover_registers(const Netlist& netlist, const DataflowConfig& config) {
  DataflowGraph graph;
  StructuralFanin structural(netlist);
  std::vector<GateId> ffs;
  for (GateId id : structural.flip_flops()) {
    if (config.exclude.contains(id)) {
      graph.unclustered.insert(id);
    } else {
      ffs.push_back(id);
    }
  }
  if (ffs.empty()) return graph;

  const std::size_t n = ffs.size();
  std::unordered_map<GateId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(ffs[i], i);

  FunctionalAnalysis fa(netlist, ffs);
  std::vector<FlipFlopInfo> info;
  info.reserve(n);
  for (GateId id : ffs) info.push_back(fa.analyze(id, &structural));

  // Predecessor / successor indices and boundary flags.
  std::vector<std::vector<std::size_t>> preds(n), succs(n);
  std::vector<bool> from_input(n), to_output(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    from_input[i] = info[i].from_input;
    for (GateId s : info[i].sources) {
      auto it = index.find(s);
      if (it == index.end()) continue;
      preds[i].push_back(it->second);
      succs[it->second].push_back(i);
    }
  }
  {
    const auto& all = structural.flip_flops();
    for (const auto& [nid, net] : netlist.nets()) {
      if (!net.global_output) continue;
      for (std::size_t j : structural.indices(structural.of(nid))) {
        auto it = index.find(all[j]);
        if (it != index.end()) to_output[it->second] = true;
      }
    }
  }

  // Control classes, numbered by smallest member.
  std::map<ControlSignature, std::size_t> control_class;
  std::vector<std::size_t> control(n);
  for (std::size_t i = 0; i < n; ++i) {
    control[i] = control_class.try_emplace(info[i].control, control_class.size()).first->second;
  }

  // Shift chains are kept together as units.
  std::vector<std::optional<std::size_t>> link_from(n);
  std::vector<std::size_t> link_count(n, 0);
  for (std::size_t b = 0; b < n; ++b) {
    if (!info[b].chain_source) continue;
    auto it = index.find(*info[b].chain_source);
    if (it == index.end() || control[it->second] != control[b]) continue;
    link_from[b] = it->second;
    ++link_count[it->second];
  }
  std::vector<std::optional<std::size_t>> next_in_chain(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (link_from[b] && link_count[*link_from[b]] == 1) {
      next_in_chain[*link_from[b]] = b;
    } else {
      link_from[b].reset();
    }
  }
  std::vector<std::vector<std::size_t>> units;
  std::vector<bool> placed(n, false);
  auto walk = [&](std::size_t head) {
    std::vector<std::size_t> unit;
    for (std::optional<std::size_t> c = head; c && !placed[*c]; c = next_in_chain[*c]) {
      placed[*c] = true;
      unit.push_back(*c);
    }
    units.push_back(std::move(unit));
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!link_from[i]) walk(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!placed[i]) walk(i);  // rings
  }
  auto unit_min = [&](const std::vector<std::size_t>& u) { return *std::min_element(u.begin(), u.end()); };
  std::sort(units.begin(), units.end(), [&](const auto& a, const auto& b) { return unit_min(a) < unit_min(b); });
  std::vector<std::size_t> unit_of(n);
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t i : units[u]) unit_of[i] = u;
  }

  using Signature = std::tuple<SetKey, bool, SetKey, bool>;
  auto signature = [&](std::size_t u, const std::vector<std::size_t>& group) {
    std::set<std::size_t> p, s;
    bool pi = false, po = false;
    for (std::size_t i : units[u]) {
      for (std::size_t j : preds[i]) p.insert(group[unit_of[j]]);
      for (std::size_t j : succs[i]) s.insert(group[unit_of[j]]);
      pi = pi || from_input[i];
      po = po || to_output[i];
    }
    return Signature{SetKey(p.begin(), p.end()), pi, SetKey(s.begin(), s.end()), po};
  };
  // Units are sorted by smallest member, so first-seen numbering is
  // ascending min-member order.
  auto refine = [&](const std::vector<std::size_t>& group) {
    std::map<std::pair<std::size_t, Signature>, std::size_t> ids;
    std::vector<std::size_t> next(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
      next[u] = ids.try_emplace({group[u], signature(u, group)}, ids.size()).first->second;
    }
    return std::make_pair(next, ids.size());
  };
  auto count_groups = [](const std::vector<std::size_t>& group) {
    return std::set<std::size_t>(group.begin(), group.end()).size();
  };

  std::vector<std::size_t> group(units.size());
  {
    std::map<std::size_t, std::size_t> renumber;
    for (std::size_t u = 0; u < units.size(); ++u) {
      group[u] = renumber.try_emplace(control[units[u].front()], renumber.size()).first->second;
    }
  }
  bool stable = false;
  for (std::size_t round = 0; round < config.max_rounds && !stable; ++round) {
    auto [next, count] = refine(group);
    stable = count == count_groups(group);
    group = std::move(next);
  }

  // Groups still splitting when the round budget ran out dissolve into
  // single flip-flops.
  std::vector<std::vector<std::size_t>> clusters;
  {
    std::map<std::size_t, std::vector<std::size_t>> by_group;
    for (std::size_t u = 0; u < units.size(); ++u) by_group[group[u]].push_back(u);
    std::set<std::size_t> unsettled;
    if (!stable) {
      auto [next, count] = refine(group);
      for (const auto& [g, members] : by_group) {
        for (std::size_t u : members) {
          if (next[u] != next[members.front()]) unsettled.insert(g);
        }
      }
    }
    for (const auto& [g, members] : by_group) {
      if (unsettled.contains(g)) {
        for (std::size_t u : members) {
          for (std::size_t i : units[u]) clusters.push_back({i});
        }
        continue;
      }
      std::vector<std::size_t> c;
      for (std::size_t u : members) c.insert(c.end(), units[u].begin(), units[u].end());
      clusters.push_back(std::move(c));
    }
  }

  // Merge clusters with identical (control, predecessor, successor) signatures.
  {
    std::sort(clusters.begin(), clusters.end(), [&](const auto& a, const auto& b) { return unit_min(a) < unit_min(b); });
    std::vector<std::size_t> cluster_of(n);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      for (std::size_t i : clusters[c]) cluster_of[i] = c;
    }
    std::map<std::pair<std::size_t, Signature>, std::size_t> representative;
    std::vector<std::size_t> target(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      std::set<std::size_t> p, s;
      bool pi = false, po = false;
      for (std::size_t i : clusters[c]) {
        for (std::size_t j : preds[i]) p.insert(cluster_of[j]);
        for (std::size_t j : succs[i]) s.insert(cluster_of[j]);
        pi = pi || from_input[i];
        po = po || to_output[i];
      }
      target[c] = c;
      auto key = std::make_pair(control[clusters[c].front()],
                                Signature{SetKey(p.begin(), p.end()), pi, SetKey(s.begin(), s.end()), po});
      auto [it, fresh] = representative.try_emplace(key, c);
      if (fresh) continue;
      const std::size_t width = clusters[it->second].size() + clusters[c].size();
      if (config.expected_widths && !config.expected_widths->contains(width)) continue;
      target[c] = it->second;
    }
    std::vector<std::vector<std::size_t>> merged;
    std::map<std::size_t, std::size_t> slot;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      auto [it, fresh] = slot.try_emplace(target[c], merged.size());
      if (fresh) merged.emplace_back();
      auto& dst = merged[it->second];
      dst.insert(dst.end(), clusters[c].begin(), clusters[c].end());
    }
    clusters = std::move(merged);
  }

  // Parallel chains (pipeline copies of one word) split into one group per stage.
  {
    std::vector<std::vector<std::size_t>> split;
    for (auto& c : clusters) {
      std::set<std::size_t> us;
      for (std::size_t i : c) us.insert(unit_of[i]);
      bool chained = false;
      for (std::size_t u : us) chained = chained || units[u].size() > 1;
      if (us.size() < 2 || !chained) {
        split.push_back(std::move(c));
        continue;
      }
      std::map<std::size_t, std::vector<std::size_t>> by_stage;
      for (std::size_t u : us) {
        for (std::size_t k = 0; k < units[u].size(); ++k) by_stage[k].push_back(units[u][k]);
      }
      for (auto& [k, members] : by_stage) split.push_back(std::move(members));
    }
    clusters = std::move(split);
  }

  std::sort(clusters.begin(), clusters.end(), [&](const auto& a, const auto& b) { return unit_min(a) < unit_min(b); });
  std::uint32_t next_id = 1;
  for (const auto& c : clusters) {
    RegisterGroup g;
    g.id = next_id++;
    g.name = "reg_" + std::to_string(g.id);
    g.control = info[c.front()].control;
    // A group that is exactly one shift chain keeps the chain order.
    const auto& chain = units[unit_of[c.front()]];
    const bool single_chain = c.size() > 1 && chain.size() == c.size() &&
                              std::all_of(c.begin(), c.end(), [&](std::size_t i) { return unit_of[i] == unit_of[c.front()]; });
    for (std::size_t i : c) g.members.push_back(ffs[i]);
    if (single_chain) {
      g.members.clear();
      for (std::size_t i : chain) g.members.push_back(ffs[i]);
      g.ordered = true;
    } else {
      std::sort(g.members.begin(), g.members.end());
    }
    graph.groups.emplace(g.id, std::move(g));
  }
  graph.edges = group_connections(netlist, graph.groups);
  return graph;
}

}  // namespace gatescope
