#include "gatescope/serialize.hpp"

namespace gatescope {

using nlohmann::json;

namespace {

template <typename IdT>
json id_list(const std::set<IdT>& ids) {
  json out = json::array();
  for (const auto& i : ids) out.push_back(i.value);
  return out;
}

template <typename IdT>
std::set<IdT> id_set(const json& arr) {
  std::set<IdT> out;
  for (const auto& v : arr) out.insert(IdT{v.get<std::uint32_t>()});
  return out;
}

void require_gate(const Netlist& nl, std::uint32_t id, const std::string& pass) {
  if (nl.gate(GateId{id}) == nullptr) throw Error(pass + " result references missing gate " + std::to_string(id));
}

void require_net(const Netlist& nl, std::uint32_t id, const std::string& pass) {
  if (nl.net(NetId{id}) == nullptr) throw Error(pass + " result references missing net " + std::to_string(id));
}

// Every integer under a key naming gates or nets must exist.
void check_ids(const json& node, const Netlist& nl, const std::string& pass, const std::string& key) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) check_ids(v, nl, pass, k);
  } else if (node.is_array()) {
    for (const auto& v : node) check_ids(v, nl, pass, key);
  } else if (node.is_number_integer()) {
    static const std::set<std::string> gate_keys = {"members", "gates", "gate", "paths", "unclustered", "flip_flops"};
    static const std::set<std::string> net_keys = {"inputs", "outputs", "nets", "net", "word", "clock_nets",
                                                   "enables", "resets", "sets", "operands", "result", "enable"};
    if (!gate_keys.contains(key) && !net_keys.contains(key)) return;
    const auto value = node.get<std::int64_t>();
    if (value <= 0 || value > UINT32_MAX) throw Error(pass + " result has invalid id " + std::to_string(value));
    if (gate_keys.contains(key)) require_gate(nl, static_cast<std::uint32_t>(value), pass);
    if (net_keys.contains(key)) require_net(nl, static_cast<std::uint32_t>(value), pass);
  }
}

}  // namespace

json to_json(const DataflowGraph& graph) {
  json groups = json::array();
  for (const auto& [id, g] : graph.groups) {
    json members = json::array();
    for (GateId m : g.members) members.push_back(m.value);
    groups.push_back({{"id", id},
                      {"name", g.name},
                      {"members", members},
                      {"ordered", g.ordered},
                      {"control",
                       {{"clock", g.control.clock},
                        {"clock_nets", id_list(g.control.clock_nets)},
                        {"enables", id_list(g.control.enables)},
                        {"resets", id_list(g.control.resets)},
                        {"sets", id_list(g.control.sets)}}}});
  }
  json edges = json::array();
  for (const auto& [e, paths] : graph.edges) {
    json ps = json::array();
    for (const auto& [a, b] : paths) ps.push_back({a.value, b.value});
    edges.push_back({{"src", e.first}, {"dst", e.second}, {"paths", ps}});
  }
  return {{"groups", groups}, {"edges", edges}, {"unclustered", id_list(graph.unclustered)}};
}

DataflowGraph dataflow_from_json(const json& doc) {
  DataflowGraph g;
  for (const auto& j : doc.at("groups")) {
    RegisterGroup r;
    r.id = j.at("id").get<std::uint32_t>();
    r.name = j.at("name").get<std::string>();
    for (const auto& m : j.at("members")) r.members.push_back(GateId{m.get<std::uint32_t>()});
    r.ordered = j.at("ordered").get<bool>();
    const auto& c = j.at("control");
    r.control.clock = c.at("clock").get<std::string>();
    r.control.clock_nets = id_set<NetId>(c.at("clock_nets"));
    r.control.enables = id_set<NetId>(c.at("enables"));
    r.control.resets = id_set<NetId>(c.at("resets"));
    r.control.sets = id_set<NetId>(c.at("sets"));
    g.groups.emplace(r.id, std::move(r));
  }
  for (const auto& e : doc.at("edges")) {
    auto& paths = g.edges[{e.at("src").get<std::uint32_t>(), e.at("dst").get<std::uint32_t>()}];
    for (const auto& p : e.at("paths")) paths.insert({GateId{p.at(0).get<std::uint32_t>()}, GateId{p.at(1).get<std::uint32_t>()}});
  }
  g.unclustered = id_set<GateId>(doc.at("unclustered"));
  return g;
}

void validate_result(const std::string& pass, const json& blob, const Netlist& netlist) {
  if (pass == "dataflow") {
    const DataflowGraph g = dataflow_from_json(blob);
    for (const auto& [id, r] : g.groups) {
      for (GateId m : r.members) require_gate(netlist, m.value, pass);
    }
    for (const auto& [e, paths] : g.edges) {
      if (!g.groups.contains(e.first) || !g.groups.contains(e.second)) {
        throw Error("dataflow result has an edge between unknown groups");
      }
    }
  }
  check_ids(blob, netlist, pass, "");
}

}  // namespace gatescope
