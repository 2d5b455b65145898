#include "gatescope/passes.hpp"

#include <algorithm>

#include "gatescope/crypto.hpp"
#include "gatescope/serialize.hpp"

namespace gatescope {

using nlohmann::json;

namespace {

const json& section(const json& config, const std::string& key) {
  static const json empty = json::object();
  if (!config.is_object()) return empty;
  auto it = config.find(key);
  if (it == config.end()) return empty;
  if (!it->is_object()) throw Error("config entry '" + key + "' must be an object");
  return *it;
}

template <typename T>
T value_or(const json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error("config value '" + key + "' has the wrong type");
  }
}

EquivalenceConfig equivalence_config(const json& config) {
  const json& s = section(config, "equivalence");
  EquivalenceConfig e;
  e.brute_force_max_vars = value_or<std::size_t>(s, "brute_force_max_vars", e.brute_force_max_vars);
  e.conflict_budget = value_or<std::uint64_t>(s, "conflict_budget", e.conflict_budget);
  return e;
}

ModuleKind parse_kind(const std::string& s) {
  for (ModuleKind k : {ModuleKind::add, ModuleKind::sub, ModuleKind::const_mul, ModuleKind::counter,
                       ModuleKind::shift_reg, ModuleKind::unknown}) {
    if (to_string(k) == s) return k;
  }
  throw Error("unknown module kind '" + s + "'");
}

Verification parse_verification(const std::string& s) {
  for (Verification v : {Verification::verified, Verification::inconclusive, Verification::failed}) {
    if (to_string(v) == s) return v;
  }
  throw Error("unknown verification '" + s + "'");
}

std::vector<NetId> net_list(const json& arr) {
  std::vector<NetId> out;
  for (const auto& v : arr) out.push_back(NetId{v.get<std::uint32_t>()});
  return out;
}

json run_identify(const Netlist& nl, const std::map<std::string, json>& prior, const json& config,
                  const PassContext& ctx) {
  const DataflowGraph df = dataflow_for(nl, prior, config);
  const IdentifyConfig ic = identify_config(config);
  std::set<std::string> wanted;
  for (const auto& r : value_or<std::vector<std::string>>(section(config, "identify"), "registers", {})) {
    wanted.insert(df.groups.at(resolve_group(nl, df, r)).name);
  }
  std::vector<NamedCandidate> cands;
  const auto words = value_or<std::vector<std::vector<std::string>>>(section(config, "identify"), "words", {});
  if (words.empty()) {
    cands = dataflow_candidates(nl, df);
  }
  for (const auto& w : words) {
    std::vector<GateId> ffs;
    std::string label;
    for (const auto& name : w) {
      auto it = std::find_if(nl.gates().begin(), nl.gates().end(), [&](const auto& kv) { return kv.second.name == name; });
      if (it == nl.gates().end()) throw Error("no flip-flop named '" + name + "'");
      ffs.push_back(it->first);
      label += (label.empty() ? "" : ",") + name;
    }
    cands.push_back({"word " + label, register_candidate(nl, ffs)});
  }
  json modules = json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    ctx.check();
    ctx.report(static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, cands.size())));
    const auto& nc = cands[i];
    if (!wanted.empty()) {
      const std::string dst = nc.label.substr(nc.label.rfind(' ') + 1);
      if (!wanted.contains(dst)) continue;
    }
    json entry;
    try {
      entry = to_json(identify_module(nl, nc.candidate, ic));
    } catch (const Error& e) {
      entry = {{"kind", "UNKNOWN"}, {"verification", "failed"}, {"method", std::string("skipped: ") + e.what()},
               {"constant", 0}, {"operands", json::array()}, {"result", json::array()}};
    }
    entry["label"] = nc.label;
    modules.push_back(std::move(entry));
  }
  return {{"modules", modules}};
}

json run_bitorder(const Netlist& nl, const std::map<std::string, json>& prior, const json& config,
                  const PassContext& ctx) {
  const DataflowGraph df = dataflow_for(nl, prior, config);
  json ident;
  if (auto it = prior.find("identify"); it != prior.end()) {
    ident = it->second;
  } else {
    ident = run_identify(nl, prior, config, ctx);
  }
  std::vector<IdentifiedModule> modules;
  for (const auto& m : ident.at("modules")) modules.push_back(identified_from_json(m));
  ctx.check();
  const auto anchors = find_anchors(nl, df, modules);
  json out = to_json(propagate_bit_order(nl, df, anchors));
  json as = json::array();
  for (const auto& a : anchors) {
    json nets = json::array();
    for (NetId n : a.nets) nets.push_back(n.value);
    as.push_back({{"nets", nets}, {"source", a.source}});
  }
  out["anchors"] = as;
  return out;
}

}  // namespace

const std::vector<std::string>& pass_names() {
  static const std::vector<std::string> names = {"dataflow", "crypto", "identify", "bitorder"};
  return names;
}

DataflowConfig dataflow_config(const json& config) {
  const json& s = section(config, "dataflow");
  DataflowConfig c;
  if (s.contains("expected_widths")) {
    c.expected_widths = value_or<std::set<std::size_t>>(s, "expected_widths", {});
  }
  c.max_rounds = value_or<std::size_t>(s, "max_rounds", c.max_rounds);
  return c;
}

IdentifyConfig identify_config(const json& config) {
  const json& s = section(config, "identify");
  IdentifyConfig c;
  c.equivalence = equivalence_config(config);
  c.max_width = value_or<std::size_t>(s, "max_width", c.max_width);
  c.fallback_width = value_or<std::size_t>(s, "fallback_width", c.fallback_width);
  return c;
}

DataflowGraph dataflow_for(const Netlist& netlist, const std::map<std::string, json>& prior, const json& config) {
  if (auto it = prior.find("dataflow"); it != prior.end()) return dataflow_from_json(it->second);
  return recover_registers(netlist, dataflow_config(config));
}

std::vector<NamedCandidate> dataflow_candidates(const Netlist& netlist, const DataflowGraph& dataflow) {
  std::map<std::uint32_t, ModuleCandidate> step;
  for (const auto& [id, g] : dataflow.groups) {
    try {
      step.emplace(id, register_candidate(netlist, g.members));
    } catch (const Error&) {
      // flip-flops without a single data pin take part in no candidate
    }
  }
  std::map<std::uint32_t, std::set<std::uint32_t>> preds;
  for (const auto& [e, paths] : dataflow.edges) preds[e.second].insert(e.first);

  std::vector<NamedCandidate> out;
  for (const auto& [id, g] : dataflow.groups) {
    auto self = step.find(id);
    if (self == step.end()) continue;
    const auto& p = preds[id];
    if (p.contains(id)) {
      out.push_back({g.name + " step " + g.name, self->second});
      continue;
    }
    if (p.empty() || p.size() > 2) continue;
    ModuleCandidate c;
    std::string label;
    bool usable = true;
    for (std::uint32_t src : p) {
      auto it = step.find(src);
      if (it == step.end()) {
        usable = false;
        break;
      }
      c.inputs.push_back(it->second.inputs.front());
      label += (label.empty() ? "" : ",") + dataflow.groups.at(src).name;
    }
    if (!usable) continue;
    c.outputs = self->second.outputs;
    out.push_back({label + " -> " + g.name, std::move(c)});
  }
  return out;
}

IdentifiedModule identified_from_json(const json& doc) {
  IdentifiedModule m;
  m.kind = parse_kind(doc.at("kind").get<std::string>());
  m.constant = doc.value("constant", std::uint64_t{0});
  for (const auto& w : doc.at("operands")) m.operands.push_back(net_list(w));
  m.result = net_list(doc.at("result"));
  if (doc.contains("enable")) m.enable = NetId{doc.at("enable").get<std::uint32_t>()};
  m.verification = parse_verification(doc.at("verification").get<std::string>());
  if (doc.contains("tentative")) m.tentative = parse_kind(doc.at("tentative").get<std::string>());
  m.method = doc.value("method", std::string());
  return m;
}

std::uint32_t resolve_group(const Netlist& netlist, const DataflowGraph& dataflow, const std::string& ref) {
  if (const RegisterGroup* g = dataflow.find(ref)) return g->id;
  for (const auto& [id, gate] : netlist.gates()) {
    if (gate.name != ref) continue;
    if (auto g = dataflow.group_of(id)) return *g;
  }
  throw Error("no register group or flip-flop named '" + ref + "'");
}

std::vector<std::string> dependent_passes(const std::string& pass) {
  if (pass == "dataflow") return {"crypto", "identify", "bitorder"};
  if (pass == "identify") return {"bitorder"};
  return {};
}

std::set<GroupEdge> resolve_highlights(const Netlist& netlist, const DataflowGraph& dataflow,
                                       const std::vector<std::string>& requests, std::vector<std::string>* missing) {
  std::set<GroupEdge> out;
  for (const auto& r : requests) {
    const auto arrow = r.find("->");
    if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= r.size()) {
      throw Error("highlight '" + r + "' is not of the form SRC->DST");
    }
    const GroupEdge e{resolve_group(netlist, dataflow, r.substr(0, arrow)),
                      resolve_group(netlist, dataflow, r.substr(arrow + 2))};
    if (dataflow.edges.contains(e)) {
      out.insert(e);
    } else if (missing != nullptr) {
      missing->push_back(r);
    }
  }
  return out;
}

json run_pass(const std::string& name, const Netlist& netlist, const std::map<std::string, json>& prior,
              const json& config, const PassContext& context) {
  context.check();
  context.report(0.0);
  json result;
  if (name == "dataflow") {
    result = to_json(recover_registers(netlist, dataflow_config(config)));
  } else if (name == "crypto") {
    ScanOptions opts;
    opts.threads = value_or<std::size_t>(section(config, "crypto"), "threads", 0);
    if (auto it = prior.find("dataflow"); it != prior.end()) opts.dataflow = dataflow_from_json(it->second);
    result = to_json(scan_crypto(netlist, opts));
  } else if (name == "identify") {
    result = run_identify(netlist, prior, config, context);
  } else if (name == "bitorder") {
    result = run_bitorder(netlist, prior, config, context);
  } else {
    throw Error("unknown pass '" + name + "'");
  }
  context.check();
  context.report(1.0);
  return result;
}

}  // namespace gatescope
