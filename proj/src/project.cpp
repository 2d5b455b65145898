#include "gatescope/project.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gatescope/serialize.hpp"
#include "gatescope/verilog.hpp"

namespace gatescope {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json netlist_to_json(const Netlist& nl) {
  json modules = json::array();
  for (const auto& [id, m] : nl.modules()) {
    modules.push_back({{"id", id.value},
                       {"name", m.name},
                       {"parent", m.parent ? json(m.parent->value) : json(nullptr)}});
  }
  json nets = json::array();
  for (const auto& [id, n] : nl.nets()) {
    nets.push_back({{"id", id.value}, {"name", n.name}, {"global_input", n.global_input},
                    {"global_output", n.global_output}});
  }
  json gates = json::array();
  for (const auto& [id, g] : nl.gates()) {
    json conns = json::object();
    for (const auto& [pin, net] : g.connections) conns[pin] = net.value;
    gates.push_back({{"id", id.value}, {"name", g.name}, {"type", g.type->name()}, {"module", g.module.value},
                     {"connections", conns}});
  }
  json groupings = json::array();
  for (const auto& [id, gr] : nl.groupings()) {
    json gs = json::array(), ns = json::array(), ms = json::array();
    for (GateId g : gr.gates) gs.push_back(g.value);
    for (NetId n : gr.nets) ns.push_back(n.value);
    for (ModuleId m : gr.modules) ms.push_back(m.value);
    groupings.push_back({{"id", id.value}, {"name", gr.name}, {"color", {gr.color.r, gr.color.g, gr.color.b}},
                         {"gates", gs}, {"nets", ns}, {"modules", ms}});
  }
  const auto next = nl.next_ids();
  return {{"id", nl.id()},
          {"top_module", nl.top_module().value},
          {"next_ids", {{"gate", next.gate}, {"net", next.net}, {"module", next.module}, {"grouping", next.grouping}}},
          {"modules", modules},
          {"nets", nets},
          {"gates", gates},
          {"groupings", groupings}};
}

Netlist netlist_from_json(const json& doc, std::shared_ptr<const GateLibrary> library) {
  Netlist nl(std::move(library), doc.at("id").get<std::string>());
  if (doc.at("top_module").get<std::uint32_t>() != nl.top_module().value) {
    throw ProjectError("unexpected top module id");
  }
  // Parents before children; ids of moved modules need not be ordered.
  std::vector<json> pending(doc.at("modules").begin(), doc.at("modules").end());
  while (!pending.empty()) {
    std::vector<json> later;
    for (const auto& m : pending) {
      const ModuleId id{m.at("id").get<std::uint32_t>()};
      if (id == nl.top_module()) {
        nl.rename_module(id, m.at("name").get<std::string>());
        continue;
      }
      const ModuleId parent{m.at("parent").get<std::uint32_t>()};
      if (nl.module(parent) == nullptr) {
        later.push_back(m);
        continue;
      }
      nl.create_module(m.at("name").get<std::string>(), parent, {}, id);
    }
    if (later.size() == pending.size()) throw ProjectError("module tree is not rooted at the top module");
    pending = std::move(later);
  }
  for (const auto& n : doc.at("nets")) {
    const NetId id = nl.add_net(n.at("name").get<std::string>(), NetId{n.at("id").get<std::uint32_t>()});
    if (n.at("global_input").get<bool>()) nl.set_global_input(id);
    if (n.at("global_output").get<bool>()) nl.set_global_output(id);
  }
  for (const auto& g : doc.at("gates")) {
    const GateId id = nl.add_gate(g.at("name").get<std::string>(), g.at("type").get<std::string>(),
                                  ModuleId{g.at("module").get<std::uint32_t>()}, GateId{g.at("id").get<std::uint32_t>()});
    for (const auto& [pin, net] : g.at("connections").items()) nl.connect(id, pin, NetId{net.get<std::uint32_t>()});
  }
  for (const auto& gr : doc.at("groupings")) {
    const auto& c = gr.at("color");
    const GroupingId id =
        nl.create_grouping(gr.at("name").get<std::string>(),
                           Color{c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()},
                           GroupingId{gr.at("id").get<std::uint32_t>()});
    std::set<GateId> gs;
    std::set<NetId> ns;
    std::set<ModuleId> ms;
    for (const auto& v : gr.at("gates")) gs.insert(GateId{v.get<std::uint32_t>()});
    for (const auto& v : gr.at("nets")) ns.insert(NetId{v.get<std::uint32_t>()});
    for (const auto& v : gr.at("modules")) ms.insert(ModuleId{v.get<std::uint32_t>()});
    nl.assign_to_grouping(id, gs, ns, ms);
  }
  const auto& next = doc.at("next_ids");
  nl.reserve_ids({next.at("gate").get<std::uint32_t>(), next.at("net").get<std::uint32_t>(),
                  next.at("module").get<std::uint32_t>(), next.at("grouping").get<std::uint32_t>()});
  if (!(nl.next_ids() == Netlist::Counters{next.at("gate").get<std::uint32_t>(), next.at("net").get<std::uint32_t>(),
                                           next.at("module").get<std::uint32_t>(),
                                           next.at("grouping").get<std::uint32_t>()})) {
    throw ProjectError("id counters are below the ids in use");
  }
  return nl;
}

std::vector<std::string> synthesized_in(const GateLibrary& lib) {
  std::vector<std::string> out;
  for (const auto& [name, type] : lib.types()) {
    if (auto s = synthesized_cell(name); s && *s == type) out.push_back(name);
  }
  return out;
}

}  // namespace

json project_to_json(const Project& project) {
  const GateLibrary& lib = *project.netlist.library();
  json library;
  if (project.library_reference) {
    library = {{"mode", "referenced"},
               {"path", project.library_reference->path},
               {"sha256", project.library_reference->sha256},
               {"synthesized_cells", synthesized_in(lib)}};
  } else {
    const std::string text = to_liberty(lib);
    library = {{"mode", "embedded"}, {"liberty", text}, {"sha256", sha256_hex(text)}};
  }
  json results = json::object();
  for (const auto& [pass, blob] : project.analysis_results) results[pass] = blob;
  return {{"format_version", Project::format_version},
          {"library", library},
          {"netlist", netlist_to_json(project.netlist)},
          {"analysis_results", results},
          {"metadata", project.metadata}};
}

Project project_from_json(const json& doc, const FileReader& read) {
  try {
    if (!doc.is_object()) throw ProjectError("project document is not an object");
    const int version = doc.at("format_version").get<int>();
    if (version != Project::format_version) {
      throw ProjectError("unsupported project format_version " + std::to_string(version) + " (expected " +
                         std::to_string(Project::format_version) + ")");
    }
    const json& l = doc.at("library");
    const std::string mode = l.at("mode").get<std::string>();
    std::shared_ptr<const GateLibrary> library;
    std::optional<LibraryReference> reference;
    if (mode == "embedded") {
      const std::string text = l.at("liberty").get<std::string>();
      if (sha256_hex(text) != l.at("sha256").get<std::string>()) throw ProjectError("embedded library hash mismatch");
      library = std::make_shared<const GateLibrary>(parse_liberty(text, "<embedded library>"));
    } else if (mode == "referenced") {
      reference = LibraryReference{l.at("path").get<std::string>(), l.at("sha256").get<std::string>()};
      const std::string text = read ? read(reference->path) : read_text_file(reference->path);
      if (sha256_hex(text) != reference->sha256) {
        throw ProjectError("library '" + reference->path + "' does not match the recorded hash");
      }
      GateLibrary parsed = parse_liberty(text, reference->path);
      std::vector<GateType> extra;
      for (const auto& name : l.at("synthesized_cells")) {
        auto cell = synthesized_cell(name.get<std::string>());
        if (!cell) throw ProjectError("unknown synthesized cell '" + name.get<std::string>() + "'");
        if (parsed.lookup(cell->name()) == nullptr) extra.push_back(*cell);
      }
      library = std::make_shared<const GateLibrary>(parsed.extended(std::move(extra)));
    } else {
      throw ProjectError("unknown library mode '" + mode + "'");
    }
    Project p(netlist_from_json(doc.at("netlist"), library));
    p.library_reference = reference;
    for (const auto& [pass, blob] : doc.at("analysis_results").items()) {
      validate_result(pass, blob, p.netlist);
      p.analysis_results.emplace(pass, blob);
    }
    p.metadata = doc.at("metadata");
    if (!p.metadata.is_object()) throw ProjectError("metadata must be an object");
    return p;
  } catch (const ProjectError&) {
    throw;
  } catch (const json::exception& e) {
    throw ProjectError(std::string("corrupted project: ") + e.what());
  } catch (const Error& e) {
    throw ProjectError(std::string("corrupted project: ") + e.what());
  }
}

void save_project(const Project& project, std::ostream& out) {
  out << project_to_json(project).dump(1) << '\n';
  if (!out) throw Error("failed to write project");
}

Project load_project(std::istream& in, const FileReader& read) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ProjectError(std::string("corrupted project: ") + e.what());
  }
  return project_from_json(doc, read);
}

void save_project_file(const Project& project, const std::string& path) {
  std::ostringstream os;
  save_project(project, os);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << os.str();
  if (!out) throw Error("failed writing '" + path + "'");
}

Project load_project_file(const std::string& path) {
  std::istringstream in(read_text_file(path));
  const auto base = std::filesystem::path(path).parent_path();
  return load_project(in, [base](const std::string& lib) {
    std::filesystem::path p(lib);
    return read_text_file(p.is_absolute() ? lib : (base / p).string());
  });
}

}  // namespace gatescope
