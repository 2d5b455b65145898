#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <iostream>
#include <thread>

#include "gatescope/dot.hpp"
#include "gatescope/passes.hpp"
#include "gatescope/project.hpp"
#include "gatescope/serialize.hpp"
#include "gatescope/service.hpp"
#include "gatescope/simulator.hpp"
#include "gatescope/symbolic.hpp"
#include "gatescope/verilog.hpp"

namespace gatescope {

using nlohmann::json;

namespace {

struct Options {
  std::string project;
  std::string project_flag;
  std::string out;
  std::string config;
  std::string json_out;
  std::string lib;
  std::string netlist;
  std::string dot;
  std::string stimulus;
  std::string bind = "127.0.0.1:8080";
  std::vector<std::string> highlight;
  std::vector<std::string> registers;
  std::vector<std::string> constants;
  std::vector<std::string> words;
  std::size_t threads = 0;
  std::size_t cycles = 0;
  std::uint64_t until = 0;
  std::uint32_t module = 0;
  bool reference_library = false;
  bool fail_if_empty = false;
  bool fresh = false;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

const std::string& project_path(const Options& o) {
  if (!o.project.empty() && !o.project_flag.empty() && o.project != o.project_flag) {
    throw CLI::ValidationError("project", "given both as argument and --project with different values");
  }
  const std::string& p = o.project.empty() ? o.project_flag : o.project;
  if (p.empty()) throw CLI::RequiredError("project");
  return p;
}

Project open_project(const Options& o) { return load_project_file(project_path(o)); }

// Effective configuration: the project's metadata "config" object patched by --config.
json effective_config(const Options& o, const Project* p) {
  json c = json::object();
  if (p != nullptr && p->metadata.contains("config") && p->metadata.at("config").is_object()) {
    c = p->metadata.at("config");
  }
  if (!o.config.empty()) {
    json file;
    try {
      file = json::parse(read_text_file(o.config));
    } catch (const json::parse_error& e) {
      throw Error("config '" + o.config + "': " + e.what());
    }
    if (!file.is_object()) throw Error("config '" + o.config + "' must hold a JSON object");
    c.merge_patch(file);
  }
  return c;
}

Netlist load_sources(const Options& o, std::shared_ptr<const GateLibrary>* lib_out = nullptr) {
  const std::string lib_text = read_text_file(o.lib);
  auto lib = std::make_shared<const GateLibrary>(parse_liberty(lib_text, o.lib));
  if (lib_out != nullptr) *lib_out = lib;
  return parse_verilog(read_text_file(o.netlist), lib, o.netlist);
}

// Runs a pass, stores its result, and saves the project when --out is given.
json run_and_store(const std::string& pass, Project& p, const Options& o) {
  std::map<std::string, json> prior = o.fresh ? std::map<std::string, json>{} : p.analysis_results;
  json result = run_pass(pass, p.netlist, prior, effective_config(o, &p));
  for (const auto& dep : dependent_passes(pass)) p.analysis_results.erase(dep);
  p.analysis_results[pass] = result;
  if (!o.json_out.empty()) write_file(o.json_out, result.dump(2) + "\n");
  if (!o.out.empty()) save_project_file(p, o.out);
  return result;
}

std::string net_name(const Netlist& nl, std::uint32_t id) { return nl.get_net(NetId{id}).name; }
std::string gate_name(const Netlist& nl, std::uint32_t id) { return nl.get_gate(GateId{id}).name; }

int cmd_parse(const Options& o, std::ostream& out) {
  std::shared_ptr<const GateLibrary> lib;
  Netlist nl = load_sources(o, &lib);
  Project p(std::move(nl));
  if (o.reference_library) {
    p.library_reference = LibraryReference{std::filesystem::absolute(o.lib).string(), sha256_hex(read_text_file(o.lib))};
  }
  p.metadata["source"] = {{"library", o.lib}, {"netlist", o.netlist}};
  if (!o.out.empty()) save_project_file(p, o.out);
  out << "gates: " << p.netlist.gates().size() << "\n"
      << "nets: " << p.netlist.nets().size() << "\n"
      << "flip-flops: " << p.netlist.sequential_gates().size() << "\n";
  if (!o.out.empty()) out << "project written to " << o.out << "\n";
  return exit_ok;
}

int cmd_info(const Options& o, std::ostream& out) {
  const Project p = open_project(o);
  const Netlist& nl = p.netlist;
  std::map<std::string, std::size_t> types;
  for (const auto& [id, g] : nl.gates()) ++types[g.type->name()];
  std::size_t in = 0, outs = 0;
  for (const auto& [id, n] : nl.nets()) {
    in += n.global_input ? 1 : 0;
    outs += n.global_output ? 1 : 0;
  }
  out << "netlist: " << nl.id() << "\n"
      << "library: " << nl.library()->name()
      << (p.library_reference ? " (referenced: " + p.library_reference->path + ")" : std::string(" (embedded)")) << "\n"
      << "gates: " << nl.gates().size() << "\n"
      << "nets: " << nl.nets().size() << " (" << in << " inputs, " << outs << " outputs)\n"
      << "modules: " << nl.modules().size() << "\n"
      << "groupings: " << nl.groupings().size() << "\n"
      << "flip-flops: " << nl.sequential_gates().size() << "\n"
      << "gate types:\n";
  for (const auto& [t, c] : types) out << "  " << t << " " << c << "\n";
  out << "stored results:";
  for (const auto& [name, blob] : p.analysis_results) out << " " << name;
  out << "\n";
  return exit_ok;
}

int cmd_lint(const Options& o, std::ostream& out) {
  std::optional<Project> p;
  Netlist nl = [&] {
    if (!o.lib.empty() || !o.netlist.empty()) {
      if (o.lib.empty() || o.netlist.empty()) throw CLI::ValidationError("lint", "--lib and --netlist go together");
      return load_sources(o);
    }
    p.emplace(open_project(o));
    return p->netlist;
  }();
  const LintReport r = nl.lint();
  std::size_t errors = 0;
  for (const auto& i : r.issues) {
    out << (i.error ? "error: " : "warning: ") << i.message << "\n";
    errors += i.error ? 1 : 0;
  }
  out << errors << " error(s), " << r.issues.size() - errors << " warning(s)\n";
  return r.clean() ? exit_ok : exit_nothing_found;
}

int cmd_dataflow(const Options& o, std::ostream& out) {
  Project p = open_project(o);
  Options fresh = o;
  fresh.fresh = true;  // a dataflow run always recomputes
  const json result = run_and_store("dataflow", p, fresh);
  const DataflowGraph g = dataflow_from_json(result);
  for (const auto& [id, r] : g.groups) {
    out << r.name << " width " << r.members.size() << (r.ordered ? " ordered" : "") << ":";
    for (GateId m : r.members) out << " " << p.netlist.get_gate(m).name;
    out << "\n";
  }
  for (const auto& [e, paths] : g.edges) {
    out << g.groups.at(e.first).name << " -> " << g.groups.at(e.second).name << " (" << paths.size() << " bit paths)\n";
  }
  if (!g.unclustered.empty()) out << g.unclustered.size() << " unclustered flip-flop(s)\n";
  out << g.groups.size() << " group(s), " << g.edges.size() << " edge(s)\n";
  if (!o.dot.empty()) write_file(o.dot, export_dataflow_dot(g));
  return o.fail_if_empty && g.groups.empty() ? exit_nothing_found : exit_ok;
}

int cmd_crypto(const Options& o, std::ostream& out) {
  Project p = open_project(o);
  json result;
  {
    json cfg = effective_config(o, &p);
    if (o.threads != 0) cfg["crypto"]["threads"] = o.threads;
    std::map<std::string, json> prior = o.fresh ? std::map<std::string, json>{} : p.analysis_results;
    result = run_pass("crypto", p.netlist, prior, cfg);
    p.analysis_results["crypto"] = result;
    if (!o.json_out.empty()) write_file(o.json_out, result.dump(2) + "\n");
    if (!o.out.empty()) save_project_file(p, o.out);
  }
  std::size_t matches = 0;
  for (const auto& f : result.at("findings")) {
    const bool match = f.at("verdict") == "match";
    matches += match ? 1 : 0;
    out << (match ? f.at("cipher").get<std::string>() : f.at("verdict").get<std::string>()) << " "
        << f.at("inputs").size() << "x" << f.at("outputs").size() << " in module '"
        << p.netlist.get_module(ModuleId{f.at("module").get<std::uint32_t>()}).name << "'\n  inputs:";
    for (const auto& n : f.at("inputs")) out << " " << net_name(p.netlist, n.get<std::uint32_t>());
    out << "\n  outputs:";
    for (const auto& n : f.at("outputs")) out << " " << net_name(p.netlist, n.get<std::uint32_t>());
    out << "\n";
    if (match) {
      out << "  input permutation: " << f.at("input_permutation").dump() << "\n"
          << "  output permutation: " << f.at("output_permutation").dump() << "\n";
    }
  }
  out << result.at("candidates") << " candidate(s), " << matches << " match(es), " << result.at("not_bijective")
      << " not bijective\n";
  return o.fail_if_empty && matches == 0 ? exit_nothing_found : exit_ok;
}

int cmd_identify(const Options& o, std::ostream& out) {
  Project p = open_project(o);
  json cfg = effective_config(o, &p);
  if (!o.registers.empty()) cfg["identify"]["registers"] = o.registers;
  if (!o.words.empty()) {
    json words = json::array();
    for (const auto& w : o.words) {
      std::vector<std::string> names;
      std::stringstream ss(w);
      std::string item;
      while (std::getline(ss, item, ',')) names.push_back(item);
      words.push_back(names);
    }
    cfg["identify"]["words"] = words;
  }
  std::map<std::string, json> prior = o.fresh ? std::map<std::string, json>{} : p.analysis_results;
  const json result = run_pass("identify", p.netlist, prior, cfg);
  p.analysis_results.erase("bitorder");
  p.analysis_results["identify"] = result;
  if (!o.json_out.empty()) write_file(o.json_out, result.dump(2) + "\n");
  if (!o.out.empty()) save_project_file(p, o.out);
  std::size_t verified = 0;
  for (const auto& m : result.at("modules")) {
    const bool ok = m.at("verification") == "verified";
    verified += ok ? 1 : 0;
    out << m.at("label").get<std::string>() << ": " << m.at("kind").get<std::string>();
    if (m.at("kind") == "CONST_MUL" || m.at("kind") == "COUNTER") out << " " << m.at("constant");
    out << " (" << m.at("verification").get<std::string>();
    if (m.contains("tentative")) out << ", tentative " << m.at("tentative").get<std::string>();
    out << ")\n";
    if (!ok) continue;
    for (std::size_t i = 0; i < m.at("operands").size(); ++i) {
      out << "  operand " << i << ":";
      for (const auto& n : m.at("operands").at(i)) out << " " << net_name(p.netlist, n.get<std::uint32_t>());
      out << "\n";
    }
    out << "  result:";
    for (const auto& n : m.at("result")) out << " " << net_name(p.netlist, n.get<std::uint32_t>());
    out << "\n";
    if (m.contains("enable")) out << "  enable: " << net_name(p.netlist, m.at("enable").get<std::uint32_t>()) << "\n";
  }
  out << result.at("modules").size() << " candidate(s), " << verified << " verified\n";
  return o.fail_if_empty && verified == 0 ? exit_nothing_found : exit_ok;
}

int cmd_bitorder(const Options& o, std::ostream& out) {
  Project p = open_project(o);
  const json result = run_and_store("bitorder", p, o);
  const DataflowGraph df = dataflow_for(p.netlist, p.analysis_results, effective_config(o, &p));
  std::size_t ordered = 0;
  for (const auto& g : result.at("groups")) {
    const auto id = g.at("group").get<std::uint32_t>();
    const std::string name = df.groups.contains(id) ? df.groups.at(id).name : "group " + std::to_string(id);
    out << name << ": " << g.at("confidence").get<std::string>() << " at distance " << g.at("distance");
    if (!g.at("flip_flops").empty()) {
      ++ordered;
      out << ", LSB first:";
      for (const auto& f : g.at("flip_flops")) out << " " << gate_name(p.netlist, f.get<std::uint32_t>());
    }
    out << "\n";
  }
  out << result.at("anchors").size() << " anchor(s), " << ordered << " group(s) ordered\n";
  return o.fail_if_empty && ordered == 0 ? exit_nothing_found : exit_ok;
}

std::optional<std::set<GateId>> region_of(const Netlist& nl, std::uint32_t module) {
  if (module == 0) return std::nullopt;
  if (nl.module(ModuleId{module}) == nullptr) throw Error("no module with id " + std::to_string(module));
  return nl.gates_in_subtree(ModuleId{module});
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const Project p = open_project(o);
  const SimulationInput input = parse_stimulus(read_text_file(o.stimulus), p.netlist, o.stimulus);
  const WaveformSet w = simulate(p.netlist, region_of(p.netlist, o.module), input, o.until);
  std::size_t changes = 0;
  for (const auto& [net, c] : w.changes) changes += c.size();
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw Error("cannot write '" + o.out + "'");
    write_vcd(w, f);
  }
  if (!o.json_out.empty()) {
    json signals = json::array();
    for (const auto& [net, name] : w.names) {
      json ch = json::array();
      if (auto it = w.changes.find(net); it != w.changes.end()) {
        for (const auto& [t, v] : it->second) ch.push_back({t, std::string(1, to_char(v))});
      }
      signals.push_back({{"net", net.value}, {"name", name}, {"initial", std::string(1, to_char(w.initial.at(net)))},
                         {"changes", ch}});
    }
    write_file(o.json_out, json{{"time_unit", w.time_unit}, {"end_time", w.end_time}, {"signals", signals}}.dump(2) + "\n");
  }
  out << w.names.size() << " net(s) recorded, " << changes << " change(s) until t=" << w.end_time << "\n";
  const auto final_state = state_at(w, w.end_time);
  for (const auto& [net, name] : w.names) {
    if (p.netlist.get_net(net).global_output) out << "  " << name << " = " << to_char(final_state.at(net)) << "\n";
  }
  return exit_ok;
}

int cmd_unroll(const Options& o, std::ostream& out) {
  const Project p = open_project(o);
  std::map<NetId, InputPolicy> inputs;
  for (const auto& spec : o.constants) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw CLI::ValidationError("--constant", "expected NET=bits, got '" + spec + "'");
    }
    const std::string name = spec.substr(0, eq);
    std::optional<NetId> net;
    for (const auto& [id, n] : p.netlist.nets()) {
      if (n.name == name) net = id;
    }
    if (!net) throw Error("no net named '" + name + "'");
    std::vector<bool> bits;
    for (char c : spec.substr(eq + 1)) {
      if (c != '0' && c != '1') throw CLI::ValidationError("--constant", "bits must be 0 or 1 in '" + spec + "'");
      bits.push_back(c == '1');
    }
    inputs[*net] = InputPolicy::constants(std::move(bits));
  }
  const auto states = sequential_unroll(p.netlist, region_of(p.netlist, o.module), o.cycles, inputs);
  json doc = json::array();
  for (std::size_t t = 0; t < states.size(); ++t) {
    out << "cycle " << t << ":\n";
    json cyc = json::object();
    for (const auto& [ff, f] : states[t]) {
      const std::string text = simplify(f).to_string();
      out << "  " << p.netlist.get_gate(ff).name << " = " << text << "\n";
      cyc[std::to_string(ff.value)] = text;
    }
    doc.push_back(cyc);
  }
  if (!o.json_out.empty()) write_file(o.json_out, json{{"states", doc}}.dump(2) + "\n");
  return exit_ok;
}

int cmd_export_dot(const Options& o, std::ostream& out, std::ostream& err) {
  const Project p = open_project(o);
  const DataflowGraph g = dataflow_for(p.netlist, o.fresh ? std::map<std::string, json>{} : p.analysis_results,
                                       effective_config(o, &p));
  std::vector<std::string> missing;
  DotOptions opts;
  opts.highlight = resolve_highlights(p.netlist, g, o.highlight, &missing);
  const std::string dot = export_dataflow_dot(g, opts);
  if (o.out.empty() || o.out == "-") {
    out << dot;
  } else {
    write_file(o.out, dot);
    out << g.groups.size() << " group(s), " << g.edges.size() << " edge(s), " << opts.highlight.size()
        << " highlighted, written to " << o.out << "\n";
  }
  for (const auto& m : missing) err << "no dataflow edge for highlight '" << m << "'\n";
  return missing.empty() ? exit_ok : exit_nothing_found;
}

int cmd_serve(const Options& o, std::ostream& out) {
  Project p = open_project(o);
  json cfg = effective_config(o, &p);
  const auto [host, port] = parse_bind_address(o.bind);
  Session session(std::move(p), cfg);
  Server server(session);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int bound = server.bind(host, port);
  out << "listening on http://" << host << ":" << bound << "/api/v1\n" << std::flush;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  session.shutdown();
  // Unblock the waiter when listen ended for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return exit_ok;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Gate-level netlist analysis", args.empty() ? "gatescope" : args.front());
  app.require_subcommand(1);
  app.set_version_flag("--version", "gatescope 1.0");
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);

  auto project_opts = [&](CLI::App* c) {
    c->add_option("PROJECT", o.project, "Project file");
    c->add_option("--project", o.project_flag, "Project file");
  };
  auto analysis_opts = [&](CLI::App* c) {
    project_opts(c);
    c->add_option("--out", o.out, "Save the project with the new result here");
    c->add_option("--json", o.json_out, "Write the pass result as JSON");
    c->add_flag("--fresh", o.fresh, "Ignore stored results of earlier passes");
    c->add_flag("--fail-if-empty", o.fail_if_empty, "Exit 1 when nothing is found");
  };

  auto* parse = app.add_subcommand("parse", "Parse a library and a netlist into a project");
  parse->add_option("--lib", o.lib, "Liberty cell library")->required();
  parse->add_option("--netlist", o.netlist, "Structural Verilog netlist")->required();
  parse->add_option("--out", o.out, "Project file to write");
  parse->add_flag("--reference-library", o.reference_library, "Store the library by path and hash");

  auto* info = app.add_subcommand("info", "Summarize a project");
  project_opts(info);

  auto* lint = app.add_subcommand("lint", "Report structural problems (exit 1 on errors)");
  project_opts(lint);
  lint->add_option("--lib", o.lib, "Liberty cell library");
  lint->add_option("--netlist", o.netlist, "Structural Verilog netlist");

  auto* dataflow = app.add_subcommand("dataflow", "Recover word-level registers");
  analysis_opts(dataflow);
  dataflow->add_option("--dot", o.dot, "Write the dataflow graph as DOT");

  auto* crypto = app.add_subcommand("scan-crypto", "Find and identify S-boxes");
  analysis_opts(crypto);
  crypto->add_option("--threads", o.threads, "Worker threads (0 = hardware)");

  auto* identify = app.add_subcommand("identify", "Classify arithmetic around recovered registers");
  analysis_opts(identify);
  identify->add_option("--register", o.registers, "Only candidates feeding this register (group or flip-flop name)");
  identify->add_option("--word", o.words, "Comma-separated flip-flop names forming one register candidate");

  auto* bitorder = app.add_subcommand("bitorder", "Propagate bit orders from anchors");
  analysis_opts(bitorder);

  auto* sim = app.add_subcommand("simulate", "Event-driven simulation");
  project_opts(sim);
  sim->add_option("--stimulus", o.stimulus, "Stimulus file")->required();
  sim->add_option("--until", o.until, "Simulation end time")->required();
  sim->add_option("--out", o.out, "VCD file to write");
  sim->add_option("--json", o.json_out, "Write the waveforms as JSON");
  sim->add_option("--module", o.module, "Simulate only this module's gates");

  auto* unroll = app.add_subcommand("unroll", "Symbolic sequential unrolling");
  project_opts(unroll);
  unroll->add_option("--cycles", o.cycles, "Clock cycles")->required();
  unroll->add_option("--constant", o.constants, "Fixed input sequence NET=bits (last bit repeats)");
  unroll->add_option("--module", o.module, "Unroll only this module's gates");
  unroll->add_option("--json", o.json_out, "Write the states as JSON");

  auto* dot = app.add_subcommand("export-dot", "Export the dataflow graph as DOT");
  project_opts(dot);
  dot->add_option("--out", o.out, "DOT file to write (stdout when absent)");
  dot->add_option("--highlight", o.highlight, "Draw the edge SRC->DST in red (exit 1 when absent)");
  dot->add_flag("--fresh", o.fresh, "Recompute instead of using the stored dataflow result");

  auto* serve = app.add_subcommand("serve", "Serve the project over HTTP");
  project_opts(serve);
  serve->add_option("--bind", o.bind, "host:port");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (parse->parsed()) return cmd_parse(o, out);
    if (info->parsed()) return cmd_info(o, out);
    if (lint->parsed()) return cmd_lint(o, out);
    if (dataflow->parsed()) return cmd_dataflow(o, out);
    if (crypto->parsed()) return cmd_crypto(o, out);
    if (identify->parsed()) return cmd_identify(o, out);
    if (bitorder->parsed()) return cmd_bitorder(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (unroll->parsed()) return cmd_unroll(o, out);
    if (dot->parsed()) return cmd_export_dot(o, out, err);
    if (serve->parsed()) return cmd_serve(o, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
  return exit_usage;
}

}  // namespace gatescope
