#include "gatescope/service.hpp"

#include <httplib.h>

#include <charconv>
#include <sstream>

#include "gatescope/dot.hpp"
#include "gatescope/passes.hpp"
#include "gatescope/serialize.hpp"

namespace gatescope {

using nlohmann::json;

namespace {

struct HttpError : Error {
  HttpError(int s, std::string c, const std::string& m) : Error(m), status(s), code(std::move(c)) {}
  int status;
  std::string code;
};

[[noreturn]] void not_found(const std::string& what) { throw HttpError(404, "not_found", what); }
[[noreturn]] void bad_request(const std::string& what) { throw HttpError(400, "bad_request", what); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::uint64_t parse_number(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) bad_request("invalid " + what + " '" + text + "'");
  return v;
}

std::uint32_t parse_id(const std::string& text, const std::string& what) {
  const auto v = parse_number(text, what);
  if (v == 0 || v > UINT32_MAX) bad_request("invalid " + what + " '" + text + "'");
  return static_cast<std::uint32_t>(v);
}

std::map<std::string, std::string> parse_query(const std::string& q) {
  std::map<std::string, std::string> out;
  std::stringstream ss(q);
  std::string item;
  while (std::getline(ss, item, '&')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      out[item] = "";
    } else {
      out[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  return out;
}

template <typename IdT>
json ids(const std::set<IdT>& s) {
  json a = json::array();
  for (IdT i : s) a.push_back(i.value);
  return a;
}

template <typename IdT>
std::set<IdT> id_field(const json& body, const std::string& key) {
  std::set<IdT> out;
  if (!body.contains(key)) return out;
  const json& arr = body.at(key);
  if (!arr.is_array()) bad_request("'" + key + "' must be an array of ids");
  for (const auto& v : arr) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) bad_request("'" + key + "' must hold positive ids");
    out.insert(IdT{v.get<std::uint32_t>()});
  }
  return out;
}

std::string color_text(Color c) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s = "#";
  for (std::uint8_t v : {c.r, c.g, c.b}) {
    s += kHex[v >> 4];
    s += kHex[v & 15];
  }
  return s;
}

Color parse_color(const std::string& s) {
  if (s.size() != 7 || s[0] != '#') bad_request("color must be #rrggbb");
  auto byte = [&](std::size_t at) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data() + at, s.data() + at + 2, v, 16);
    if (ec != std::errc() || p != s.data() + at + 2) bad_request("color must be #rrggbb");
    return static_cast<std::uint8_t>(v);
  };
  return Color{byte(1), byte(3), byte(5)};
}

json endpoint_json(const Endpoint& e) {
  switch (e.kind) {
    case Endpoint::Kind::gate_pin: return {{"kind", "pin"}, {"gate", e.gate.value}, {"pin", e.pin}, {"net", e.net.value}};
    case Endpoint::Kind::global_input: return {{"kind", "global_input"}, {"net", e.net.value}};
    case Endpoint::Kind::global_output: return {{"kind", "global_output"}, {"net", e.net.value}};
  }
  return nullptr;
}

json gate_json(const Netlist& nl, const Gate& g) {
  json conns = json::object();
  for (const auto& [pin, net] : g.connections) conns[pin] = net.value;
  auto grp = nl.grouping_of(g.id);
  return {{"id", g.id.value},          {"name", g.name},       {"type", g.type->name()},
          {"module", g.module.value},  {"connections", conns}, {"grouping", grp ? json(grp->value) : json(nullptr)}};
}

json net_json(const Netlist& nl, const Net& n) {
  json drivers = json::array(), sinks = json::array();
  for (const auto& e : n.drivers) drivers.push_back({{"gate", e.gate.value}, {"pin", e.pin}});
  for (const auto& e : n.sinks) sinks.push_back({{"gate", e.gate.value}, {"pin", e.pin}});
  auto grp = nl.grouping_of(n.id);
  return {{"id", n.id.value},
          {"name", n.name},
          {"drivers", drivers},
          {"sinks", sinks},
          {"global_input", n.global_input},
          {"global_output", n.global_output},
          {"grouping", grp ? json(grp->value) : json(nullptr)}};
}

json module_json(const Netlist& nl, const Module& m) {
  auto grp = nl.grouping_of(m.id);
  return {{"id", m.id.value},
          {"name", m.name},
          {"parent", m.parent ? json(m.parent->value) : json(nullptr)},
          {"children", ids(m.children)},
          {"gates", ids(m.gates)},
          {"grouping", grp ? json(grp->value) : json(nullptr)}};
}

json grouping_json(const Grouping& g) {
  return {{"id", g.id.value},     {"name", g.name},       {"color", color_text(g.color)},
          {"gates", ids(g.gates)}, {"nets", ids(g.nets)}, {"modules", ids(g.modules)}};
}

json gate_details(const Netlist& nl, const Gate& g) {
  json d = gate_json(nl, g);
  json pins = json::array();
  for (const auto& p : g.type->pins()) {
    auto net = g.net_at(p.name);
    pins.push_back({{"pin", p.name},
                    {"direction", p.direction == PinDirection::input ? "input" : "output"},
                    {"net", net ? json(net->value) : json(nullptr)}});
  }
  d["pins"] = pins;
  json fns = json::object();
  for (const auto& [pin, f] : g.type->output_functions()) fns[pin] = f.to_string();
  d["functions"] = fns;
  json props = json::array();
  for (GateProperty p : g.type->properties()) props.push_back(to_string(p));
  d["properties"] = props;
  if (const auto& ff = g.type->ff()) {
    json outs = json::object();
    for (const auto& [pin, b] : ff->output_binding) outs[pin] = b == StateBinding::state ? "state" : "negated_state";
    d["flip_flop"] = {{"next_state", ff->next_state.to_string()},
                      {"clock", ff->clock.to_string()},
                      {"async_reset", ff->async_reset ? json(ff->async_reset->to_string()) : json(nullptr)},
                      {"async_set", ff->async_set ? json(ff->async_set->to_string()) : json(nullptr)},
                      {"outputs", outs}};
  }
  return d;
}

json module_details(const Netlist& nl, const Module& m) {
  json d = module_json(nl, m);
  json ports = json::array();
  for (const auto& p : nl.module_ports(m.id)) {
    ports.push_back({{"net", p.net.value}, {"direction", p.direction == PortDirection::input ? "input" : "output"}});
  }
  d["ports"] = ports;
  return d;
}

json selection_details(const Netlist& nl, const json& sel) {
  json gates = json::array(), nets = json::array(), modules = json::array();
  for (GateId g : id_field<GateId>(sel, "gates")) {
    const Gate* p = nl.gate(g);
    if (p == nullptr) not_found("gate " + std::to_string(g.value));
    gates.push_back(gate_details(nl, *p));
  }
  for (NetId n : id_field<NetId>(sel, "nets")) {
    const Net* p = nl.net(n);
    if (p == nullptr) not_found("net " + std::to_string(n.value));
    nets.push_back(net_json(nl, *p));
  }
  for (ModuleId m : id_field<ModuleId>(sel, "modules")) {
    const Module* p = nl.module(m);
    if (p == nullptr) not_found("module " + std::to_string(m.value));
    modules.push_back(module_details(nl, *p));
  }
  return {{"gates", gates}, {"nets", nets}, {"modules", modules}};
}

ObjectRef object_ref(const Netlist& nl, const json& o) {
  if (!o.is_object()) bad_request("object reference must be {\"gate\": id} or {\"net\": id}");
  if (o.contains("gate") && o.at("gate").is_number_unsigned()) {
    GateId g{o.at("gate").get<std::uint32_t>()};
    if (nl.gate(g) == nullptr) not_found("gate " + std::to_string(g.value));
    return g;
  }
  if (o.contains("net") && o.at("net").is_number_unsigned()) {
    NetId n{o.at("net").get<std::uint32_t>()};
    if (nl.net(n) == nullptr) not_found("net " + std::to_string(n.value));
    return n;
  }
  bad_request("object reference must be {\"gate\": id} or {\"net\": id}");
}

Direction direction_field(const json& body) {
  if (!body.contains("direction") || !body.at("direction").is_string()) bad_request("missing 'direction'");
  auto d = parse_direction(body.at("direction").get<std::string>());
  if (!d) bad_request("direction must be predecessors or successors");
  return *d;
}

std::string logic_text(Logic v) { return std::string(1, to_char(v)); }

}  // namespace

std::string to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::running: return "running";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
    case TaskStatus::cancelled: return "cancelled";
    case TaskStatus::invalidated: return "invalidated";
  }
  return "failed";
}

struct Session::Task {
  TaskInfo info;
  std::atomic<bool> cancel{false};
};

struct Session::Simulation {
  std::uint64_t revision = 0;
  WaveformSet waveforms;
};

Session::Session(Project project, json config) : project_(std::move(project)), config_(std::move(config)) {
  if (!config_.is_object()) throw Error("session config must be a JSON object");
}

Session::~Session() {
  {
    std::lock_guard lock(task_mutex_);
    for (auto& [id, t] : tasks_) t->cancel = true;
  }
  shutdown();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
}

std::uint64_t Session::revision() const {
  std::shared_lock lock(state_mutex_);
  return revision_;
}

Project Session::snapshot() const {
  std::shared_lock lock(state_mutex_);
  return project_;
}

void Session::publish(std::string type, json data) {
  {
    std::lock_guard lock(event_mutex_);
    events_.push_back({next_event_++, std::move(type), std::move(data)});
  }
  event_cv_.notify_all();
}

std::vector<SessionEvent> Session::events_after(std::uint64_t after, std::chrono::milliseconds wait) {
  std::unique_lock lock(event_mutex_);
  auto ready = [&] { return closing_ || (!events_.empty() && events_.back().sequence > after); };
  event_cv_.wait_for(lock, wait, ready);
  std::vector<SessionEvent> out;
  for (const auto& e : events_) {
    if (e.sequence > after) out.push_back(e);
  }
  return out;
}

void Session::shutdown() {
  {
    std::lock_guard lock(event_mutex_);
    closing_ = true;
  }
  event_cv_.notify_all();
}

void Session::set_commit_hook(std::function<void(const TaskInfo&)> hook) {
  std::lock_guard lock(task_mutex_);
  commit_hook_ = std::move(hook);
}

void Session::wait_idle() {
  std::unique_lock lock(task_mutex_);
  task_cv_.wait(lock, [&] {
    for (const auto& [id, t] : tasks_) {
      if (t->info.status == TaskStatus::running) return false;
    }
    return true;
  });
}

// Caller holds the unique state lock.
std::uint64_t Session::commit_mutation(const std::string& op, json detail) {
  ++revision_;
  detail["op"] = op;
  detail["revision"] = revision_;
  publish("mutation", std::move(detail));
  return revision_;
}

ServiceResponse Session::reply_locked(json data, std::uint64_t revision, int status) const {
  ServiceResponse r;
  r.status = status;
  r.revision = revision;
  r.body = {{"api", "v1"}, {"revision", revision}, {"data", std::move(data)}};
  return r;
}

ServiceResponse Session::reply(json data, int status) const { return reply_locked(std::move(data), revision(), status); }

json Session::task_json(const Task& t) const {
  return {{"id", t.info.id},
          {"pass", t.info.pass},
          {"status", to_string(t.info.status)},
          {"progress", t.info.progress},
          {"base_revision", t.info.base_revision},
          {"committed_revision", t.info.committed_revision ? json(*t.info.committed_revision) : json(nullptr)},
          {"error", t.info.error}};
}

ServiceResponse Session::handle(const std::string& method, const std::string& path, const json& body,
                                const std::string& query, const std::string& client) {
  ServiceRequest r;
  r.method = method;
  r.path = path;
  r.query = parse_query(query);
  r.body = body.is_null() ? std::string() : body.dump();
  r.client = client;
  return handle(r);
}

ServiceResponse Session::handle(const ServiceRequest& request) {
  try {
    return route(request);
  } catch (const HttpError& e) {
    ServiceResponse r;
    r.status = e.status;
    r.revision = revision();
    r.body = {{"api", "v1"}, {"revision", r.revision}, {"error", {{"code", e.code}, {"message", e.what()}}}};
    return r;
  } catch (const json::exception& e) {
    ServiceResponse r;
    r.status = 400;
    r.revision = revision();
    r.body = {{"api", "v1"}, {"revision", r.revision}, {"error", {{"code", "bad_request"}, {"message", e.what()}}}};
    return r;
  } catch (const NetlistError& e) {
    ServiceResponse r;
    r.status = 409;
    r.revision = revision();
    r.body = {{"api", "v1"}, {"revision", r.revision}, {"error", {{"code", "rejected"}, {"message", e.what()}}}};
    return r;
  } catch (const std::exception& e) {
    ServiceResponse r;
    r.status = 422;
    r.revision = revision();
    r.body = {{"api", "v1"}, {"revision", r.revision}, {"error", {{"code", "failed"}, {"message", e.what()}}}};
    return r;
  }
}

ServiceResponse Session::route(const ServiceRequest& req) {
  const auto parts = split_path(req.path);
  const std::string& m = req.method;
  json body = json::object();
  if (!req.body.empty()) {
    body = json::parse(req.body);
    if (!body.is_object()) bad_request("request body must be a JSON object");
  }
  const std::size_t n = parts.size();
  auto is = [&](std::initializer_list<const char*> p) {
    if (p.size() != n) return false;
    std::size_t i = 0;
    for (const char* s : p) {
      if (std::string(s) != "*" && parts[i] != s) return false;
      ++i;
    }
    return true;
  };
  auto require = [&](const char* method) {
    if (m != method) throw HttpError(405, "method_not_allowed", m + " not allowed on " + req.path);
  };

  // ---- reads -------------------------------------------------------------
  if (is({"summary"})) {
    require("GET");
    std::shared_lock lock(state_mutex_);
    const Netlist& nl = project_.netlist;
    std::size_t inputs = 0, outputs = 0;
    for (const auto& [id, net] : nl.nets()) {
      inputs += net.global_input ? 1 : 0;
      outputs += net.global_output ? 1 : 0;
    }
    json results = json::array();
    for (const auto& [name, blob] : project_.analysis_results) results.push_back(name);
    return reply_locked({{"netlist", nl.id()},
                         {"library", nl.library()->name()},
                         {"gates", nl.gates().size()},
                         {"nets", nl.nets().size()},
                         {"modules", nl.modules().size()},
                         {"groupings", nl.groupings().size()},
                         {"flip_flops", nl.sequential_gates().size()},
                         {"global_inputs", inputs},
                         {"global_outputs", outputs},
                         {"top_module", nl.top_module().value},
                         {"results", results}},
                        revision_);
  }
  if (n >= 1 && n <= 2 && (parts[0] == "gates" || parts[0] == "nets" || parts[0] == "modules" || parts[0] == "groupings")) {
    if (parts[0] == "modules" && n == 1 && m == "POST") {
      std::unique_lock lock(state_mutex_);
      if (!body.contains("name") || !body.at("name").is_string()) bad_request("missing 'name'");
      ModuleId parent = project_.netlist.top_module();
      if (body.contains("parent")) {
        parent = ModuleId{body.at("parent").get<std::uint32_t>()};
        if (project_.netlist.module(parent) == nullptr) not_found("module " + std::to_string(parent.value));
      }
      const auto gates = id_field<GateId>(body, "gates");
      for (GateId g : gates) {
        if (project_.netlist.gate(g) == nullptr) not_found("gate " + std::to_string(g.value));
      }
      ModuleId id = project_.netlist.create_module(body.at("name").get<std::string>(), parent, gates);
      netlist_revision_ = revision_ + 1;
      const auto rev = commit_mutation("create_module", {{"module", id.value}});
      return reply_locked(module_json(project_.netlist, project_.netlist.get_module(id)), rev, 201);
    }
    if (parts[0] == "groupings" && n == 1 && m == "POST") {
      std::unique_lock lock(state_mutex_);
      if (!body.contains("name") || !body.at("name").is_string()) bad_request("missing 'name'");
      const Color c = parse_color(body.value("color", std::string("#ff0000")));
      GroupingId id = project_.netlist.create_grouping(body.at("name").get<std::string>(), c);
      netlist_revision_ = revision_ + 1;
      const auto rev = commit_mutation("create_grouping", {{"grouping", id.value}});
      return reply_locked(grouping_json(project_.netlist.get_grouping(id)), rev, 201);
    }
    require("GET");
    std::shared_lock lock(state_mutex_);
    const Netlist& nl = project_.netlist;
    if (n == 1) {
      json list = json::array();
      if (parts[0] == "gates") {
        for (const auto& [id, g] : nl.gates()) list.push_back(gate_json(nl, g));
      } else if (parts[0] == "nets") {
        for (const auto& [id, x] : nl.nets()) list.push_back(net_json(nl, x));
      } else if (parts[0] == "modules") {
        for (const auto& [id, x] : nl.modules()) list.push_back(module_json(nl, x));
      } else {
        for (const auto& [id, x] : nl.groupings()) list.push_back(grouping_json(x));
      }
      return reply_locked(list, revision_);
    }
    const std::uint32_t id = parse_id(parts[1], "id");
    if (parts[0] == "gates") {
      if (const Gate* g = nl.gate(GateId{id})) return reply_locked(gate_details(nl, *g), revision_);
    } else if (parts[0] == "nets") {
      if (const Net* x = nl.net(NetId{id})) return reply_locked(net_json(nl, *x), revision_);
    } else if (parts[0] == "modules") {
      if (const Module* x = nl.module(ModuleId{id})) return reply_locked(module_details(nl, *x), revision_);
    } else if (const Grouping* x = nl.grouping(GroupingId{id})) {
      return reply_locked(grouping_json(*x), revision_);
    }
    not_found(parts[0].substr(0, parts[0].size() - 1) + " " + parts[1]);
  }
  if (is({"details"})) {
    require("POST");
    std::shared_lock lock(state_mutex_);
    return reply_locked(selection_details(project_.netlist, body), revision_);
  }
  if (is({"selection"})) {
    const std::string client = req.client.empty() ? "default" : req.client;
    if (m == "PUT") {
      std::unique_lock lock(state_mutex_);
      json sel = {{"gates", ids(id_field<GateId>(body, "gates"))},
                  {"nets", ids(id_field<NetId>(body, "nets"))},
                  {"modules", ids(id_field<ModuleId>(body, "modules"))}};
      selection_details(project_.netlist, sel);  // rejects unknown ids
      selections_[client] = sel;
      return reply_locked({{"client", client}, {"selection", sel}}, revision_);
    }
    require("GET");
    std::shared_lock lock(state_mutex_);
    auto it = selections_.find(client);
    json sel = it == selections_.end() ? json{{"gates", json::array()}, {"nets", json::array()}, {"modules", json::array()}}
                                       : it->second;
    return reply_locked({{"client", client}, {"selection", sel}, {"details", selection_details(project_.netlist, sel)}},
                        revision_);
  }
  if (is({"neighbors"})) {
    require("POST");
    std::shared_lock lock(state_mutex_);
    const ObjectRef o = object_ref(project_.netlist, body.value("object", json()));
    json eps = json::array();
    for (const auto& e : project_.netlist.neighbors(o, direction_field(body))) eps.push_back(endpoint_json(e));
    return reply_locked({{"endpoints", eps}}, revision_);
  }
  if (is({"cone"})) {
    require("POST");
    std::shared_lock lock(state_mutex_);
    std::vector<ObjectRef> start;
    if (!body.contains("objects") || !body.at("objects").is_array()) bad_request("missing 'objects'");
    for (const auto& o : body.at("objects")) start.push_back(object_ref(project_.netlist, o));
    std::optional<std::size_t> depth;
    if (body.contains("depth") && !body.at("depth").is_null()) depth = body.at("depth").get<std::size_t>();
    const auto cone = project_.netlist.extract_cone(start, direction_field(body), depth,
                                                    body.value("stop_at_sequential", false));
    return reply_locked({{"gates", ids(cone.gates)}, {"boundary_nets", ids(cone.boundary_nets)}}, revision_);
  }

  // ---- hierarchy and grouping mutations ------------------------------------
  if (is({"modules", "*", "move"})) {
    require("POST");
    std::unique_lock lock(state_mutex_);
    const ModuleId id{parse_id(parts[1], "module id")};
    if (project_.netlist.module(id) == nullptr) not_found("module " + parts[1]);
    if (!body.contains("parent")) bad_request("missing 'parent'");
    const ModuleId parent{body.at("parent").get<std::uint32_t>()};
    if (project_.netlist.module(parent) == nullptr) not_found("module " + std::to_string(parent.value));
    project_.netlist.move_module(id, parent);
    netlist_revision_ = revision_ + 1;
    const auto rev = commit_mutation("move_module", {{"module", id.value}, {"parent", parent.value}});
    return reply_locked(module_json(project_.netlist, project_.netlist.get_module(id)), rev);
  }
  if (is({"modules", "*", "gates"})) {
    require("POST");
    std::unique_lock lock(state_mutex_);
    const ModuleId id{parse_id(parts[1], "module id")};
    if (project_.netlist.module(id) == nullptr) not_found("module " + parts[1]);
    const auto gates = id_field<GateId>(body, "gates");
    for (GateId g : gates) {
      if (project_.netlist.gate(g) == nullptr) not_found("gate " + std::to_string(g.value));
    }
    project_.netlist.move_gates(id, gates);
    netlist_revision_ = revision_ + 1;
    const auto rev = commit_mutation("move_gates", {{"module", id.value}, {"gates", ids(gates)}});
    return reply_locked(module_json(project_.netlist, project_.netlist.get_module(id)), rev);
  }
  if (is({"groupings", "*", "assign"})) {
    require("POST");
    std::unique_lock lock(state_mutex_);
    const GroupingId id{parse_id(parts[1], "grouping id")};
    if (project_.netlist.grouping(id) == nullptr) not_found("grouping " + parts[1]);
    const auto gates = id_field<GateId>(body, "gates");
    const auto nets = id_field<NetId>(body, "nets");
    const auto modules = id_field<ModuleId>(body, "modules");
    for (GateId g : gates) {
      if (project_.netlist.gate(g) == nullptr) not_found("gate " + std::to_string(g.value));
    }
    for (NetId x : nets) {
      if (project_.netlist.net(x) == nullptr) not_found("net " + std::to_string(x.value));
    }
    for (ModuleId x : modules) {
      if (project_.netlist.module(x) == nullptr) not_found("module " + std::to_string(x.value));
    }
    project_.netlist.assign_to_grouping(id, gates, nets, modules);
    netlist_revision_ = revision_ + 1;
    const auto rev = commit_mutation("assign_grouping", {{"grouping", id.value}});
    return reply_locked(grouping_json(project_.netlist.get_grouping(id)), rev);
  }

  // ---- analysis passes -----------------------------------------------------
  if (is({"passes"})) {
    require("GET");
    return reply(pass_names());
  }
  if (is({"passes", "*"})) {
    require("POST");
    return launch(parts[1], body);
  }
  if (is({"tasks"})) {
    require("GET");
    json list = json::array();
    std::lock_guard lock(task_mutex_);
    for (const auto& [id, t] : tasks_) list.push_back(task_json(*t));
    return reply(list);
  }
  if (is({"tasks", "*"}) || is({"tasks", "*", "cancel"})) {
    const std::uint64_t id = parse_number(parts[1], "task id");
    std::lock_guard lock(task_mutex_);
    auto it = tasks_.find(id);
    if (it == tasks_.end()) not_found("task " + parts[1]);
    if (n == 3) {
      require("POST");
      it->second->cancel = true;
    } else {
      require("GET");
    }
    return reply(task_json(*it->second));
  }
  if (is({"results"}) || is({"results", "*"})) {
    require("GET");
    std::shared_lock lock(state_mutex_);
    if (n == 1) {
      json names = json::array();
      for (const auto& [name, blob] : project_.analysis_results) names.push_back(name);
      return reply_locked(names, revision_);
    }
    auto it = project_.analysis_results.find(parts[1]);
    if (it == project_.analysis_results.end()) not_found("no stored result for '" + parts[1] + "'");
    return reply_locked(it->second, revision_);
  }
  if (is({"dataflow", "dot"})) {
    require("GET");
    std::shared_lock lock(state_mutex_);
    auto it = project_.analysis_results.find("dataflow");
    if (it == project_.analysis_results.end()) not_found("no stored dataflow result");
    const DataflowGraph g = dataflow_from_json(it->second);
    DotOptions opts;
    std::vector<std::string> requests, missing;
    if (auto h = req.query.find("highlight"); h != req.query.end()) {
      std::stringstream ss(h->second);
      std::string item;
      while (std::getline(ss, item, ',')) requests.push_back(item);
    }
    try {
      opts.highlight = resolve_highlights(project_.netlist, g, requests, &missing);
    } catch (const HttpError&) {
      throw;
    } catch (const Error& e) {
      bad_request(e.what());
    }
    if (!missing.empty()) not_found("no dataflow edge for highlight '" + missing.front() + "'");
    ServiceResponse r;
    r.revision = revision_;
    r.content_type = "text/vnd.graphviz";
    r.text = export_dataflow_dot(g, opts);
    return r;
  }

  // ---- simulation ------------------------------------------------------------
  if (is({"simulate"})) {
    require("POST");
    std::shared_lock lock(state_mutex_);
    const Netlist& nl = project_.netlist;
    if (!body.contains("until")) bad_request("missing 'until'");
    const Time until = body.at("until").get<Time>();
    SimulationInput input;
    try {
      input = parse_stimulus(body.value("stimulus", std::string()), nl, "<request>");
    } catch (const ParseError& e) {
      bad_request(e.what());
    }
    std::optional<std::set<GateId>> region;
    if (body.contains("region_module")) {
      const ModuleId mod{body.at("region_module").get<std::uint32_t>()};
      if (nl.module(mod) == nullptr) not_found("module " + std::to_string(mod.value));
      region = nl.gates_in_subtree(mod);
    } else if (body.contains("region")) {
      region = id_field<GateId>(body, "region");
    }
    auto sim = std::make_shared<Simulation>();
    sim->revision = revision_;
    sim->waveforms = simulate(nl, region, input, until);
    std::uint64_t id = 0;
    {
      std::lock_guard sl(sim_mutex_);
      id = next_simulation_++;
      simulations_.emplace(id, sim);
    }
    return reply_locked({{"simulation", id}, {"end_time", sim->waveforms.end_time},
                         {"nets", sim->waveforms.names.size()}}, revision_, 201);
  }
  if (n == 3 && parts[0] == "simulations") {
    require("GET");
    const std::uint64_t id = parse_number(parts[1], "simulation id");
    std::shared_ptr<const Simulation> sim;
    {
      std::lock_guard sl(sim_mutex_);
      auto it = simulations_.find(id);
      if (it == simulations_.end()) not_found("simulation " + parts[1]);
      sim = it->second;
    }
    const WaveformSet& w = sim->waveforms;
    std::optional<std::set<NetId>> wanted;
    if (auto q = req.query.find("nets"); q != req.query.end() && !q->second.empty()) {
      wanted.emplace();
      std::stringstream ss(q->second);
      std::string item;
      while (std::getline(ss, item, ',')) {
        NetId net{parse_id(item, "net id")};
        if (!w.names.contains(net)) not_found("net " + item + " was not recorded");
        wanted->insert(net);
      }
    }
    if (parts[2] == "waveform") {
      json signals = json::array();
      for (const auto& [net, name] : w.names) {
        if (wanted && !wanted->contains(net)) continue;
        json ch = json::array();
        if (auto c = w.changes.find(net); c != w.changes.end()) {
          for (const auto& [t, v] : c->second) ch.push_back({t, logic_text(v)});
        }
        signals.push_back({{"net", net.value}, {"name", name}, {"initial", logic_text(w.initial.at(net))},
                           {"changes", ch}});
      }
      return reply_locked({{"simulation", id}, {"time_unit", w.time_unit}, {"end_time", w.end_time},
                           {"revision_simulated", sim->revision}, {"signals", signals}}, revision());
    }
    if (parts[2] == "state") {
      auto q = req.query.find("t");
      if (q == req.query.end()) bad_request("missing query parameter 't'");
      const Time t = parse_number(q->second, "time");
      if (t > w.end_time) bad_request("time " + q->second + " is beyond the end of the simulation");
      json values = json::object();
      for (const auto& [net, v] : state_at(w, t)) {
        if (wanted && !wanted->contains(net)) continue;
        values[std::to_string(net.value)] = logic_text(v);
      }
      return reply_locked({{"simulation", id}, {"time", t}, {"values", values}}, revision());
    }
    if (parts[2] == "vcd") {
      std::ostringstream os;
      VcdOptions opts;
      opts.nets = wanted;
      write_vcd(w, os, opts);
      ServiceResponse r;
      r.revision = revision();
      r.content_type = "text/x-vcd";
      r.text = os.str();
      return r;
    }
  }

  // ---- events ----------------------------------------------------------------
  if (is({"events", "log"})) {
    require("GET");
    std::uint64_t after = 0;
    if (auto q = req.query.find("after"); q != req.query.end()) after = parse_number(q->second, "sequence");
    std::uint64_t wait = 0;
    if (auto q = req.query.find("wait_ms"); q != req.query.end()) wait = std::min<std::uint64_t>(parse_number(q->second, "wait"), 30000);
    json list = json::array();
    for (const auto& e : events_after(after, std::chrono::milliseconds(wait))) {
      list.push_back({{"sequence", e.sequence}, {"type", e.type}, {"data", e.data}});
    }
    return reply({{"events", list}});
  }

  not_found("no endpoint " + m + " " + req.path);
}

ServiceResponse Session::launch(const std::string& pass, const json& body) {
  const auto& names = pass_names();
  if (std::find(names.begin(), names.end(), pass) == names.end()) not_found("unknown pass '" + pass + "'");
  json config = config_;
  if (body.contains("config")) {
    if (!body.at("config").is_object()) bad_request("'config' must be an object");
    config.merge_patch(body.at("config"));
  }
  auto task = std::make_shared<Task>();
  task->info.pass = pass;
  Netlist netlist = [&] {
    std::shared_lock lock(state_mutex_);
    task->info.base_revision = revision_;
    return project_.netlist;
  }();
  std::map<std::string, json> prior = [&] {
    std::shared_lock lock(state_mutex_);
    return project_.analysis_results;
  }();
  if (body.value("fresh", false)) prior.clear();
  json info;
  {
    std::lock_guard lock(task_mutex_);
    task->info.id = next_task_++;
    tasks_.emplace(task->info.id, task);
    workers_.emplace_back(&Session::run_task, this, task, std::move(netlist), std::move(prior), std::move(config));
    info = task_json(*task);
  }
  publish("task", info);
  return reply(info, 202);
}

void Session::run_task(std::shared_ptr<Task> task, Netlist netlist, std::map<std::string, json> prior, json config) {
  PassContext ctx;
  ctx.cancel = &task->cancel;
  ctx.progress = [&](double p) {
    std::lock_guard lock(task_mutex_);
    task->info.progress = p;
  };
  TaskStatus status = TaskStatus::done;
  std::string error;
  json result;
  try {
    result = run_pass(task->info.pass, netlist, prior, config, ctx);
  } catch (const PassCancelled&) {
    status = TaskStatus::cancelled;
  } catch (const std::exception& e) {
    status = TaskStatus::failed;
    error = e.what();
  }
  std::function<void(const TaskInfo&)> hook;
  TaskInfo seen;
  {
    std::lock_guard lock(task_mutex_);
    hook = commit_hook_;
    seen = task->info;
  }
  if (hook) hook(seen);
  std::optional<std::uint64_t> committed;
  if (status == TaskStatus::done) {
    std::unique_lock lock(state_mutex_);
    if (task->cancel) {
      status = TaskStatus::cancelled;
    } else if (netlist_revision_ > task->info.base_revision) {
      status = TaskStatus::invalidated;
    } else {
      for (const auto& dep : dependent_passes(task->info.pass)) project_.analysis_results.erase(dep);
      project_.analysis_results[task->info.pass] = std::move(result);
      committed = commit_mutation("commit_result", {{"pass", task->info.pass}, {"task", task->info.id}});
    }
  }
  json info;
  {
    std::lock_guard lock(task_mutex_);
    task->info.status = status;
    task->info.error = error;
    task->info.committed_revision = committed;
    if (status == TaskStatus::done) task->info.progress = 1.0;
    info = task_json(*task);
  }
  publish("task", info);
  task_cv_.notify_all();
}

// ---- HTTP transport --------------------------------------------------------------

struct Server::Impl {
  explicit Impl(Session& s) : session(s) {}
  Session& session;
  httplib::Server http;
  std::atomic<bool> stopping{false};
};

namespace {

void write_response(const ServiceResponse& r, httplib::Response& res) {
  res.status = r.status;
  res.set_header("X-Revision", std::to_string(r.revision));
  if (r.content_type == "application/json") {
    res.set_content(r.body.dump(), "application/json");
  } else {
    res.set_content(r.text, r.content_type);
  }
}

}  // namespace

Server::Server(Session& session) : impl_(std::make_unique<Impl>(session)) {
  auto& http = impl_->http;
  Impl* impl = impl_.get();
  http.Get("/api/v1/events", [impl](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t after = 0;
    std::string start = req.get_header_value("Last-Event-ID");
    if (req.has_param("after")) start = req.get_param_value("after");
    if (!start.empty()) {
      auto [p, ec] = std::from_chars(start.data(), start.data() + start.size(), after);
      if (ec != std::errc() || p != start.data() + start.size()) {
        res.status = 400;
        res.set_content(json{{"api", "v1"}, {"error", {{"code", "bad_request"}, {"message", "invalid event id"}}}}.dump(),
                        "application/json");
        return;
      }
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [impl, after](std::size_t, httplib::DataSink& sink) mutable {
      if (impl->stopping) return false;
      const auto events = impl->session.events_after(after, std::chrono::milliseconds(250));
      if (impl->stopping) return false;
      std::string chunk;
      for (const auto& e : events) {
        json payload = {{"sequence", e.sequence}, {"type", e.type}, {"data", e.data}};
        chunk += "id: " + std::to_string(e.sequence) + "\nevent: " + e.type + "\ndata: " + payload.dump() + "\n\n";
        after = e.sequence;
      }
      if (chunk.empty()) chunk = ": keepalive\n\n";
      return sink.write(chunk.data(), chunk.size());
    });
  });
  auto dispatch = [impl](const httplib::Request& req, httplib::Response& res) {
    ServiceRequest r;
    r.method = req.method;
    r.path = req.matches.size() > 1 ? std::string(req.matches[1]) : std::string();
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    r.client = req.get_header_value("X-Client");
    if (r.client.empty() && req.has_param("client")) r.client = req.get_param_value("client");
    write_response(impl->session.handle(r), res);
  };
  http.Get("/api/v1(/.*)?", dispatch);
  http.Post("/api/v1(/.*)?", dispatch);
  http.Put("/api/v1(/.*)?", dispatch);
  http.Delete("/api/v1(/.*)?", dispatch);
  http.set_error_handler([impl](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json{{"api", "v1"},
                         {"revision", impl->session.revision()},
                         {"error", {{"code", "not_found"}, {"message", "no such endpoint"}}}}
                        .dump(),
                    "application/json");
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(json{{"api", "v1"}, {"error", {{"code", "internal"}, {"message", "internal error"}}}}.dump(),
                    "application/json");
  });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->http.bind_to_any_port(host);
    if (p <= 0) throw Error("cannot bind to " + host);
    return p;
  }
  if (!impl_->http.bind_to_port(host, port)) throw Error("cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->stopping = true;
  if (impl_->http.is_running()) impl_->http.stop();
}

std::pair<std::string, int> parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error("bind address must be host:port, got '" + text + "'");
  int port = 0;
  const char* b = text.data() + colon + 1;
  const char* e = text.data() + text.size();
  auto [p, ec] = std::from_chars(b, e, port);
  if (ec != std::errc() || p != e || port < 0 || port > 65535) throw Error("invalid port in '" + text + "'");
  return {text.substr(0, colon), port};
}

}  // namespace gatescope
