#include <doctest.h>

#include <httplib.h>

#include <future>
#include <latch>
#include <thread>

#include "cipher_fixture.hpp"
#include "gatescope/dataflow.hpp"
#include "gatescope/serialize.hpp"
#include "gatescope/service.hpp"
#include "gatescope/verilog.hpp"
#include "generators.hpp"

using namespace gatescope;
using nlohmann::json;

namespace {

Project counter_project() {
  return Project(parse_verilog(gstest::read_data("counter4.v"), gstest::cells(), "counter4.v"));
}

json data(const ServiceResponse& r) {
  REQUIRE_MESSAGE(r.status < 300, r.body.dump());
  CHECK(r.body.at("api") == "v1");
  CHECK(r.body.at("revision") == r.revision);
  return r.body.at("data");
}

json endpoints_json(const std::vector<Endpoint>& eps) {
  json a = json::array();
  for (const auto& e : eps) {
    json j = {{"net", e.net.value}};
    if (e.kind == Endpoint::Kind::gate_pin) {
      j["kind"] = "pin";
      j["gate"] = e.gate.value;
      j["pin"] = e.pin;
    } else {
      j["kind"] = e.kind == Endpoint::Kind::global_input ? "global_input" : "global_output";
    }
    a.push_back(j);
  }
  return a;
}

}  // namespace

TEST_CASE("summary counts equal core queries") {
  const auto fx = gstest::random_sequential(3, 6, 3, 60);
  Session s{Project(fx.netlist)};
  const json d = data(s.handle("GET", "/summary"));
  CHECK(d.at("gates") == fx.netlist.gates().size());
  CHECK(d.at("nets") == fx.netlist.nets().size());
  CHECK(d.at("modules") == fx.netlist.modules().size());
  CHECK(d.at("flip_flops") == fx.netlist.sequential_gates().size());
  CHECK(data(s.handle("GET", "/gates")).size() == fx.netlist.gates().size());
  CHECK(data(s.handle("GET", "/nets")).size() == fx.netlist.nets().size());
}

TEST_CASE("neighbors and cone delegate to the core") {
  const auto fx = gstest::random_sequential(5, 5, 3, 80);
  const Netlist& nl = fx.netlist;
  Session s{Project(nl)};
  for (const auto& [id, g] : nl.gates()) {
    for (Direction dir : {Direction::predecessors, Direction::successors}) {
      const json got = data(s.handle("POST", "/neighbors", {{"object", {{"gate", id.value}}}, {"direction", to_string(dir)}}));
      CHECK(got.at("endpoints") == endpoints_json(nl.neighbors(id, dir)));
      const json cone = data(s.handle("POST", "/cone", {{"objects", {{{"gate", id.value}}}}, {"direction", to_string(dir)}, {"depth", 1}}));
      const auto want = nl.extract_cone({id}, dir, 1, false);
      std::set<std::uint32_t> gates;
      for (GateId g2 : want.gates) gates.insert(g2.value);
      CHECK(cone.at("gates").get<std::set<std::uint32_t>>() == gates);
    }
  }
  for (const auto& [id, n] : nl.nets()) {
    const json got = data(s.handle("POST", "/neighbors", {{"object", {{"net", id.value}}}, {"direction", "successors"}}));
    CHECK(got.at("endpoints") == endpoints_json(nl.neighbors(id, Direction::successors)));
  }
  // Repeated one-step expansion, as the UI does it, reaches the unbounded cone.
  const GateId start = nl.sequential_gates().front();
  std::set<std::uint32_t> full;
  const auto unbounded = nl.extract_cone({start}, Direction::predecessors, std::nullopt, false);
  for (GateId g : unbounded.gates) full.insert(g.value);
  std::set<std::uint32_t> fix{start.value};
  for (int step = 0; step < 200; ++step) {
    json objs = json::array();
    for (auto g : fix) objs.push_back({{"gate", g}});
    const auto next = data(s.handle("POST", "/cone", {{"objects", objs}, {"direction", "predecessors"}, {"depth", 1}}))
                          .at("gates")
                          .get<std::set<std::uint32_t>>();
    if (next == fix) break;
    fix.insert(next.begin(), next.end());
  }
  CHECK(fix == full);
}

TEST_CASE("read-your-writes for groupings and modules") {
  Session s{counter_project()};
  const auto created = s.handle("POST", "/groupings", {{"name", "suspicious"}, {"color", "#ff0000"}});
  CHECK(created.status == 201);
  CHECK(created.revision == 1);
  const auto gid = data(created).at("id").get<std::uint32_t>();
  const json list = data(s.handle("GET", "/groupings"));
  REQUIRE(list.size() == 1);
  CHECK(list[0].at("name") == "suspicious");
  CHECK(list[0].at("color") == "#ff0000");

  const auto assigned = s.handle("POST", "/groupings/" + std::to_string(gid) + "/assign", {{"gates", {1, 2}}, {"nets", {3}}});
  CHECK(assigned.revision == 2);
  CHECK(data(s.handle("GET", "/gates/1")).at("grouping") == gid);
  CHECK(data(s.handle("GET", "/nets/3")).at("grouping") == gid);

  const auto mod = s.handle("POST", "/modules", {{"name", "adder"}, {"gates", {1, 2, 3}}});
  CHECK(mod.status == 201);
  const auto mid = data(mod).at("id").get<std::uint32_t>();
  const auto inner = data(s.handle("POST", "/modules", {{"name", "inner"}, {"parent", mid}})).at("id").get<std::uint32_t>();
  CHECK(data(s.handle("GET", "/modules/" + std::to_string(mid))).at("children") == json::array({inner}));
  CHECK(s.revision() == 4);

  // A cycle is rejected and leaves the revision alone.
  const auto cyc = s.handle("POST", "/modules/" + std::to_string(mid) + "/move", {{"parent", inner}});
  CHECK(cyc.status == 409);
  CHECK(cyc.body.contains("error"));
  CHECK(s.revision() == 4);
  CHECK(s.handle("POST", "/modules/" + std::to_string(inner) + "/move", {{"parent", 1}}).status == 200);
  CHECK(s.revision() == 5);
  CHECK(s.handle("POST", "/modules/" + std::to_string(inner) + "/gates", {{"gates", {4}}}).status == 200);
  CHECK(data(s.handle("GET", "/gates/4")).at("module") == inner);
  CHECK(s.snapshot().netlist.get_gate(GateId{4}).module.value == inner);
}

TEST_CASE("reads are pure at a fixed revision") {
  const auto fx = gstest::random_sequential(9, 4, 2, 40);
  Session s{Project(fx.netlist)};
  s.handle("POST", "/groupings", {{"name", "g"}, {"color", "#123456"}});
  const std::vector<std::pair<std::string, json>> reads = {
      {"/summary", nullptr}, {"/gates", nullptr}, {"/nets", nullptr}, {"/modules", nullptr}, {"/groupings", nullptr}};
  for (const auto& [path, body] : reads) {
    const auto a = s.handle("GET", path);
    const auto b = s.handle("GET", path);
    CHECK(a.body == b.body);
  }
  const json sel = {{"gates", {1, 2}}, {"nets", {1}}, {"modules", {1}}};
  CHECK(s.handle("POST", "/details", sel).body == s.handle("POST", "/details", sel).body);
}

TEST_CASE("selection details render functions and pin mapping") {
  Session s{counter_project()};
  const Netlist nl = s.snapshot().netlist;
  GateId xor_gate, ff;
  for (const auto& [id, g] : nl.gates()) {
    if (g.type->name() == "XOR2") xor_gate = id;
    if (g.type->name() == "DFFR") ff = id;
  }
  const auto put = s.handle("PUT", "/selection", {{"gates", {xor_gate.value, ff.value}}, {"nets", {1}}}, {}, "alice");
  CHECK(put.status == 200);
  CHECK(put.revision == 0);  // selections are client state, not mutations
  const json d = data(s.handle("GET", "/selection", nullptr, {}, "alice"));
  const json gates = d.at("details").at("gates");
  REQUIRE(gates.size() == 2);
  CHECK(gates[0].at("functions").at("Y") == BooleanFunction::parse("A ^ B").to_string());
  CHECK(gates[0].at("pins").size() == 3);
  CHECK(gates[1].at("flip_flop").at("next_state") == "D");
  CHECK(gates[1].at("flip_flop").at("outputs").at("Q") == "state");
  CHECK(d.at("details").at("nets").size() == 1);
  // Other clients have their own selection.
  CHECK(data(s.handle("GET", "/selection", nullptr, {}, "bob")).at("selection").at("gates").empty());
  CHECK(s.handle("PUT", "/selection", {{"gates", {999}}}, {}, "alice").status == 404);
}

TEST_CASE("malformed requests produce error objects") {
  Session s{counter_project()};
  const std::vector<std::tuple<std::string, std::string, std::string, int>> cases = {
      {"GET", "/nope", "", 404},
      {"GET", "/gates/0", "", 400},
      {"GET", "/gates/abc", "", 400},
      {"GET", "/gates/999", "", 404},
      {"POST", "/summary", "", 405},
      {"POST", "/neighbors", "{", 400},
      {"POST", "/neighbors", "[1,2]", 400},
      {"POST", "/neighbors", R"({"object": {"gate": 1}})", 400},
      {"POST", "/neighbors", R"({"object": {"gate": 1}, "direction": "sideways"})", 400},
      {"POST", "/neighbors", R"({"object": {"gate": 999}, "direction": "successors"})", 404},
      {"POST", "/cone", R"({"objects": "x", "direction": "successors"})", 400},
      {"POST", "/groupings", R"({"name": "g", "color": "red"})", 400},
      {"POST", "/groupings", R"({"color": "#ffffff"})", 400},
      {"POST", "/groupings/7/assign", R"({"gates": [1]})", 404},
      {"POST", "/modules", R"({"name": "m", "gates": [-1]})", 400},
      {"POST", "/passes/sorting", "", 404},
      {"GET", "/tasks/42", "", 404},
      {"GET", "/results/dataflow", "", 404},
      {"GET", "/dataflow/dot", "", 404},
      {"POST", "/simulate", R"({"stimulus": "bogus 1 2 3 4"})", 400},
      {"POST", "/simulate", R"({"until": 10, "stimulus": "nosuch 0 1"})", 400},
      {"GET", "/simulations/5/waveform", "", 404},
  };
  for (const auto& [method, path, body, status] : cases) {
    ServiceRequest r{method, path, {}, body, {}};
    const auto resp = s.handle(r);
    CHECK_MESSAGE(resp.status == status, method << " " << path << " " << body << " -> " << resp.body.dump());
    CHECK(resp.body.at("error").at("code").is_string());
    CHECK(resp.body.at("error").at("message").is_string());
  }
  CHECK(s.revision() == 0);

  // Random garbage never crashes the session.
  std::mt19937_64 rng(1);
  const std::vector<std::string> paths = {"/gates", "/modules", "/groupings/1/assign", "/cone", "/neighbors",
                                          "/simulate", "/passes/dataflow", "/selection", "/details"};
  const std::string alphabet = "{}[]\":,0123456789abcdefgates-nets";
  for (int i = 0; i < 300; ++i) {
    std::string body;
    const auto len = rng() % 24;
    for (std::size_t k = 0; k < len; ++k) body += alphabet[rng() % alphabet.size()];
    ServiceRequest r{(rng() % 2) ? "POST" : "PUT", paths[rng() % paths.size()], {}, body, {}};
    const auto resp = s.handle(r);
    CHECK(resp.body.contains("api"));
  }
  s.wait_idle();
}

TEST_CASE("passes run as tasks and commit results") {
  const auto toy = gstest::toy_cipher(true);
  Session s{Project(toy.netlist)};
  const auto launched = s.handle("POST", "/passes/dataflow");
  CHECK(launched.status == 202);
  const auto task = data(launched).at("id").get<std::uint64_t>();
  s.wait_idle();
  const json t = data(s.handle("GET", "/tasks/" + std::to_string(task)));
  CHECK(t.at("status") == "done");
  CHECK(t.at("progress") == 1.0);
  CHECK(t.at("committed_revision") == 1);
  CHECK(s.revision() == 1);
  const json result = data(s.handle("GET", "/results/dataflow"));
  CHECK(result == to_json(recover_registers(toy.netlist)));
  CHECK_NOTHROW(validate_result("dataflow", result, toy.netlist));

  const auto dot = s.handle("GET", "/dataflow/dot", nullptr, "highlight=key_reg_0->ct_reg_3");
  CHECK(dot.status == 200);
  CHECK(dot.content_type == "text/vnd.graphviz");
  CHECK(dot.text.find("[color=red]") != std::string::npos);
  CHECK(s.handle("GET", "/dataflow/dot", nullptr, "highlight=ct_reg_0->key_reg_0").status == 404);
  CHECK(s.handle("GET", "/dataflow/dot", nullptr, "highlight=nothing").status == 400);

  for (const std::string pass : {"identify", "bitorder", "crypto"}) {
    data(s.handle("POST", "/passes/" + pass, {{"config", {{"crypto", {{"threads", 1}}}}}}));
    s.wait_idle();
    CHECK(data(s.handle("GET", "/results")).get<std::set<std::string>>().contains(pass));
  }
  // A fresh dataflow result drops the results derived from the old one.
  data(s.handle("POST", "/passes/dataflow"));
  s.wait_idle();
  CHECK(data(s.handle("GET", "/results")) == json::array({"dataflow"}));
  CHECK(data(s.handle("GET", "/tasks")).size() == 5);
}

TEST_CASE("mutations invalidate running tasks") {
  Session s{counter_project()};
  std::promise<void> mutated;
  auto ready = mutated.get_future().share();
  s.set_commit_hook([ready](const TaskInfo&) { ready.wait(); });
  const auto id = data(s.handle("POST", "/passes/dataflow")).at("id").get<std::uint64_t>();
  CHECK(s.handle("POST", "/groupings", {{"name", "x"}}).revision == 1);
  mutated.set_value();
  s.wait_idle();
  const json t = data(s.handle("GET", "/tasks/" + std::to_string(id)));
  CHECK(t.at("status") == "invalidated");
  CHECK(t.at("committed_revision").is_null());
  CHECK(s.revision() == 1);
  CHECK(s.handle("GET", "/results/dataflow").status == 404);

  // Cancellation discards the result.
  std::promise<void> go;
  auto go_f = go.get_future().share();
  s.set_commit_hook([go_f](const TaskInfo&) { go_f.wait(); });
  const auto id2 = data(s.handle("POST", "/passes/dataflow")).at("id").get<std::uint64_t>();
  CHECK(data(s.handle("POST", "/tasks/" + std::to_string(id2) + "/cancel")).at("id") == id2);
  go.set_value();
  s.wait_idle();
  CHECK(data(s.handle("GET", "/tasks/" + std::to_string(id2))).at("status") == "cancelled");
  CHECK(s.revision() == 1);
}

TEST_CASE("concurrent mutations are linearized") {
  Session s{counter_project()};
  constexpr int kThreads = 8, kEach = 25;
  std::vector<std::vector<std::uint64_t>> seen(kThreads);
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        const auto r = s.handle("POST", "/groupings", {{"name", "g" + std::to_string(t) + "_" + std::to_string(i)}});
        seen[t].push_back(r.revision);
        s.handle("GET", "/summary");
      }
    });
  }
  for (auto& th : threads) th.join();
  std::set<std::uint64_t> all;
  for (const auto& v : seen) {
    CHECK(std::is_sorted(v.begin(), v.end()));
    all.insert(v.begin(), v.end());
  }
  CHECK(all.size() == kThreads * kEach);
  CHECK(*all.begin() == 1);
  CHECK(*all.rbegin() == kThreads * kEach);
  CHECK(s.revision() == kThreads * kEach);
  // The event log mirrors the same total order.
  const auto events = s.events_after(0, std::chrono::milliseconds(0));
  std::uint64_t last = 0;
  for (const auto& e : events) {
    if (e.type != "mutation") continue;
    CHECK(e.data.at("revision") == last + 1);
    last = e.data.at("revision").get<std::uint64_t>();
  }
  CHECK(last == kThreads * kEach);
}

TEST_CASE("simulation endpoints agree with the simulator") {
  Session s{counter_project()};
  const Netlist nl = s.snapshot().netlist;
  const std::string stim = "clock clk 10\nrst_n 0 0\nrst_n 3 1\nen 0 1\n";
  const auto started = s.handle("POST", "/simulate", {{"stimulus", stim}, {"until", 120}});
  CHECK(started.status == 201);
  const auto sid = std::to_string(data(started).at("simulation").get<std::uint64_t>());
  const WaveformSet direct = simulate(nl, std::nullopt, parse_stimulus(stim, nl), 120);

  const json w = data(s.handle("GET", "/simulations/" + sid + "/waveform"));
  CHECK(w.at("signals").size() == direct.names.size());
  for (const auto& sig : w.at("signals")) {
    const NetId net{sig.at("net").get<std::uint32_t>()};
    CHECK(sig.at("initial") == std::string(1, to_char(direct.initial.at(net))));
    auto it = direct.changes.find(net);
    CHECK(sig.at("changes").size() == (it == direct.changes.end() ? 0 : it->second.size()));
  }
  for (Time t : {0, 5, 17, 60, 120}) {
    const json st = data(s.handle("GET", "/simulations/" + sid + "/state", nullptr, "t=" + std::to_string(t)));
    for (const auto& [net, v] : state_at(direct, t)) {
      CHECK(st.at("values").at(std::to_string(net.value)) == std::string(1, to_char(v)));
    }
  }
  const json one = data(s.handle("GET", "/simulations/" + sid + "/state", nullptr, "t=50&nets=4,5"));
  CHECK(one.at("values").size() == 2);
  CHECK(s.handle("GET", "/simulations/" + sid + "/state", nullptr, "t=121").status == 400);
  CHECK(s.handle("GET", "/simulations/" + sid + "/state").status == 400);
  const auto vcd = s.handle("GET", "/simulations/" + sid + "/vcd");
  CHECK(vcd.content_type == "text/x-vcd");
  CHECK(vcd.text.find("$enddefinitions $end") != std::string::npos);
}

TEST_CASE("http transport and event stream") {
  Session s{counter_project()};
  Server server(s);
  const int port = server.bind("127.0.0.1", 0);
  std::thread th([&] { server.listen(); });
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(5, 0);

  auto summary = c.Get("/api/v1/summary");
  REQUIRE(summary);
  CHECK(summary->status == 200);
  CHECK(summary->get_header_value("X-Revision") == "0");
  CHECK(json::parse(summary->body).at("data") == data(s.handle("GET", "/summary")));

  auto bad = c.Post("/api/v1/neighbors", "{oops", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).at("error").at("code") == "bad_request");
  auto missing = c.Get("/elsewhere");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto sel = c.Put("/api/v1/selection", httplib::Headers{{"X-Client", "ui"}}, R"({"gates": [1]})", "application/json");
  REQUIRE(sel);
  CHECK(json::parse(sel->body).at("data").at("client") == "ui");

  // The push channel delivers the mutation event.
  std::string stream;
  std::thread listener([&] {
    httplib::Client sc("127.0.0.1", port);
    sc.set_read_timeout(5, 0);
    sc.Get("/api/v1/events", [&](const char* d, std::size_t n) {
      stream.append(d, n);
      return stream.find("create_grouping") == std::string::npos;
    });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  auto created = c.Post("/api/v1/groupings", R"({"name": "live", "color": "#00ff00"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  listener.join();
  CHECK(stream.find("event: mutation") != std::string::npos);
  CHECK(stream.find("\"revision\":1") != std::string::npos);

  server.stop();
  th.join();
  CHECK(parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS(parse_bind_address("nonsense"));
  CHECK_THROWS(parse_bind_address("host:99999"));
}
