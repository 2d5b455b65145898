#include <doctest.h>

#include "gatescope/verilog.hpp"
#include "support.hpp"

using namespace gatescope;

namespace {

Netlist V(std::string_view text) { return parse_verilog(text, gstest::cells(), "t.v"); }

std::optional<NetId> net_named(const Netlist& nl, const std::string& name) {
  for (const auto& [id, n] : nl.nets()) {
    if (n.name == name) return id;
  }
  return std::nullopt;
}

std::string error_of(std::string_view text, std::shared_ptr<const GateLibrary> lib = gstest::cells()) {
  try {
    (void)parse_verilog(text, std::move(lib), "t.v");
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("single inverter") {
  const auto nl = V("module top(a, b);\n input a;\n output b;\n INV g1 (.A(a), .Y(b));\nendmodule\n");
  REQUIRE(nl.gates().size() == 1);
  const Gate& g = nl.gates().begin()->second;
  CHECK(g.name == "g1");
  const NetId a = *net_named(nl, "a"), b = *net_named(nl, "b");
  CHECK(nl.get_net(a).global_input);
  CHECK(nl.get_net(b).global_output);
  CHECK(g.net_at("A") == a);
  CHECK(g.net_at("Y") == b);
}

TEST_CASE("ranged nets expand per bit") {
  const auto nl = V(R"(module top (input [1:0] a, output y);
  wire [3:0] w;
  INV u0 (.A(a[0]), .Y(w[2]));
  AND2 u1 (.A(w[2]), .B(a[1]), .Y(y));
endmodule)");
  for (const char* name : {"w[0]", "w[1]", "w[2]", "w[3]", "a[0]", "a[1]"}) CHECK(net_named(nl, name).has_value());
  const NetId w2 = *net_named(nl, "w[2]");
  CHECK(nl.get_net(w2).drivers.size() == 1);
  CHECK(nl.get_net(w2).sinks.size() == 1);
  CHECK(nl.get_net(*net_named(nl, "a[1]")).global_input);
  CHECK_FALSE(nl.check_consistency().has_value());
}

TEST_CASE("gate ids follow source order") {
  const auto nl = V(R"(module top (a, y);
  input a; output y; wire x1, x2;
  INV zz (.A(a), .Y(x1));
  INV aa (.A(x1), .Y(x2));
  BUF mm (.A(x2), .Y(y));
endmodule)");
  std::vector<std::string> names;
  for (const auto& [id, g] : nl.gates()) names.push_back(g.name);
  CHECK(names == std::vector<std::string>{"zz", "aa", "mm"});
  CHECK(nl.gates().begin()->first == GateId{1});
}

TEST_CASE("parsing is deterministic") {
  const std::string text = "module t(input a, input b, output y); NAND2 n (.A(a), .B(b), .Y(y)); endmodule";
  CHECK(V(text) == V(text));
}

TEST_CASE("unknown cell names the cell and line") {
  const auto e = error_of("module t(a);\ninput a;\nwire y;\nFOO u (.A(a), .Y(y));\nendmodule");
  CHECK(e.starts_with("t.v:4:1:"));
  CHECK(e.find("FOO") != std::string::npos);
}

TEST_CASE("errors carry locations") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"module t(a);\ninput a;\nwire y;\nINV u (.A(a), .Z(y));\nendmodule", "no port 'Z'"},
      {"module t(a);\ninput a;\nwire y;\nINV u (a, y);\nendmodule", "named port"},
      {"module t(a);\ninput a;\nreg r;\nendmodule", "unsupported construct"},
      {"module t(a);\ninput a;\nalways @(a) begin end\nendmodule", "unsupported construct"},
      {"module t(a);\ninput a;\nparameter P = 1;\nendmodule", "unsupported construct"},
      {"module t(a);\ninout a;\nendmodule", "unsupported construct"},
      {"module t(a);\ninput a;\nINV u (.A(a), .Y(nope));\nendmodule", "undeclared net 'nope'"},
      {"module t(a);\ninput a;\nwire [1:0] w;\nwire \\w[0] ;\nendmodule", "declared twice"},
      {"module t(a);\ninput a;\nwire [1:0] w;\nINV u (.A(w[5]), .Y(w[0]));\nendmodule", "out of range"},
      {"module t(a);\ninput a;\nwire y;\nINV u (.A(a), .Y(1'b0));\nendmodule", "constant"},
      {"module t(a);\ninput a;\nwire y;\nINV u (.A(a), .A(a), .Y(y));\nendmodule", "connected twice"},
      {"module t(a);\ninput a;\n", "endmodule"},
  };
  for (const auto& [text, needle] : cases) {
    const auto e = error_of(text);
    CHECK_MESSAGE(e.starts_with("t.v:"), text);
    CHECK_MESSAGE(e.find(needle) != std::string::npos, e);
  }
}

TEST_CASE("constants use library tie cells") {
  const auto nl = V("module t(y, z);\noutput y, z;\nAND2 u (.A(1'b1), .B(1'b0), .Y(y));\nassign z = 1'b1;\nendmodule");
  std::map<std::string, int> types;
  for (const auto& [id, g] : nl.gates()) ++types[g.type->name()];
  CHECK(types["TIE1"] == 2);
  CHECK(types["TIE0"] == 1);
  CHECK(nl.library()->lookup("TIE0_SYN") == nullptr);
  CHECK_FALSE(nl.check_consistency().has_value());
}

TEST_CASE("tie cells are synthesized when the library has none") {
  auto lib = std::make_shared<const GateLibrary>(parse_liberty(R"(library (l) {
    cell (INV) { pin (A) { direction : input; } pin (Y) { direction : output; function : "!A"; } }
  })"));
  const auto nl = parse_verilog("module t(y); output y; INV u (.A(1'b0), .Y(y)); endmodule", lib);
  const GateType* tie = nl.library()->lookup("TIE0_SYN");
  REQUIRE(tie != nullptr);
  CHECK(tie->has_property(GateProperty::constant_source));
  CHECK(*synthesized_cell("TIE0_SYN") == *tie);
  CHECK(nl.library()->lookup("INV") != nullptr);
  // Net-to-net assign without a buffer cell is rejected.
  CHECK(error_of("module t(a, y); input a; output y; assign y = a; endmodule", lib).find("buffer") !=
        std::string::npos);
}

TEST_CASE("net-to-net assign inserts a buffer") {
  const auto nl = V("module t(a, y); input a; output y; assign y = a; endmodule");
  REQUIRE(nl.gates().size() == 1);
  const Gate& g = nl.gates().begin()->second;
  CHECK(g.type->has_property(GateProperty::buffer_like));
  CHECK(g.net_at("Y") == net_named(nl, "y"));
}

TEST_CASE("comments, attributes, escaped names and concatenation") {
  const auto nl = V(R"(// header
`timescale 1ns/1ps
(* keep *) module t (input [1:0] a, output [1:0] y);
  /* block
     comment */
  wire \odd$name ;
  INV u0 (.A(a[0]), .Y(\odd$name ));
  BUF u1 (.A(\odd$name ), .Y(y[0]));
  assign {y[1]} = {a[1]};
endmodule
)");
  CHECK(net_named(nl, "odd$name").has_value());
  CHECK(nl.gates().size() == 3);
}
