#include "gatescope/verilog.hpp"

#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

#include "gatescope/errors.hpp"

namespace gatescope {

std::optional<GateType> synthesized_cell(std::string_view name) {
  bool value;
  if (name == "TIE0_SYN") {
    value = false;
  } else if (name == "TIE1_SYN") {
    value = true;
  } else {
    return std::nullopt;
  }
  return GateType(std::string(name), {Pin{"Y", PinDirection::output}}, {{"Y", BooleanFunction::constant(value)}});
}

namespace {

struct Token {
  enum class Kind { identifier, number, constant, symbol, end };
  Kind kind = Kind::end;
  std::string text;
  SourceLocation loc;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      Token t;
      t.loc = here();
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (c == '\\') {
        advance();
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
        t.kind = Token::Kind::identifier;
        t.text = std::string(text_.substr(start, pos_ - start));
        if (t.text.empty()) throw ParseError(t.loc, "empty escaped identifier");
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                                       text_[pos_] == '$')) {
          advance();
        }
        t.kind = Token::Kind::identifier;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
        t.kind = Token::Kind::number;
        std::size_t save = pos_;
        skip_spaces();
        if (pos_ < text_.size() && text_[pos_] == '\'') {
          advance();
          while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            advance();
          }
          t.kind = Token::Kind::constant;
        } else {
          pos_ = save;
        }
        t.text = std::string(text_.substr(start, pos_ - start));
        std::erase_if(t.text, [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
      } else {
        advance();
        t.kind = Token::Kind::symbol;
        t.text = std::string(1, c);
        if (c == '(' && pos_ < text_.size() && text_[pos_] == '*') {
          skip_attribute(t.loc);
          continue;
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  SourceLocation here() const { return {file_, line_, col_}; }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_spaces() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }
  void skip_attribute(const SourceLocation& loc) {
    advance();
    while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == ')')) advance();
    if (pos_ + 1 >= text_.size()) throw ParseError(loc, "unterminated attribute");
    advance();
    advance();
  }
  void skip_blank() {
    for (;;) {
      skip_spaces();
      if (text_.substr(pos_, 2) == "//" || (pos_ < text_.size() && text_[pos_] == '`')) {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (text_.substr(pos_, 2) == "/*") {
        SourceLocation loc = here();
        std::size_t end = text_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) throw ParseError(loc, "unterminated comment");
        while (pos_ < end + 2) advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1, col_ = 1;
};

const std::unordered_set<std::string_view> kUnsupported = {
    "always",  "initial", "if",      "else",   "reg",     "parameter", "localparam", "generate", "function",
    "task",    "case",    "for",     "begin",  "integer", "genvar",    "defparam",   "inout",    "supply0",
    "supply1", "tri",     "specify", "always_ff", "always_comb", "logic", "while"};

// One bit of an expression: a net or a constant.
struct Bit {
  std::optional<NetId> net;
  bool value = false;
};

struct Declaration {
  enum class Role { wire, input, output };
  Role role = Role::wire;
  bool ranged = false;
  long msb = 0, lsb = 0;
  std::vector<NetId> bits;  // msb first
  SourceLocation loc;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::shared_ptr<const GateLibrary> library)
      : toks_(std::move(tokens)), netlist_(std::move(library)) {}

  Netlist run() {
    expect_word("module");
    const Token& name = expect_identifier("module name");
    netlist_ = Netlist(netlist_.library(), name.text);
    std::vector<std::pair<std::string, SourceLocation>> header_ports;
    if (accept("#")) unsupported(prev(), "module parameters");
    if (accept("(")) {
      if (!accept(")")) {
        std::optional<DeclSpec> group;
        do {
          if (peek_word("input") || peek_word("output") || peek_word("inout")) group = declaration_spec();
          const Token& p = expect_identifier("port name");
          if (group) declare(p, group->role, group->ranged, group->msb, group->lsb);
          header_ports.emplace_back(p.text, p.loc);
        } while (accept(","));
        expect(")");
      }
    }
    expect(";");
    while (!peek_word("endmodule")) {
      const Token& t = cur();
      if (t.kind == Token::Kind::end) throw ParseError(t.loc, "missing 'endmodule'");
      if (t.kind != Token::Kind::identifier) throw ParseError(t.loc, "unexpected '" + t.text + "'");
      if (t.text == "input" || t.text == "output" || t.text == "wire") {
        const DeclSpec spec = declaration_spec();
        do {
          const Token& n = expect_identifier("net name");
          declare(n, spec.role, spec.ranged, spec.msb, spec.lsb);
        } while (accept(","));
        expect(";");
      } else if (t.text == "assign") {
        ++pos_;
        assignments();
      } else if (kUnsupported.contains(t.text)) {
        unsupported(t, "'" + t.text + "'");
      } else if (t.text == "module") {
        throw ParseError(t.loc, "nested or multiple modules are not supported");
      } else {
        instantiation();
      }
    }
    ++pos_;
    if (cur().kind != Token::Kind::end) {
      throw ParseError(cur().loc, "only one module per file is supported");
    }
    for (const auto& [port, loc] : header_ports) {
      auto it = decls_.find(port);
      if (it == decls_.end() || it->second.role == Declaration::Role::wire) {
        throw ParseError(loc, "port '" + port + "' lacks an input/output declaration");
      }
    }
    return std::move(netlist_);
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& prev() const { return toks_[pos_ - 1]; }
  bool peek(std::string_view sym) const { return cur().kind == Token::Kind::symbol && cur().text == sym; }
  bool peek_word(std::string_view w) const { return cur().kind == Token::Kind::identifier && cur().text == w; }
  bool accept(std::string_view sym) {
    if (!peek(sym)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view sym) {
    if (!accept(sym)) throw ParseError(cur().loc, "expected '" + std::string(sym) + "' but found " + describe(cur()));
  }
  void expect_word(std::string_view w) {
    if (!peek_word(w)) throw ParseError(cur().loc, "expected '" + std::string(w) + "' but found " + describe(cur()));
    ++pos_;
  }
  const Token& expect_identifier(std::string_view what) {
    if (cur().kind != Token::Kind::identifier) {
      throw ParseError(cur().loc, "expected " + std::string(what) + " but found " + describe(cur()));
    }
    return toks_[pos_++];
  }
  long expect_number() {
    if (cur().kind != Token::Kind::number) throw ParseError(cur().loc, "expected a number but found " + describe(cur()));
    return std::stol(toks_[pos_++].text);
  }
  static std::string describe(const Token& t) {
    return t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'";
  }
  [[noreturn]] static void unsupported(const Token& t, const std::string& what) {
    throw ParseError(t.loc, "unsupported construct: " + what);
  }

  struct DeclSpec {
    Declaration::Role role = Declaration::Role::wire;
    bool ranged = false;
    long msb = 0, lsb = 0;
  };

  DeclSpec declaration_spec() {
    const Token& kw = toks_[pos_++];
    if (kw.text == "inout") unsupported(kw, "'inout'");
    DeclSpec s;
    s.role = kw.text == "input"    ? Declaration::Role::input
             : kw.text == "output" ? Declaration::Role::output
                                   : Declaration::Role::wire;
    if (s.role != Declaration::Role::wire && peek_word("wire")) ++pos_;
    if (peek_word("reg")) unsupported(cur(), "'reg'");
    if (peek_word("signed")) ++pos_;
    if (accept("[")) {
      s.ranged = true;
      s.msb = expect_number();
      expect(":");
      s.lsb = expect_number();
      expect("]");
    }
    return s;
  }

  void declare(const Token& n, Declaration::Role role, bool ranged, long msb, long lsb) {
    auto it = decls_.find(n.text);
    if (it != decls_.end()) {
      Declaration& d = it->second;
      if (d.ranged != ranged || d.msb != msb || d.lsb != lsb) {
        throw ParseError(n.loc, "conflicting redeclaration of '" + n.text + "'");
      }
      if (role != Declaration::Role::wire) {
        if (d.role != Declaration::Role::wire && d.role != role) {
          throw ParseError(n.loc, "conflicting direction for '" + n.text + "'");
        }
        d.role = role;
        mark(d);
      }
      return;
    }
    Declaration d{role, ranged, msb, lsb, {}, n.loc};
    auto make = [&](const std::string& name) {
      if (!bit_names_.insert(name).second) throw ParseError(n.loc, "net name '" + name + "' is declared twice");
      d.bits.push_back(netlist_.add_net(name));
    };
    if (!ranged) {
      make(n.text);
    } else {
      const long step = msb >= lsb ? -1 : 1;
      for (long i = msb;; i += step) {
        make(n.text + "[" + std::to_string(i) + "]");
        if (i == lsb) break;
      }
    }
    mark(d);
    decls_.emplace(n.text, std::move(d));
  }

  void mark(const Declaration& d) {
    for (NetId b : d.bits) {
      if (d.role == Declaration::Role::input) netlist_.set_global_input(b);
      if (d.role == Declaration::Role::output) netlist_.set_global_output(b);
    }
  }

  std::vector<Bit> constant_bits(const Token& t) {
    const auto q = t.text.find('\'');
    std::size_t width = q == 0 ? 0 : std::stoul(t.text.substr(0, q));
    std::string body = t.text.substr(q + 1);
    if (!body.empty() && (body[0] == 's' || body[0] == 'S')) body.erase(0, 1);
    if (body.empty()) throw ParseError(t.loc, "malformed constant '" + t.text + "'");
    const char base = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
    std::string digits = body.substr(1);
    std::erase(digits, '_');
    std::vector<bool> lsb_first;
    auto fail = [&]() -> void { throw ParseError(t.loc, "unsupported constant '" + t.text + "' (only 0/1 digits)"); };
    if (digits.empty()) fail();
    if (base == 'b') {
      for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (*it != '0' && *it != '1') fail();
        lsb_first.push_back(*it == '1');
      }
    } else if (base == 'h' || base == 'd' || base == 'o') {
      unsigned long long v = 0;
      try {
        v = std::stoull(digits, nullptr, base == 'h' ? 16 : base == 'o' ? 8 : 10);
      } catch (const std::exception&) {
        fail();
      }
      for (; v != 0; v >>= 1) lsb_first.push_back(v & 1U);
    } else {
      fail();
    }
    if (width == 0) width = std::max<std::size_t>(lsb_first.size(), 1);
    lsb_first.resize(width, false);
    std::vector<Bit> out;
    for (auto it = lsb_first.rbegin(); it != lsb_first.rend(); ++it) out.push_back(Bit{std::nullopt, *it});
    return out;
  }

  // Bits of an expression, msb first.
  std::vector<Bit> expression() {
    const Token& t = cur();
    if (t.kind == Token::Kind::constant) {
      ++pos_;
      return constant_bits(t);
    }
    if (accept("{")) {
      std::vector<Bit> out;
      do {
        auto part = expression();
        out.insert(out.end(), part.begin(), part.end());
      } while (accept(","));
      expect("}");
      return out;
    }
    if (t.kind == Token::Kind::number) throw ParseError(t.loc, "unsized number '" + t.text + "' is not a net");
    if (t.kind != Token::Kind::identifier) {
      if (t.kind == Token::Kind::symbol && std::string_view("~!&|^?+-").find(t.text) != std::string_view::npos) {
        unsupported(t, "operator '" + t.text + "'");
      }
      throw ParseError(t.loc, "expected a net reference but found " + describe(t));
    }
    ++pos_;
    auto it = decls_.find(t.text);
    if (it == decls_.end()) throw ParseError(t.loc, "undeclared net '" + t.text + "'");
    const Declaration& d = it->second;
    std::vector<Bit> out;
    if (accept("[")) {
      if (!d.ranged) throw ParseError(t.loc, "'" + t.text + "' is not a vector");
      long hi = expect_number();
      long lo = hi;
      if (accept(":")) lo = expect_number();
      expect("]");
      auto index = [&](long i) -> NetId {
        const long lo_b = std::min(d.msb, d.lsb), hi_b = std::max(d.msb, d.lsb);
        if (i < lo_b || i > hi_b) {
          throw ParseError(t.loc, "index " + std::to_string(i) + " out of range for '" + t.text + "'");
        }
        return d.bits[static_cast<std::size_t>(d.msb >= d.lsb ? d.msb - i : i - d.msb)];
      };
      const long step = hi >= lo ? -1 : 1;
      for (long i = hi;; i += step) {
        out.push_back(Bit{index(i), false});
        if (i == lo) break;
      }
    } else {
      for (NetId b : d.bits) out.push_back(Bit{b, false});
    }
    if (!peek(",") && !peek(")") && !peek(";") && !peek("}") && !peek("=") && cur().kind == Token::Kind::symbol) {
      unsupported(cur(), "operator '" + cur().text + "'");
    }
    return out;
  }

  const GateType& constant_type(bool value) {
    const auto& lib = *netlist_.library();
    for (const auto& [name, type] : lib.types()) {
      if (!type.has_property(GateProperty::constant_source) || type.output_pins().size() != 1) continue;
      if (type.output_functions().begin()->second.is_constant(value)) return type;
    }
    auto extra = *synthesized_cell(value ? "TIE1_SYN" : "TIE0_SYN");
    netlist_.set_library(std::make_shared<const GateLibrary>(lib.extended({extra})));
    return *netlist_.library()->lookup(extra.name());
  }

  GateId add_gate(const std::string& name, const std::string& type, const SourceLocation& loc) {
    try {
      return netlist_.add_gate(name, type);
    } catch (const NetlistError& e) {
      throw ParseError(loc, e.what());
    }
  }

  void connect(GateId g, const std::string& pin, NetId n, const SourceLocation& loc) {
    try {
      netlist_.connect(g, pin, n);
    } catch (const NetlistError& e) {
      throw ParseError(loc, e.what());
    }
  }

  NetId shared_constant(bool value, const SourceLocation& loc) {
    auto& slot = const_nets_[value ? 1 : 0];
    if (slot) return *slot;
    const GateType& type = constant_type(value);
    const std::string label = value ? "1'b1" : "1'b0";
    NetId n = netlist_.add_net(label);
    GateId g = add_gate(value ? "$const1" : "$const0", type.name(), loc);
    connect(g, type.output_pins().front(), n, loc);
    slot = n;
    return n;
  }

  void assignments() {
    do {
      const SourceLocation loc = cur().loc;
      auto lhs = expression();
      expect("=");
      auto rhs = expression();
      if (lhs.size() != rhs.size()) {
        throw ParseError(loc, "assign width mismatch: " + std::to_string(lhs.size()) + " vs " +
                                  std::to_string(rhs.size()));
      }
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (!lhs[i].net) throw ParseError(loc, "cannot assign to a constant");
        const std::string gname = "$assign" + std::to_string(++assign_count_);
        if (!rhs[i].net) {
          const GateType& type = constant_type(rhs[i].value);
          GateId g = add_gate(gname, type.name(), loc);
          connect(g, type.output_pins().front(), *lhs[i].net, loc);
          continue;
        }
        const GateType* buf = netlist_.library()->find_with_property(GateProperty::buffer_like);
        if (buf == nullptr) {
          throw ParseError(loc, "net-to-net assign needs a buffer cell, but the library has none");
        }
        GateId g = add_gate(gname, buf->name(), loc);
        connect(g, buf->input_pins().front(), *rhs[i].net, loc);
        connect(g, buf->output_pins().front(), *lhs[i].net, loc);
      }
    } while (accept(","));
    expect(";");
  }

  void instantiation() {
    const Token& type_tok = toks_[pos_++];
    if (peek("#")) unsupported(cur(), "instance parameters");
    const GateType* type = netlist_.library()->lookup(type_tok.text);
    if (type == nullptr) throw ParseError(type_tok.loc, "unknown cell type '" + type_tok.text + "'");
    const Token& inst = expect_identifier("instance name");
    if (accept("[")) unsupported(prev(), "instance arrays");
    expect("(");
    GateId g = add_gate(inst.text, type->name(), inst.loc);
    std::set<std::string> seen;
    if (!accept(")")) {
      do {
        if (!accept(".")) throw ParseError(cur().loc, "named port connections required (.PIN(net))");
        const Token& pin = expect_identifier("pin name");
        if (!type->has_pin(pin.text)) {
          throw ParseError(pin.loc, "cell type '" + type->name() + "' has no port '" + pin.text + "'");
        }
        if (!seen.insert(pin.text).second) throw ParseError(pin.loc, "port '" + pin.text + "' connected twice");
        expect("(");
        if (accept(")")) continue;
        const SourceLocation loc = cur().loc;
        auto bits = expression();
        expect(")");
        if (bits.size() != 1) {
          throw ParseError(loc, "port '" + pin.text + "' expects 1 bit, got " + std::to_string(bits.size()));
        }
        if (bits[0].net) {
          connect(g, pin.text, *bits[0].net, loc);
        } else if (type->pin_direction(pin.text) == PinDirection::output) {
          throw ParseError(loc, "output port '" + pin.text + "' connected to a constant");
        } else {
          connect(g, pin.text, shared_constant(bits[0].value, loc), loc);
        }
      } while (accept(","));
      expect(")");
    }
    expect(";");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Netlist netlist_;
  std::map<std::string, Declaration> decls_;
  std::set<std::string> bit_names_;
  std::optional<NetId> const_nets_[2];
  std::size_t assign_count_ = 0;
};

}  // namespace

Netlist parse_verilog(std::string_view text, std::shared_ptr<const GateLibrary> library, std::string_view source_name) {
  if (!library) throw Error("parse_verilog requires a gate library");
  Lexer lexer(text, std::string(source_name));
  return Parser(lexer.run(), std::move(library)).run();
}

}  // namespace gatescope
