#include "gatescope/gate_library.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace gatescope {

std::string to_string(GateProperty p) {
  switch (p) {
    case GateProperty::combinational: return "combinational";
    case GateProperty::sequential: return "sequential";
    case GateProperty::buffer_like: return "buffer_like";
    case GateProperty::constant_source: return "constant_source";
  }
  return "?";
}

// --- GateType -------------------------------------------------------------

GateType::GateType(std::string name, std::vector<Pin> pins, std::map<std::string, BooleanFunction> output_functions,
                   std::optional<FlipFlopSpec> ff)
    : name_(std::move(name)), pins_(std::move(pins)), output_functions_(std::move(output_functions)), ff_(std::move(ff)) {
  std::set<std::string> seen;
  std::set<std::string> inputs;
  std::size_t outputs = 0;
  for (const auto& p : pins_) {
    if (!seen.insert(p.name).second) throw Error("gate type '" + name_ + "': duplicate pin '" + p.name + "'");
    if (p.direction == PinDirection::input) {
      inputs.insert(p.name);
    } else {
      ++outputs;
    }
  }
  if (outputs == 0) throw Error("gate type '" + name_ + "' has no output pins");

  auto check_support = [&](const BooleanFunction& f, const std::string& what) {
    for (const auto& v : f.support()) {
      if (!inputs.contains(v)) {
        throw Error("gate type '" + name_ + "': " + what + " references undeclared input pin '" + v + "'");
      }
    }
  };

  if (ff_) {
    if (!output_functions_.empty()) {
      throw Error("gate type '" + name_ + "': sequential outputs must bind to the stored state");
    }
    check_support(ff_->next_state, "next_state");
    check_support(ff_->clock, "clocked_on");
    if (ff_->async_reset) check_support(*ff_->async_reset, "clear");
    if (ff_->async_set) check_support(*ff_->async_set, "preset");
    for (const auto& p : pins_) {
      if (p.direction == PinDirection::output && !ff_->output_binding.contains(p.name)) {
        throw Error("gate type '" + name_ + "': output pin '" + p.name + "' has no state binding");
      }
    }
    for (const auto& [pin, binding] : ff_->output_binding) {
      if (pin_direction(pin) != PinDirection::output) {
        throw Error("gate type '" + name_ + "': state binding on non-output pin '" + pin + "'");
      }
    }
    properties_.insert(GateProperty::sequential);
    return;
  }

  for (const auto& p : pins_) {
    if (p.direction == PinDirection::output && !output_functions_.contains(p.name)) {
      throw Error("gate type '" + name_ + "': output pin '" + p.name + "' has no function");
    }
  }
  bool all_constant = true;
  for (const auto& [pin, f] : output_functions_) {
    if (pin_direction(pin) != PinDirection::output) {
      throw Error("gate type '" + name_ + "': function on non-output pin '" + pin + "'");
    }
    check_support(f, "function of pin '" + pin + "'");
    all_constant = all_constant && f.is_constant();
  }
  properties_.insert(GateProperty::combinational);
  if (all_constant) properties_.insert(GateProperty::constant_source);
  if (inputs.size() == 1 && output_functions_.size() == 1) {
    const auto& f = output_functions_.begin()->second;
    if (f.is_variable() && f.name() == *inputs.begin()) properties_.insert(GateProperty::buffer_like);
  }
}

std::vector<std::string> GateType::input_pins() const {
  std::vector<std::string> out;
  for (const auto& p : pins_) {
    if (p.direction == PinDirection::input) out.push_back(p.name);
  }
  return out;
}

std::vector<std::string> GateType::output_pins() const {
  std::vector<std::string> out;
  for (const auto& p : pins_) {
    if (p.direction == PinDirection::output) out.push_back(p.name);
  }
  return out;
}

std::optional<PinDirection> GateType::pin_direction(std::string_view pin) const {
  for (const auto& p : pins_) {
    if (p.name == pin) return p.direction;
  }
  return std::nullopt;
}

std::vector<std::string> GateType::data_pins() const {
  if (!ff_) return input_pins();
  return ff_->next_state.support();
}

std::vector<std::string> GateType::control_pins() const {
  if (!ff_) return {};
  std::set<std::string> pins;
  for (auto& v : ff_->clock.support()) pins.insert(v);
  if (ff_->async_reset) {
    for (auto& v : ff_->async_reset->support()) pins.insert(v);
  }
  if (ff_->async_set) {
    for (auto& v : ff_->async_set->support()) pins.insert(v);
  }
  return {pins.begin(), pins.end()};
}

// --- GateLibrary ----------------------------------------------------------

GateLibrary::GateLibrary(std::string name, std::vector<GateType> types) : name_(std::move(name)) {
  for (auto& t : types) {
    const std::string type_name = t.name();
    if (!types_.emplace(type_name, std::move(t)).second) {
      throw Error("library '" + name_ + "': duplicate gate type '" + type_name + "'");
    }
  }
}

const GateType* GateLibrary::lookup(std::string_view name) const {
  auto it = types_.find(name);
  return it == types_.end() ? nullptr : &it->second;
}

GateLibrary GateLibrary::extended(std::vector<GateType> extra) const {
  std::vector<GateType> all;
  for (const auto& [_, t] : types_) all.push_back(t);
  for (auto& t : extra) all.push_back(std::move(t));
  return GateLibrary(name_, std::move(all));
}

const GateType* GateLibrary::find_with_property(GateProperty p) const {
  for (const auto& [_, t] : types_) {
    if (t.has_property(p)) return &t;
  }
  return nullptr;
}

// --- liberty tokenizer and generic group tree ------------------------------

namespace {

enum class Tok { ident, string, lparen, rparen, lbrace, rbrace, colon, semicolon, comma, eof };

struct Token {
  Tok kind = Tok::eof;
  std::string text;
  SourceLocation loc;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  Token next() {
    skip();
    Token t;
    t.loc = here();
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    auto single = [&](Tok k) {
      advance();
      t.kind = k;
      t.text = std::string(1, c);
      return t;
    };
    switch (c) {
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case '{': return single(Tok::lbrace);
      case '}': return single(Tok::rbrace);
      case ':': return single(Tok::colon);
      case ';': return single(Tok::semicolon);
      case ',': return single(Tok::comma);
      case '"': {
        advance();
        t.kind = Tok::string;
        while (pos_ < text_.size() && text_[pos_] != '"') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') {
            advance();
            advance();
            continue;
          }
          t.text += text_[pos_];
          advance();
        }
        if (pos_ >= text_.size()) throw ParseError(t.loc, "unterminated string");
        advance();
        return t;
      }
      default:
        break;
    }
    if (is_word_char(c)) {
      t.kind = Tok::ident;
      while (pos_ < text_.size() && is_word_char(text_[pos_])) {
        t.text += text_[pos_];
        advance();
      }
      return t;
    }
    throw ParseError(t.loc, std::string("unexpected character '") + c + "'");
  }

  [[nodiscard]] SourceLocation here() const { return SourceLocation{source_, line_, col_}; }

 private:
  static bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' || c == '+' ||
           c == '!' || c == '[' || c == ']' || c == '\'' || c == '&' || c == '|' || c == '^' || c == '*';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '\\' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '\n' || text_[pos_ + 1] == '\r')) {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        const auto start = here();
        advance();
        advance();
        while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= text_.size()) throw ParseError(start, "unterminated comment");
        advance();
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

struct Attribute {
  std::string name;
  std::vector<std::string> values;
  SourceLocation loc;
};

struct Group {
  std::string type;
  std::vector<std::string> args;
  std::vector<Attribute> attributes;
  std::vector<Group> groups;
  SourceLocation loc;
};

class GroupParser {
 public:
  GroupParser(std::string_view text, std::string source) : lexer_(text, std::move(source)) { shift(); }

  Group parse_top() {
    if (tok_.kind != Tok::ident) fail("expected 'library' group");
    Group g = parse_statement_group();
    if (tok_.kind != Tok::eof) fail("unexpected content after library group");
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(tok_.loc, msg); }

  void shift() { tok_ = lexer_.next(); }

  void expect(Tok k, const char* what) {
    if (tok_.kind != k) fail(std::string("expected ") + what);
    shift();
  }

  Group parse_statement_group() {
    Group g;
    g.loc = tok_.loc;
    g.type = tok_.text;
    shift();
    expect(Tok::lparen, "'('");
    g.args = parse_args();
    if (tok_.kind != Tok::lbrace) fail("expected '{' after group header '" + g.type + "'");
    shift();
    parse_body(g);
    return g;
  }

  std::vector<std::string> parse_args() {
    std::vector<std::string> args;
    while (tok_.kind != Tok::rparen) {
      if (tok_.kind == Tok::ident || tok_.kind == Tok::string) {
        args.push_back(tok_.text);
        shift();
      } else if (tok_.kind == Tok::comma) {
        shift();
      } else {
        fail("unexpected token in argument list");
      }
    }
    shift();
    return args;
  }

  void parse_body(Group& g) {
    while (tok_.kind != Tok::rbrace) {
      if (tok_.kind == Tok::eof) fail("unexpected end of input inside group '" + g.type + "'");
      if (tok_.kind != Tok::ident) fail("expected attribute or group name");
      const Token name = tok_;
      shift();
      if (tok_.kind == Tok::colon) {
        shift();
        Attribute a{name.text, {}, name.loc};
        while (tok_.kind == Tok::ident || tok_.kind == Tok::string) {
          a.values.push_back(tok_.text);
          shift();
        }
        if (a.values.empty()) fail("expected value for attribute '" + name.text + "'");
        if (tok_.kind == Tok::semicolon) shift();
        g.attributes.push_back(std::move(a));
      } else if (tok_.kind == Tok::lparen) {
        shift();
        auto args = parse_args();
        if (tok_.kind == Tok::lbrace) {
          shift();
          Group child;
          child.type = name.text;
          child.args = std::move(args);
          child.loc = name.loc;
          parse_body(child);
          g.groups.push_back(std::move(child));
        } else {
          if (tok_.kind == Tok::semicolon) shift();
          g.attributes.push_back(Attribute{name.text, std::move(args), name.loc});
        }
      } else {
        fail("expected ':' or '(' after '" + name.text + "'");
      }
    }
    shift();
  }

  Lexer lexer_;
  Token tok_;
};

// --- interpretation of the subset ------------------------------------------

class LibraryBuilder {
 public:
  explicit LibraryBuilder(std::vector<Diagnostic>* warnings) : warnings_(warnings) {}

  GateLibrary build(const Group& lib) {
    if (lib.type != "library") throw ParseError(lib.loc, "top-level group must be 'library', found '" + lib.type + "'");
    if (lib.args.size() != 1) throw ParseError(lib.loc, "library group takes exactly one name");
    std::vector<GateType> types;
    std::set<std::string> names;
    for (const auto& a : lib.attributes) warn(a.loc, "ignored library attribute '" + a.name + "'");
    for (const auto& g : lib.groups) {
      if (g.type != "cell") {
        warn(g.loc, "ignored library group '" + g.type + "'");
        continue;
      }
      if (g.args.size() != 1) throw ParseError(g.loc, "cell group takes exactly one name");
      if (!names.insert(g.args[0]).second) throw ParseError(g.loc, "duplicate cell '" + g.args[0] + "'");
      types.push_back(build_cell(g));
    }
    return GateLibrary(lib.args[0], std::move(types));
  }

 private:
  void warn(const SourceLocation& loc, std::string msg) {
    if (warnings_) warnings_->push_back(Diagnostic{loc, std::move(msg)});
  }

  static BooleanFunction parse_function(const Attribute& a) {
    if (a.values.size() != 1) throw ParseError(a.loc, "attribute '" + a.name + "' expects one expression");
    try {
      return BooleanFunction::parse(a.values[0], a.loc.file);
    } catch (const ParseError& e) {
      throw ParseError(a.loc, "in '" + a.name + "': " + e.detail());
    }
  }

  GateType build_cell(const Group& cell) {
    const std::string& name = cell.args[0];
    std::vector<Pin> pins;
    std::map<std::string, std::pair<BooleanFunction, SourceLocation>> functions;
    std::optional<FlipFlopSpec> ff;
    SourceLocation ff_loc;

    for (const auto& a : cell.attributes) warn(a.loc, "ignored cell attribute '" + a.name + "'");
    for (const auto& g : cell.groups) {
      if (g.type == "pin") {
        if (g.args.empty()) throw ParseError(g.loc, "pin group needs a name");
        std::optional<PinDirection> dir;
        std::optional<std::pair<BooleanFunction, SourceLocation>> fn;
        for (const auto& a : g.attributes) {
          if (a.name == "direction") {
            const std::string& d = a.values.at(0);
            if (d == "input") {
              dir = PinDirection::input;
            } else if (d == "output") {
              dir = PinDirection::output;
            } else {
              throw ParseError(a.loc, "unsupported pin direction '" + d + "' (only input and output)");
            }
          } else if (a.name == "function") {
            fn.emplace(parse_function(a), a.loc);
          } else if (a.name == "three_state") {
            throw ParseError(a.loc, "tri-state pins are not supported");
          } else {
            warn(a.loc, "ignored pin attribute '" + a.name + "'");
          }
        }
        for (const auto& sub : g.groups) warn(sub.loc, "ignored pin group '" + sub.type + "'");
        if (!dir) throw ParseError(g.loc, "pin '" + g.args[0] + "' has no direction");
        for (const auto& pin_name : g.args) {
          for (const auto& p : pins) {
            if (p.name == pin_name) throw ParseError(g.loc, "duplicate pin '" + pin_name + "' in cell '" + name + "'");
          }
          pins.push_back(Pin{pin_name, *dir});
          if (fn) {
            if (*dir != PinDirection::output) throw ParseError(fn->second, "function on input pin '" + pin_name + "'");
            functions.emplace(pin_name, *fn);
          }
        }
      } else if (g.type == "ff") {
        if (ff) throw ParseError(g.loc, "cell '" + name + "' has more than one ff group");
        if (g.args.size() != 2) throw ParseError(g.loc, "ff group takes two state variable names");
        ff_loc = g.loc;
        FlipFlopSpec spec;
        spec.state_var = g.args[0];
        spec.negated_state_var = g.args[1];
        bool have_next = false;
        bool have_clock = false;
        for (const auto& a : g.attributes) {
          if (a.name == "next_state") {
            spec.next_state = parse_function(a);
            have_next = true;
          } else if (a.name == "clocked_on") {
            spec.clock = parse_function(a);
            have_clock = true;
          } else if (a.name == "clear") {
            spec.async_reset = parse_function(a);
          } else if (a.name == "preset") {
            spec.async_set = parse_function(a);
          } else {
            warn(a.loc, "ignored ff attribute '" + a.name + "'");
          }
        }
        if (!have_next) throw ParseError(g.loc, "ff group lacks next_state");
        if (!have_clock) throw ParseError(g.loc, "ff group lacks clocked_on");
        ff = std::move(spec);
      } else if (g.type == "latch") {
        throw ParseError(g.loc, "latch groups are not supported (level-sensitive storage)");
      } else if (g.type == "bus" || g.type == "bundle") {
        throw ParseError(g.loc, "multi-bit " + g.type + " pins are not supported");
      } else if (g.type == "statetable") {
        throw ParseError(g.loc, "statetable groups are not supported");
      } else {
        warn(g.loc, "ignored cell group '" + g.type + "'");
      }
    }

    std::set<std::string> input_names;
    for (const auto& p : pins) {
      if (p.direction == PinDirection::input) input_names.insert(p.name);
    }
    auto check = [&](const BooleanFunction& f, const SourceLocation& loc) {
      for (const auto& v : f.support()) {
        if (!input_names.contains(v)) {
          throw ParseError(loc, "cell '" + name + "': function references undeclared pin '" + v + "'");
        }
      }
    };

    std::map<std::string, BooleanFunction> outputs;
    if (ff) {
      for (const auto& [pin, fn] : functions) {
        const auto& f = fn.first;
        std::optional<StateBinding> b;
        if (f.is_variable() && f.name() == ff->state_var) b = StateBinding::state;
        if (f.is_variable() && f.name() == ff->negated_state_var) b = StateBinding::negated_state;
        if (f.kind() == BooleanFunction::Kind::op_not && f.operands()[0].is_variable()) {
          const auto& inner = f.operands()[0].name();
          if (inner == ff->state_var) b = StateBinding::negated_state;
          if (inner == ff->negated_state_var) b = StateBinding::state;
        }
        if (!b) {
          throw ParseError(fn.second, "cell '" + name + "': output '" + pin + "' must be " + ff->state_var + " or " +
                                          ff->negated_state_var);
        }
        ff->output_binding.emplace(pin, *b);
      }
      check(ff->next_state, ff_loc);
      check(ff->clock, ff_loc);
      if (ff->async_reset) check(*ff->async_reset, ff_loc);
      if (ff->async_set) check(*ff->async_set, ff_loc);
    } else {
      for (const auto& [pin, fn] : functions) {
        check(fn.first, fn.second);
        outputs.emplace(pin, fn.first);
      }
    }
    bool has_output = false;
    for (const auto& p : pins) {
      if (p.direction != PinDirection::output) continue;
      has_output = true;
      if (!functions.contains(p.name)) throw ParseError(cell.loc, "cell '" + name + "': output pin '" + p.name + "' has no function");
    }
    if (!has_output) throw ParseError(cell.loc, "cell '" + name + "' has no output pins");
    try {
      return GateType(name, std::move(pins), std::move(outputs), std::move(ff));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(cell.loc, e.what());
    }
  }

  std::vector<Diagnostic>* warnings_;
};

std::string quote(const BooleanFunction& f) { return "\"" + f.to_string() + "\""; }

}  // namespace

GateLibrary parse_liberty(std::string_view text, std::string_view source_name, std::vector<Diagnostic>* warnings) {
  GroupParser parser(text, std::string(source_name));
  const Group top = parser.parse_top();
  return LibraryBuilder(warnings).build(top);
}

std::string to_liberty(const GateLibrary& library) {
  std::ostringstream os;
  os << "library(" << library.name() << ") {\n";
  for (const auto& [name, t] : library.types()) {
    os << "  cell(" << name << ") {\n";
    for (const auto& p : t.pins()) {
      os << "    pin(" << p.name << ") {\n";
      os << "      direction : " << (p.direction == PinDirection::input ? "input" : "output") << ";\n";
      if (p.direction == PinDirection::output) {
        if (t.ff()) {
          const auto b = t.ff()->output_binding.at(p.name);
          os << "      function : \"" << (b == StateBinding::state ? t.ff()->state_var : t.ff()->negated_state_var)
             << "\";\n";
        } else {
          os << "      function : " << quote(t.output_functions().at(p.name)) << ";\n";
        }
      }
      os << "    }\n";
    }
    if (const auto& ff = t.ff()) {
      os << "    ff(" << ff->state_var << ", " << ff->negated_state_var << ") {\n";
      os << "      next_state : " << quote(ff->next_state) << ";\n";
      os << "      clocked_on : " << quote(ff->clock) << ";\n";
      if (ff->async_reset) os << "      clear : " << quote(*ff->async_reset) << ";\n";
      if (ff->async_set) os << "      preset : " << quote(*ff->async_set) << ";\n";
      os << "    }\n";
    }
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace gatescope
