#include "gatescope/boolean_function.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "boolean_internal.hpp"

namespace gatescope {

namespace {

using Kind = BooleanFunction::Kind;

constexpr std::size_t fnv_offset = 1469598103934665603ULL;
constexpr std::size_t fnv_prime = 1099511628211ULL;

std::size_t mix(std::size_t h, std::size_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFFU;
    h *= fnv_prime;
  }
  return h;
}

std::size_t hash_string(std::string_view s) {
  std::size_t h = fnv_offset;
  for (unsigned char c : s) {
    h ^= c;
    h *= fnv_prime;
  }
  return h;
}

int kind_rank(Kind k) {
  switch (k) {
    case Kind::constant: return 0;
    case Kind::variable: return 1;
    case Kind::op_and: return 2;
    case Kind::op_or: return 3;
    case Kind::op_xor: return 4;
    case Kind::op_not: return 5;
  }
  return 6;
}

}  // namespace

namespace detail {

std::vector<BooleanFunction> post_order(std::span<const BooleanFunction> roots) {
  std::vector<BooleanFunction> order;
  std::unordered_set<const BooleanFunction::Node*> done;
  std::vector<std::pair<BooleanFunction, std::size_t>> stack;
  for (const auto& root : roots) {
    if (done.contains(root.node())) continue;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [f, next] = stack.back();
      auto ops = f.operands();
      if (next < ops.size()) {
        const BooleanFunction child = ops[next++];
        if (!done.contains(child.node())) stack.emplace_back(child, 0);
        continue;
      }
      if (done.insert(f.node()).second) order.push_back(f);
      stack.pop_back();
    }
  }
  return order;
}

bool structurally_equal(const BooleanFunction& a, const BooleanFunction& b) {
  if (a.node() == b.node()) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
  std::set<std::pair<const void*, const void*>> proven;
  std::vector<std::pair<BooleanFunction, BooleanFunction>> work{{a, b}};
  while (!work.empty()) {
    auto [x, y] = work.back();
    work.pop_back();
    if (x.node() == y.node()) continue;
    if (!proven.insert({x.node(), y.node()}).second) continue;
    if (x.hash() != y.hash() || x.kind() != y.kind()) return false;
    switch (x.kind()) {
      case Kind::constant:
        if (x.constant_value() != y.constant_value()) return false;
        break;
      case Kind::variable:
        if (x.name() != y.name()) return false;
        break;
      default: {
        auto xs = x.operands();
        auto ys = y.operands();
        if (xs.size() != ys.size()) return false;
        for (std::size_t i = 0; i < xs.size(); ++i) work.emplace_back(xs[i], ys[i]);
      }
    }
  }
  return true;
}

int compare(const BooleanFunction& a, const BooleanFunction& b) {
  const bool neg_a = a.kind() == Kind::op_not;
  const bool neg_b = b.kind() == Kind::op_not;
  const BooleanFunction& base_a = neg_a ? a.operands()[0] : a;
  const BooleanFunction& base_b = neg_b ? b.operands()[0] : b;
  if (base_a.node() != base_b.node()) {
    const int ra = kind_rank(base_a.kind());
    const int rb = kind_rank(base_b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (base_a.kind()) {
      case Kind::constant:
        if (base_a.constant_value() != base_b.constant_value()) return base_a.constant_value() ? 1 : -1;
        break;
      case Kind::variable:
        if (int c = base_a.name().compare(base_b.name()); c != 0) return c < 0 ? -1 : 1;
        break;
      default: {
        if (base_a.hash() != base_b.hash()) return base_a.hash() < base_b.hash() ? -1 : 1;
        auto xs = base_a.operands();
        auto ys = base_b.operands();
        if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (int c = compare(xs[i], ys[i]); c != 0) return c;
        }
      }
    }
  }
  if (neg_a != neg_b) return neg_a ? 1 : -1;
  return 0;
}

}  // namespace detail

// --- construction ---------------------------------------------------------

BooleanFunction::BooleanFunction() : BooleanFunction(constant(false)) {}

BooleanFunction BooleanFunction::constant(bool value) {
  static const BooleanFunction zero = [] {
    Node n;
    n.kind = Kind::constant;
    n.value = false;
    n.hash = mix(fnv_offset, 0);
    return BooleanFunction(std::make_shared<const Node>(std::move(n)));
  }();
  static const BooleanFunction one = [] {
    Node n;
    n.kind = Kind::constant;
    n.value = true;
    n.hash = mix(fnv_offset, 1);
    return BooleanFunction(std::make_shared<const Node>(std::move(n)));
  }();
  return value ? one : zero;
}

BooleanFunction BooleanFunction::variable(std::string name) {
  if (name.empty()) throw Error("variable name must not be empty");
  Node n;
  n.kind = Kind::variable;
  n.hash = mix(hash_string(name), 2);
  n.name = std::move(name);
  return BooleanFunction(std::make_shared<const Node>(std::move(n)));
}

BooleanFunction BooleanFunction::make_not(BooleanFunction operand) {
  Node n;
  n.kind = Kind::op_not;
  n.hash = mix(mix(fnv_offset, 3), operand.hash());
  n.children.push_back(std::move(operand));
  return BooleanFunction(std::make_shared<const Node>(std::move(n)));
}

BooleanFunction BooleanFunction::make(Kind kind, std::vector<BooleanFunction> operands) {
  switch (kind) {
    case Kind::op_and:
    case Kind::op_or:
    case Kind::op_xor:
      break;
    case Kind::op_not:
      if (operands.size() != 1) throw Error("NOT takes exactly one operand");
      return make_not(std::move(operands[0]));
    default:
      throw Error("make() requires an operator kind");
  }
  if (operands.empty()) return constant(kind == Kind::op_and);
  if (operands.size() == 1) return std::move(operands[0]);
  Node n;
  n.kind = kind;
  std::size_t h = mix(fnv_offset, 4 + static_cast<std::size_t>(kind));
  for (const auto& op : operands) h = mix(h, op.hash());
  n.hash = h;
  n.children = std::move(operands);
  return BooleanFunction(std::make_shared<const Node>(std::move(n)));
}

BooleanFunction BooleanFunction::make_and(std::vector<BooleanFunction> operands) {
  return make(Kind::op_and, std::move(operands));
}
BooleanFunction BooleanFunction::make_or(std::vector<BooleanFunction> operands) {
  return make(Kind::op_or, std::move(operands));
}
BooleanFunction BooleanFunction::make_xor(std::vector<BooleanFunction> operands) {
  return make(Kind::op_xor, std::move(operands));
}

bool operator==(const BooleanFunction& a, const BooleanFunction& b) {
  return detail::structurally_equal(a, b);
}

std::size_t BooleanFunction::node_count() const {
  const BooleanFunction self = *this;
  return detail::post_order(std::span(&self, 1)).size();
}

std::vector<std::string> BooleanFunction::support() const {
  const BooleanFunction self = *this;
  std::set<std::string> names;
  for (const auto& f : detail::post_order(std::span(&self, 1))) {
    if (f.is_variable()) names.insert(f.name());
  }
  return {names.begin(), names.end()};
}

// --- rendering and parsing ------------------------------------------------

namespace {

bool is_atomic(const BooleanFunction& f) {
  return f.kind() == Kind::constant || f.kind() == Kind::variable ||
         (f.kind() == Kind::op_not && is_atomic(f.operands()[0]));
}

void render(const BooleanFunction& f, std::string& out) {
  switch (f.kind()) {
    case Kind::constant:
      out += f.constant_value() ? '1' : '0';
      return;
    case Kind::variable:
      out += f.name();
      return;
    case Kind::op_not: {
      const auto& child = f.operands()[0];
      out += '!';
      if (is_atomic(child)) {
        render(child, out);
      } else {
        out += '(';
        render(child, out);
        out += ')';
      }
      return;
    }
    default: {
      const char* sep = f.kind() == Kind::op_and ? " & " : f.kind() == Kind::op_or ? " | " : " ^ ";
      bool first = true;
      for (const auto& child : f.operands()) {
        if (!first) out += sep;
        first = false;
        if (is_atomic(child)) {
          render(child, out);
        } else {
          out += '(';
          render(child, out);
          out += ')';
        }
      }
    }
  }
}

bool is_identifier_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\';
}

bool is_identifier_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '[' || c == ']' || c == '@' ||
         c == '.' || c == '$';
}

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  BooleanFunction parse() {
    auto f = parse_or();
    skip_space();
    if (pos_ < text_.size()) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(SourceLocation{std::string(source_), 1, pos_ + 1}, msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool at_factor_start() {
    skip_space();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return c == '(' || c == '!' || c == '0' || c == '1' || is_identifier_start(c);
  }

  BooleanFunction parse_or() {
    std::vector<BooleanFunction> ops{parse_xor()};
    while (accept('|') || accept('+')) ops.push_back(parse_xor());
    return BooleanFunction::make_or(std::move(ops));
  }

  BooleanFunction parse_xor() {
    std::vector<BooleanFunction> ops{parse_and()};
    while (accept('^')) ops.push_back(parse_and());
    return BooleanFunction::make_xor(std::move(ops));
  }

  BooleanFunction parse_and() {
    std::vector<BooleanFunction> ops{parse_unary()};
    while (true) {
      if (accept('&') || accept('*')) {
        ops.push_back(parse_unary());
      } else if (at_factor_start()) {
        ops.push_back(parse_unary());
      } else {
        break;
      }
    }
    return BooleanFunction::make_and(std::move(ops));
  }

  BooleanFunction parse_unary() {
    if (accept('!')) return BooleanFunction::make_not(parse_unary());
    auto f = parse_primary();
    while (accept('\'')) f = BooleanFunction::make_not(f);
    return f;
  }

  BooleanFunction parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto f = parse_or();
      if (!accept(')')) fail("expected ')'");
      return f;
    }
    if (c == '0' || c == '1') {
      ++pos_;
      if (pos_ < text_.size() && is_identifier_char(text_[pos_])) fail("identifiers must not start with a digit");
      return BooleanFunction::constant(c == '1');
    }
    if (is_identifier_start(c)) {
      const std::size_t start = pos_;
      if (c == '\\') {
        // escaped identifier runs to the next whitespace
        ++pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return BooleanFunction::variable(std::string(text_.substr(start + 1, pos_ - start - 1)));
      }
      while (pos_ < text_.size() && is_identifier_char(text_[pos_])) ++pos_;
      return BooleanFunction::variable(std::string(text_.substr(start, pos_ - start)));
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string BooleanFunction::to_string() const {
  std::string out;
  render(*this, out);
  return out;
}

BooleanFunction BooleanFunction::parse(std::string_view text, std::string_view source_name) {
  return ExpressionParser(text, source_name).parse();
}

// --- evaluation -----------------------------------------------------------

bool evaluate(const BooleanFunction& f, const Assignment& assignment) {
  std::unordered_map<const BooleanFunction::Node*, bool> value;
  for (const auto& g : detail::post_order(std::span(&f, 1))) {
    bool v = false;
    switch (g.kind()) {
      case Kind::constant:
        v = g.constant_value();
        break;
      case Kind::variable: {
        auto it = assignment.find(g.name());
        if (it == assignment.end()) throw Error("missing variable '" + g.name() + "' in assignment");
        v = it->second;
        break;
      }
      case Kind::op_not:
        v = !value.at(g.operands()[0].node());
        break;
      case Kind::op_and:
        v = true;
        for (const auto& c : g.operands()) v = v && value.at(c.node());
        break;
      case Kind::op_or:
        for (const auto& c : g.operands()) v = v || value.at(c.node());
        break;
      case Kind::op_xor:
        for (const auto& c : g.operands()) v = v != value.at(c.node());
        break;
    }
    value.emplace(g.node(), v);
  }
  return value.at(f.node());
}

// --- substitution ---------------------------------------------------------

namespace {

template <typename LeafFn>
BooleanFunction rebuild(const BooleanFunction& f, LeafFn&& leaf) {
  std::unordered_map<const BooleanFunction::Node*, BooleanFunction> result;
  for (const auto& g : detail::post_order(std::span(&f, 1))) {
    if (g.kind() == Kind::variable) {
      result.emplace(g.node(), leaf(g));
      continue;
    }
    if (g.kind() == Kind::constant) {
      result.emplace(g.node(), g);
      continue;
    }
    bool changed = false;
    std::vector<BooleanFunction> ops;
    ops.reserve(g.operands().size());
    for (const auto& c : g.operands()) {
      const auto& r = result.at(c.node());
      changed = changed || r.node() != c.node();
      ops.push_back(r);
    }
    result.emplace(g.node(), changed ? BooleanFunction::make(g.kind(), std::move(ops)) : g);
  }
  return result.at(f.node());
}

}  // namespace

BooleanFunction substitute(const BooleanFunction& f, std::string_view var, const BooleanFunction& g) {
  return rebuild(f, [&](const BooleanFunction& v) { return v.name() == var ? g : v; });
}

BooleanFunction substitute(const BooleanFunction& f,
                           const std::map<std::string, BooleanFunction, std::less<>>& replacements) {
  return rebuild(f, [&](const BooleanFunction& v) {
    auto it = replacements.find(v.name());
    return it == replacements.end() ? v : it->second;
  });
}

BooleanFunction rename(const BooleanFunction& f, const std::map<std::string, std::string, std::less<>>& names) {
  std::map<std::string, BooleanFunction, std::less<>> cache;
  return rebuild(f, [&](const BooleanFunction& v) {
    auto it = names.find(v.name());
    if (it == names.end()) return v;
    auto [slot, inserted] = cache.try_emplace(it->second);
    if (inserted) slot->second = BooleanFunction::variable(it->second);
    return slot->second;
  });
}

// --- simplification -------------------------------------------------------

namespace {

class Simplifier {
 public:
  BooleanFunction run(const BooleanFunction& f) {
    for (const auto& g : detail::post_order(std::span(&f, 1))) {
      if (!memo_.contains(g.node())) memo_.emplace(g.node(), step(g));
    }
    return memo_.at(f.node());
  }

 private:
  const BooleanFunction& done(const BooleanFunction& c) const { return memo_.at(c.node()); }

  BooleanFunction step(const BooleanFunction& g) {
    switch (g.kind()) {
      case Kind::constant:
      case Kind::variable:
        return g;
      case Kind::op_not: {
        const auto& c = done(g.operands()[0]);
        if (c.is_constant()) return BooleanFunction::constant(!c.constant_value());
        if (c.kind() == Kind::op_not) return c.operands()[0];
        if (c.node() == g.operands()[0].node()) return g;
        return BooleanFunction::make_not(c);
      }
      case Kind::op_and:
      case Kind::op_or:
        return and_or(g);
      case Kind::op_xor:
        return exclusive_or(g);
    }
    return g;
  }

  static void sort_unique(std::vector<BooleanFunction>& ops) {
    std::stable_sort(ops.begin(), ops.end(),
                     [](const auto& a, const auto& b) { return detail::compare(a, b) < 0; });
    ops.erase(std::unique(ops.begin(), ops.end(),
                          [](const auto& a, const auto& b) { return detail::compare(a, b) == 0 && a == b; }),
              ops.end());
  }

  static bool complement_of(const BooleanFunction& a, const BooleanFunction& b) {
    if (a.kind() == Kind::op_not && a.operands()[0] == b) return true;
    if (b.kind() == Kind::op_not && b.operands()[0] == a) return true;
    return false;
  }

  BooleanFunction and_or(const BooleanFunction& g) {
    const Kind kind = g.kind();
    const bool neutral = kind == Kind::op_and;  // 1 for AND, 0 for OR
    std::vector<BooleanFunction> ops;
    for (const auto& c0 : g.operands()) {
      const auto& c = done(c0);
      if (c.is_constant()) {
        if (c.constant_value() == neutral) continue;
        return BooleanFunction::constant(!neutral);
      }
      if (c.kind() == kind) {
        for (const auto& cc : c.operands()) ops.push_back(cc);
      } else {
        ops.push_back(c);
      }
    }
    sort_unique(ops);
    for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
      if (complement_of(ops[i], ops[i + 1])) return BooleanFunction::constant(!neutral);
    }
    // Absorption: x & (x | y) = x and x | (x & y) = x.
    const Kind dual = kind == Kind::op_and ? Kind::op_or : Kind::op_and;
    std::vector<bool> drop(ops.size(), false);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (ops[i].kind() != dual) continue;
      for (std::size_t j = 0; j < ops.size() && !drop[i]; ++j) {
        if (i == j || drop[j]) continue;
        for (const auto& inner : ops[i].operands()) {
          if (inner == ops[j]) {
            drop[i] = true;
            break;
          }
        }
      }
    }
    std::vector<BooleanFunction> kept;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (!drop[i]) kept.push_back(ops[i]);
    }
    if (kept.empty()) return BooleanFunction::constant(neutral);
    if (kept.size() == 1) return kept[0];
    return reuse_or_make(g, kind, std::move(kept));
  }

  BooleanFunction exclusive_or(const BooleanFunction& g) {
    bool parity = false;
    std::vector<BooleanFunction> ops;
    auto add = [&](const BooleanFunction& c) {
      if (c.is_constant()) {
        parity ^= c.constant_value();
      } else if (c.kind() == Kind::op_not) {
        parity = !parity;
        ops.push_back(c.operands()[0]);
      } else {
        ops.push_back(c);
      }
    };
    for (const auto& c0 : g.operands()) {
      const auto& c = done(c0);
      if (c.kind() == Kind::op_xor) {
        for (const auto& cc : c.operands()) add(cc);
      } else {
        add(c);
      }
    }
    std::stable_sort(ops.begin(), ops.end(),
                     [](const auto& a, const auto& b) { return detail::compare(a, b) < 0; });
    // x ^ x = 0: cancel equal neighbours pairwise.
    std::vector<BooleanFunction> kept;
    for (auto& op : ops) {
      if (!kept.empty() && detail::compare(kept.back(), op) == 0 && kept.back() == op) {
        kept.pop_back();
      } else {
        kept.push_back(std::move(op));
      }
    }
    BooleanFunction body;
    if (kept.empty()) return BooleanFunction::constant(parity);
    if (kept.size() == 1) {
      body = kept[0];
    } else {
      body = reuse_or_make(g, Kind::op_xor, std::move(kept));
    }
    return parity ? BooleanFunction::make_not(body) : body;
  }

  static BooleanFunction reuse_or_make(const BooleanFunction& g, Kind kind, std::vector<BooleanFunction> ops) {
    auto orig = g.operands();
    if (orig.size() == ops.size() &&
        std::equal(orig.begin(), orig.end(), ops.begin(),
                   [](const auto& a, const auto& b) { return a.node() == b.node(); })) {
      return g;
    }
    return BooleanFunction::make(kind, std::move(ops));
  }

  std::unordered_map<const BooleanFunction::Node*, BooleanFunction> memo_;
};

std::size_t shared_node_count(std::span<const BooleanFunction> fs) { return detail::post_order(fs).size(); }

}  // namespace

std::vector<BooleanFunction> simplify_all(std::span<const BooleanFunction> fs) {
  std::vector<BooleanFunction> current(fs.begin(), fs.end());
  constexpr int max_passes = 16;
  for (int pass = 0; pass < max_passes; ++pass) {
    Simplifier s;
    std::vector<BooleanFunction> next;
    next.reserve(current.size());
    for (const auto& f : current) next.push_back(s.run(f));
    bool same = true;
    for (std::size_t i = 0; i < next.size() && same; ++i) same = next[i].node() == current[i].node() || next[i] == current[i];
    current = std::move(next);
    if (same) break;
  }
  // Node-count guard, applied per entry and for the batch as a whole.
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current[i].node_count() > fs[i].node_count()) current[i] = fs[i];
  }
  if (shared_node_count(current) > shared_node_count(fs)) return {fs.begin(), fs.end()};
  return current;
}

BooleanFunction simplify(const BooleanFunction& f) { return simplify_all(std::span(&f, 1))[0]; }

// --- truth tables ---------------------------------------------------------

TruthTable::TruthTable(std::vector<std::string> variables, std::vector<std::uint64_t> words)
    : variables_(std::move(variables)), words_(std::move(words)) {
  const std::size_t expected = std::max<std::size_t>(1, rows() / 64);
  if (words_.size() != expected) throw Error("truth table word count does not match variable count");
  if (rows() < 64) words_[0] &= (std::uint64_t{1} << rows()) - 1;
}

std::vector<bool> TruthTable::bits() const {
  std::vector<bool> out(rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = bit(r);
  return out;
}

CompiledFunctions::CompiledFunctions(std::span<const BooleanFunction> roots,
                                     const std::vector<std::string>& variables)
    : variable_count_(variables.size()) {
  std::unordered_map<std::string_view, std::uint32_t> var_index;
  for (std::uint32_t i = 0; i < variables.size(); ++i) var_index.emplace(variables[i], i);
  std::unordered_map<const BooleanFunction::Node*, std::uint32_t> slot;
  for (const auto& g : detail::post_order(roots)) {
    Op op{g.kind()};
    switch (g.kind()) {
      case Kind::constant:
        op.arg = g.constant_value() ? 1 : 0;
        break;
      case Kind::variable: {
        auto it = var_index.find(g.name());
        if (it == var_index.end()) throw Error("variable '" + g.name() + "' missing from variable order");
        op.arg = it->second;
        break;
      }
      default:
        op.arg = static_cast<std::uint32_t>(operand_slots_.size());
        op.count = static_cast<std::uint32_t>(g.operands().size());
        for (const auto& c : g.operands()) operand_slots_.push_back(slot.at(c.node()));
    }
    slot.emplace(g.node(), static_cast<std::uint32_t>(ops_.size()));
    ops_.push_back(op);
  }
  for (const auto& r : roots) roots_.push_back(slot.at(r.node()));
}

void CompiledFunctions::run(std::span<const std::uint64_t> inputs, std::span<std::uint64_t> outputs,
                            std::vector<std::uint64_t>& scratch) const {
  scratch.resize(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    std::uint64_t v = 0;
    switch (op.kind) {
      case Kind::constant:
        v = op.arg ? ~std::uint64_t{0} : 0;
        break;
      case Kind::variable:
        v = inputs[op.arg];
        break;
      case Kind::op_not:
        v = ~scratch[operand_slots_[op.arg]];
        break;
      case Kind::op_and:
        v = ~std::uint64_t{0};
        for (std::uint32_t k = 0; k < op.count; ++k) v &= scratch[operand_slots_[op.arg + k]];
        break;
      case Kind::op_or:
        for (std::uint32_t k = 0; k < op.count; ++k) v |= scratch[operand_slots_[op.arg + k]];
        break;
      case Kind::op_xor:
        for (std::uint32_t k = 0; k < op.count; ++k) v ^= scratch[operand_slots_[op.arg + k]];
        break;
    }
    scratch[i] = v;
  }
  for (std::size_t r = 0; r < roots_.size(); ++r) outputs[r] = scratch[roots_[r]];
}

namespace detail {

std::uint64_t variable_word(std::size_t var, std::size_t word) {
  static constexpr std::uint64_t patterns[6] = {0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL,
                                                0xF0F0F0F0F0F0F0F0ULL, 0xFF00FF00FF00FF00ULL,
                                                0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
  if (var < 6) return patterns[var];
  return ((word >> (var - 6)) & 1U) ? ~std::uint64_t{0} : 0;
}

}  // namespace detail

std::vector<TruthTable> truth_tables(std::span<const BooleanFunction> fs, const std::vector<std::string>& order) {
  if (order.size() > TruthTable::max_variables) {
    throw TooManyVariablesError("truth table over " + std::to_string(order.size()) + " variables exceeds the cap of " +
                                std::to_string(TruthTable::max_variables));
  }
  const CompiledFunctions program(fs, order);
  const std::size_t rows = std::size_t{1} << order.size();
  const std::size_t words = std::max<std::size_t>(1, rows / 64);
  std::vector<std::vector<std::uint64_t>> out(fs.size(), std::vector<std::uint64_t>(words));
  std::vector<std::uint64_t> in(order.size());
  std::vector<std::uint64_t> res(fs.size());
  std::vector<std::uint64_t> scratch;
  for (std::size_t w = 0; w < words; ++w) {
    for (std::size_t v = 0; v < order.size(); ++v) in[v] = detail::variable_word(v, w);
    program.run(in, res, scratch);
    for (std::size_t i = 0; i < fs.size(); ++i) out[i][w] = res[i];
  }
  std::vector<TruthTable> tables;
  tables.reserve(fs.size());
  for (auto& o : out) tables.emplace_back(order, std::move(o));
  return tables;
}

TruthTable truth_table(const BooleanFunction& f, std::optional<std::vector<std::string>> order) {
  std::vector<std::string> vars = order ? std::move(*order) : f.support();
  if (order) {
    std::set<std::string> given(vars.begin(), vars.end());
    if (given.size() != vars.size()) throw Error("variable order contains duplicates");
    for (const auto& v : f.support()) {
      if (!given.contains(v)) throw Error("variable '" + v + "' missing from variable order");
    }
  }
  return std::move(truth_tables(std::span(&f, 1), vars)[0]);
}

}  // namespace gatescope
