#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatescope/errors.hpp"

namespace gatescope {

/// Immutable Boolean expression over named variables.
///
/// Nodes are shared: copying a BooleanFunction is cheap and sub-expressions
/// may be referenced from many parents, so every traversal in this library
/// memoizes on node identity. AND, OR and XOR are n-ary with at least two
/// operands. Construction never simplifies; use simplify() for that.
class BooleanFunction {
 public:
  enum class Kind : std::uint8_t { constant, variable, op_not, op_and, op_or, op_xor };

  struct Node {
    Kind kind = Kind::constant;
    bool value = false;
    std::string name;
    std::vector<BooleanFunction> children;
    std::size_t hash = 0;
  };

  /// The constant 0.
  BooleanFunction();

  static BooleanFunction constant(bool value);
  static BooleanFunction variable(std::string name);
  static BooleanFunction make_not(BooleanFunction operand);
  /// Zero operands yield the neutral constant, one operand yields itself.
  static BooleanFunction make_and(std::vector<BooleanFunction> operands);
  static BooleanFunction make_or(std::vector<BooleanFunction> operands);
  static BooleanFunction make_xor(std::vector<BooleanFunction> operands);
  static BooleanFunction make(Kind kind, std::vector<BooleanFunction> operands);

  /// Parses the infix form: `!`/`'` not, `&`/`*`/juxtaposition and, `^` xor,
  /// `|`/`+` or, parentheses, constants `0`/`1`. Precedence from tightest:
  /// not, and, xor, or.
  static BooleanFunction parse(std::string_view text, std::string_view source_name = "<expr>");

  [[nodiscard]] Kind kind() const { return node_->kind; }
  [[nodiscard]] bool is_constant() const { return node_->kind == Kind::constant; }
  [[nodiscard]] bool is_constant(bool v) const { return is_constant() && node_->value == v; }
  [[nodiscard]] bool is_variable() const { return node_->kind == Kind::variable; }
  [[nodiscard]] bool constant_value() const { return node_->value; }
  [[nodiscard]] const std::string& name() const { return node_->name; }
  [[nodiscard]] std::span<const BooleanFunction> operands() const { return node_->children; }
  [[nodiscard]] std::size_t hash() const { return node_->hash; }
  [[nodiscard]] const Node* node() const { return node_.get(); }

  /// Number of distinct nodes reachable from the root.
  [[nodiscard]] std::size_t node_count() const;
  /// Sorted, duplicate-free variable names.
  [[nodiscard]] std::vector<std::string> support() const;
  [[nodiscard]] std::string to_string() const;

  /// Structural equality (same tree shape, same names, same operand order).
  friend bool operator==(const BooleanFunction& a, const BooleanFunction& b);

  friend BooleanFunction operator!(const BooleanFunction& a) { return make_not(a); }
  friend BooleanFunction operator&(const BooleanFunction& a, const BooleanFunction& b) {
    return make_and({a, b});
  }
  friend BooleanFunction operator|(const BooleanFunction& a, const BooleanFunction& b) {
    return make_or({a, b});
  }
  friend BooleanFunction operator^(const BooleanFunction& a, const BooleanFunction& b) {
    return make_xor({a, b});
  }

 private:
  explicit BooleanFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

using Assignment = std::map<std::string, bool, std::less<>>;

/// Throws Error when a variable of `f` is missing from `assignment`.
bool evaluate(const BooleanFunction& f, const Assignment& assignment);

/// Rule-based rewriting to a fixpoint: constant folding, double negation,
/// flattening, idempotence, complementation, absorption and XOR cancellation.
/// The result is equivalent to the input and never has more nodes.
BooleanFunction simplify(const BooleanFunction& f);
/// Simplifies a batch while preserving sub-expressions shared between entries.
std::vector<BooleanFunction> simplify_all(std::span<const BooleanFunction> fs);

BooleanFunction substitute(const BooleanFunction& f, std::string_view var, const BooleanFunction& g);
/// Parallel substitution: every occurrence of a key is replaced at once.
BooleanFunction substitute(const BooleanFunction& f,
                           const std::map<std::string, BooleanFunction, std::less<>>& replacements);
BooleanFunction rename(const BooleanFunction& f,
                       const std::map<std::string, std::string, std::less<>>& names);

class TooManyVariablesError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive table of a function. Row r assigns variable i the value of
/// bit i of r, so variable[0] is the least significant index bit.
class TruthTable {
 public:
  static constexpr std::size_t max_variables = 20;

  TruthTable() = default;
  TruthTable(std::vector<std::string> variables, std::vector<std::uint64_t> words);

  [[nodiscard]] const std::vector<std::string>& variables() const { return variables_; }
  [[nodiscard]] std::size_t rows() const { return std::size_t{1} << variables_.size(); }
  [[nodiscard]] bool bit(std::size_t row) const { return (words_[row >> 6] >> (row & 63)) & 1U; }
  [[nodiscard]] const std::vector<std::uint64_t>& words() const { return words_; }
  [[nodiscard]] std::vector<bool> bits() const;

  friend bool operator==(const TruthTable&, const TruthTable&) = default;

 private:
  std::vector<std::string> variables_;
  std::vector<std::uint64_t> words_;
};

/// Variable order defaults to sorted names. Throws TooManyVariablesError
/// beyond TruthTable::max_variables and Error when `order` misses a variable.
TruthTable truth_table(const BooleanFunction& f,
                       std::optional<std::vector<std::string>> order = std::nullopt);
/// Tables for several functions over one shared variable order.
std::vector<TruthTable> truth_tables(std::span<const BooleanFunction> fs,
                                     const std::vector<std::string>& order);

/// Straight-line, bit-parallel form of a set of functions: each run evaluates
/// 64 assignments at once, one per bit of the input words.
class CompiledFunctions {
 public:
  CompiledFunctions(std::span<const BooleanFunction> roots, const std::vector<std::string>& variables);

  [[nodiscard]] std::size_t variable_count() const { return variable_count_; }
  [[nodiscard]] std::size_t root_count() const { return roots_.size(); }

  /// `inputs[i]` holds 64 values of variable i; writes one word per root.
  /// `scratch` is caller-owned working storage, reused across runs.
  void run(std::span<const std::uint64_t> inputs, std::span<std::uint64_t> outputs,
           std::vector<std::uint64_t>& scratch) const;

 private:
  struct Op {
    BooleanFunction::Kind kind;
    std::uint32_t arg = 0;  // variable index, or first operand slot
    std::uint32_t count = 0;
  };
  std::size_t variable_count_ = 0;
  std::vector<Op> ops_;
  std::vector<std::uint32_t> operand_slots_;
  std::vector<std::uint32_t> roots_;
};

}  // namespace gatescope
