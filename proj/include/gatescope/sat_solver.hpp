#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gatescope {

/// Literal encoding: 2*var for the positive literal, 2*var+1 for its negation.
struct Literal {
  std::uint32_t code = 0;

  static Literal positive(std::uint32_t var) { return Literal{var << 1}; }
  static Literal negative(std::uint32_t var) { return Literal{(var << 1) | 1U}; }

  [[nodiscard]] std::uint32_t var() const { return code >> 1; }
  [[nodiscard]] bool negated() const { return code & 1U; }
  Literal operator~() const { return Literal{code ^ 1U}; }
  friend bool operator==(Literal, Literal) = default;
};

enum class SatResult { satisfiable, unsatisfiable, budget_exhausted };

/// Conflict-driven clause-learning solver: two watched literals, first-UIP
/// learning, activity-based branching with phase saving and Luby restarts.
class SatSolver {
 public:
  std::uint32_t new_variable();
  [[nodiscard]] std::uint32_t variable_count() const { return static_cast<std::uint32_t>(assigns_.size()); }

  void add_clause(std::span<const Literal> clause);
  void add_clause(std::initializer_list<Literal> clause) {
    add_clause(std::span<const Literal>(clause.begin(), clause.size()));
  }

  /// Stops with budget_exhausted after `conflict_budget` conflicts.
  SatResult solve(std::uint64_t conflict_budget);

  /// Model value after a satisfiable result.
  [[nodiscard]] bool model_value(std::uint32_t var) const { return model_[var]; }
  [[nodiscard]] std::uint64_t conflicts() const { return conflicts_; }

 private:
  static constexpr std::int8_t undef = -1;
  static constexpr std::uint32_t no_reason = UINT32_MAX;

  [[nodiscard]] std::int8_t value(Literal l) const {
    const std::int8_t v = assigns_[l.var()];
    return v == undef ? undef : static_cast<std::int8_t>(v ^ static_cast<std::int8_t>(l.negated()));
  }
  void assign(Literal l, std::uint32_t reason);
  std::uint32_t propagate();
  void analyze(std::uint32_t conflict, std::vector<Literal>& learnt, std::uint32_t& backtrack_level);
  void backtrack(std::uint32_t level);
  void bump(std::uint32_t var);
  std::uint32_t attach(std::vector<Literal> clause);

  void heap_insert(std::uint32_t var);
  std::uint32_t heap_pop();
  void heap_up(std::size_t pos);
  void heap_down(std::size_t pos);

  std::vector<std::vector<Literal>> clauses_;
  std::vector<std::vector<std::uint32_t>> watches_;  // indexed by literal code
  std::vector<std::int8_t> assigns_;
  std::vector<std::int8_t> phase_;
  std::vector<std::uint32_t> level_;
  std::vector<std::uint32_t> reason_;
  std::vector<Literal> trail_;
  std::vector<std::size_t> trail_limits_;
  std::size_t propagated_ = 0;
  std::vector<double> activity_;
  double bump_amount_ = 1.0;
  std::vector<std::uint32_t> heap_;
  std::vector<std::int64_t> heap_pos_;
  std::vector<char> seen_;
  std::vector<bool> model_;
  std::vector<Literal> pending_units_;
  bool inconsistent_ = false;
  std::uint64_t conflicts_ = 0;
};

}  // namespace gatescope
