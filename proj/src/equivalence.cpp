#include "gatescope/equivalence.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "boolean_internal.hpp"
#include "gatescope/sat_solver.hpp"

namespace gatescope {

namespace {

using Kind = BooleanFunction::Kind;

std::vector<std::string> combined_support(const BooleanFunction& f, const BooleanFunction& g) {
  std::set<std::string> all;
  for (auto& v : f.support()) all.insert(std::move(v));
  for (auto& v : g.support()) all.insert(std::move(v));
  return {all.begin(), all.end()};
}

/// Tseitin encoding of a DAG; one solver variable per distinct non-NOT node.
class CnfEncoder {
 public:
  explicit CnfEncoder(SatSolver& solver) : solver_(solver) {}

  Literal encode(const BooleanFunction& root) {
    for (const auto& g : detail::post_order(std::span(&root, 1))) {
      if (!lits_.contains(g.node())) lits_.emplace(g.node(), encode_node(g));
    }
    return lits_.at(root.node());
  }

  [[nodiscard]] const std::map<std::string, std::uint32_t>& variables() const { return vars_; }

 private:
  Literal fresh() { return Literal::positive(solver_.new_variable()); }

  Literal encode_node(const BooleanFunction& g) {
    switch (g.kind()) {
      case Kind::constant: {
        if (!true_lit_) {
          true_lit_ = fresh();
          solver_.add_clause({*true_lit_});
        }
        return g.constant_value() ? *true_lit_ : ~*true_lit_;
      }
      case Kind::variable: {
        auto [it, inserted] = vars_.try_emplace(g.name(), 0);
        if (inserted) it->second = solver_.new_variable();
        return Literal::positive(it->second);
      }
      case Kind::op_not:
        return ~lits_.at(g.operands()[0].node());
      case Kind::op_and:
      case Kind::op_or: {
        // OR is encoded as the negation of an AND over negated operands.
        const bool is_or = g.kind() == Kind::op_or;
        const Literal out = fresh();
        std::vector<Literal> big{out};
        for (const auto& c : g.operands()) {
          Literal in = lits_.at(c.node());
          if (is_or) in = ~in;
          // out -> in
          solver_.add_clause({~out, in});
          big.push_back(~in);
        }
        // all inputs -> out
        solver_.add_clause(big);
        return is_or ? ~out : out;
      }
      case Kind::op_xor: {
        Literal acc = lits_.at(g.operands()[0].node());
        for (std::size_t i = 1; i < g.operands().size(); ++i) {
          const Literal b = lits_.at(g.operands()[i].node());
          const Literal out = fresh();
          solver_.add_clause({~out, acc, b});
          solver_.add_clause({~out, ~acc, ~b});
          solver_.add_clause({out, ~acc, b});
          solver_.add_clause({out, acc, ~b});
          acc = out;
        }
        return acc;
      }
    }
    throw Error("unreachable node kind");
  }

  SatSolver& solver_;
  std::unordered_map<const BooleanFunction::Node*, Literal> lits_;
  std::map<std::string, std::uint32_t> vars_;
  std::optional<Literal> true_lit_;
};

Verdict solve_cnf(const BooleanFunction& f, const std::vector<std::string>& support, Assignment* model,
                  std::uint64_t budget) {
  SatSolver solver;
  CnfEncoder encoder(solver);
  const Literal root = encoder.encode(f);
  solver.add_clause({root});
  switch (solver.solve(budget)) {
    case SatResult::unsatisfiable:
      return Verdict::equal;  // the miter has no satisfying assignment
    case SatResult::budget_exhausted:
      return Verdict::inconclusive;
    case SatResult::satisfiable:
      break;
  }
  if (model) {
    model->clear();
    for (const auto& name : support) {
      auto it = encoder.variables().find(name);
      (*model)[name] = it != encoder.variables().end() && solver.model_value(it->second);
    }
  }
  return Verdict::different;
}

}  // namespace

EquivalenceResult equivalent(const BooleanFunction& f, const BooleanFunction& g, const EquivalenceConfig& config) {
  EquivalenceResult result;
  if (f.node() == g.node()) {
    result.verdict = Verdict::equal;
    result.method = "identity";
    return result;
  }
  const auto support = combined_support(f, g);
  if (support.size() <= config.brute_force_max_vars && support.size() <= TruthTable::max_variables) {
    result.method = "truth-table";
    const std::vector<BooleanFunction> pair{f, g};
    const auto tables = truth_tables(pair, support);
    const auto& a = tables[0].words();
    const auto& b = tables[1].words();
    for (std::size_t w = 0; w < a.size(); ++w) {
      const std::uint64_t diff = a[w] ^ b[w];
      if (diff == 0) continue;
      std::size_t bit = 0;
      while (!((diff >> bit) & 1U)) ++bit;
      const std::size_t row = w * 64 + bit;
      result.verdict = Verdict::different;
      for (std::size_t v = 0; v < support.size(); ++v) result.counterexample[support[v]] = (row >> v) & 1U;
      return result;
    }
    result.verdict = Verdict::equal;
    return result;
  }
  result.method = "sat";
  result.verdict = solve_cnf(f ^ g, support, &result.counterexample, config.conflict_budget);
  if (result.verdict != Verdict::different) result.counterexample.clear();
  return result;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::equal: return "equal";
    case Verdict::different: return "different";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace gatescope
