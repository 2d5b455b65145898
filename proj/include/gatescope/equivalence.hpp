#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "gatescope/boolean_function.hpp"

namespace gatescope {

struct EquivalenceConfig {
  /// Combined supports up to this size are decided by exhaustive truth tables.
  std::size_t brute_force_max_vars = 14;
  /// Conflict cap for the CNF search beyond the brute-force threshold.
  std::uint64_t conflict_budget = 200000;
};

enum class Verdict { equal, different, inconclusive };

struct EquivalenceResult {
  Verdict verdict = Verdict::inconclusive;
  /// Only for `different`: an assignment over the combined support on which
  /// the two functions disagree.
  Assignment counterexample;
  std::string method;  // "truth-table" or "sat"

  [[nodiscard]] bool equal() const { return verdict == Verdict::equal; }
};

/// Decides whether f XOR g is unsatisfiable. Never wrong: when the conflict
/// budget runs out the verdict is `inconclusive`.
EquivalenceResult equivalent(const BooleanFunction& f, const BooleanFunction& g,
                             const EquivalenceConfig& config = {});

std::string to_string(Verdict v);

}  // namespace gatescope
