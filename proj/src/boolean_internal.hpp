#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gatescope/boolean_function.hpp"

namespace gatescope::detail {

/// Distinct nodes reachable from `roots`, operands before their parents.
std::vector<BooleanFunction> post_order(std::span<const BooleanFunction> roots);

bool structurally_equal(const BooleanFunction& a, const BooleanFunction& b);

/// Total order used to canonicalize operand lists; a literal sorts next to
/// its complement.
int compare(const BooleanFunction& a, const BooleanFunction& b);

/// 64 consecutive truth-table rows of variable `var`, starting at row 64*word.
std::uint64_t variable_word(std::size_t var, std::size_t word);

}  // namespace gatescope::detail
