#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace gatescope {

/// Dense positive integer id tagged by the kind of object it names.
/// Id 0 is the invalid id; valid ids start at 1 and are never reused.
template <typename Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  [[nodiscard]] constexpr bool valid() const { return value != 0; }
  constexpr auto operator<=>(const Id&) const = default;
};

template <typename Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

struct GateTag {};
struct NetTag {};
struct ModuleTag {};
struct GroupingTag {};

using GateId = Id<GateTag>;
using NetId = Id<NetTag>;
using ModuleId = Id<ModuleTag>;
using GroupingId = Id<GroupingTag>;

}  // namespace gatescope

template <typename Tag>
struct std::hash<gatescope::Id<Tag>> {
  std::size_t operator()(gatescope::Id<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
