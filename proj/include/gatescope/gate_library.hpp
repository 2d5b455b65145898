#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gatescope/boolean_function.hpp"

namespace gatescope {

enum class PinDirection { input, output };

struct Pin {
  std::string name;
  PinDirection direction = PinDirection::input;

  friend bool operator==(const Pin&, const Pin&) = default;
};

enum class StateBinding { state, negated_state };

/// Edge-triggered storage element. All functions range over input pin names.
struct FlipFlopSpec {
  std::string state_var;
  std::string negated_state_var;
  BooleanFunction next_state;
  /// The element samples `next_state` when this function rises 0 -> 1.
  BooleanFunction clock;
  std::optional<BooleanFunction> async_reset;
  std::optional<BooleanFunction> async_set;
  std::map<std::string, StateBinding> output_binding;

  friend bool operator==(const FlipFlopSpec&, const FlipFlopSpec&) = default;
};

enum class GateProperty { combinational, sequential, buffer_like, constant_source };

std::string to_string(GateProperty p);

class GateType {
 public:
  /// Validates pin uniqueness, function supports and the sequential/
  /// combinational split, then derives the classification properties.
  /// Throws Error on any violation.
  GateType(std::string name, std::vector<Pin> pins, std::map<std::string, BooleanFunction> output_functions,
           std::optional<FlipFlopSpec> ff = std::nullopt);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::vector<Pin>& pins() const { return pins_; }
  [[nodiscard]] std::vector<std::string> input_pins() const;
  [[nodiscard]] std::vector<std::string> output_pins() const;
  [[nodiscard]] std::optional<PinDirection> pin_direction(std::string_view pin) const;
  [[nodiscard]] bool has_pin(std::string_view pin) const { return pin_direction(pin).has_value(); }

  /// Combinational output functions, keyed by output pin.
  [[nodiscard]] const std::map<std::string, BooleanFunction>& output_functions() const { return output_functions_; }
  [[nodiscard]] const std::optional<FlipFlopSpec>& ff() const { return ff_; }
  [[nodiscard]] const std::set<GateProperty>& properties() const { return properties_; }
  [[nodiscard]] bool has_property(GateProperty p) const { return properties_.contains(p); }
  [[nodiscard]] bool is_sequential() const { return has_property(GateProperty::sequential); }

  /// Input pins the stored value depends on, i.e. the support of next_state.
  [[nodiscard]] std::vector<std::string> data_pins() const;
  /// Input pins of clock, reset and set functions.
  [[nodiscard]] std::vector<std::string> control_pins() const;

  friend bool operator==(const GateType&, const GateType&) = default;

 private:
  std::string name_;
  std::vector<Pin> pins_;
  std::map<std::string, BooleanFunction> output_functions_;
  std::optional<FlipFlopSpec> ff_;
  std::set<GateProperty> properties_;
};

/// Immutable catalog of gate types, safe for concurrent reads.
class GateLibrary {
 public:
  GateLibrary() = default;
  /// Throws Error on duplicate type names.
  GateLibrary(std::string name, std::vector<GateType> types);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::map<std::string, GateType, std::less<>>& types() const { return types_; }
  /// Null when absent.
  [[nodiscard]] const GateType* lookup(std::string_view name) const;

  /// Copy of this library with additional types.
  [[nodiscard]] GateLibrary extended(std::vector<GateType> extra) const;

  /// First type (by name) with the property, null if none.
  [[nodiscard]] const GateType* find_with_property(GateProperty p) const;

  friend bool operator==(const GateLibrary&, const GateLibrary&) = default;

 private:
  std::string name_;
  std::map<std::string, GateType, std::less<>> types_;
};

struct Diagnostic {
  SourceLocation location;
  std::string message;

  [[nodiscard]] std::string to_string() const { return location.to_string() + ": " + message; }
};

/// Parses the liberty subset: `library`, `cell`, `pin` (direction, function)
/// and `ff` (next_state, clocked_on, clear, preset). Other attributes and
/// groups are skipped and reported in `warnings`. Throws ParseError.
GateLibrary parse_liberty(std::string_view text, std::string_view source_name = "<liberty>",
                          std::vector<Diagnostic>* warnings = nullptr);

/// Re-emits the subset understood by parse_liberty.
std::string to_liberty(const GateLibrary& library);

}  // namespace gatescope
