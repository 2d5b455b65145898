#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gatescope/errors.hpp"
#include "gatescope/netlist.hpp"

namespace gatescope {

enum class Logic : std::uint8_t { zero, one, x };

char to_char(Logic v);
std::optional<Logic> parse_logic(std::string_view text);
inline Logic to_logic(bool b) { return b ? Logic::one : Logic::zero; }

using Time = std::uint64_t;
using ChangeList = std::vector<std::pair<Time, Logic>>;

/// Value changes applied to one net.
struct Stimulus {
  NetId net;
  ChangeList changes;  // strictly increasing times
  /// Overrides the net's driver inside the simulated region.
  bool force = false;
};

/// Periodic clock: holds `start_value` from `start_time`, toggles after
/// `period - high` ticks low or `high` ticks high.
struct ClockSpec {
  NetId net;
  Time period = 10;
  Time high = 5;
  Logic start_value = Logic::zero;
  Time start_time = 0;
};

struct SimulationInput {
  std::vector<Stimulus> stimuli;
  std::vector<ClockSpec> clocks;
  /// Flip-flop initial states; others start at X.
  std::map<GateId, Logic> initial_state;
};

struct SimulationOptions {
  std::size_t delta_cap = 1000;
};

class SimulationError : public Error {
 public:
  SimulationError(const std::string& message, std::optional<Time> time = std::nullopt, std::vector<NetId> nets = {})
      : Error(message), time_(time), nets_(std::move(nets)) {}
  [[nodiscard]] std::optional<Time> time() const { return time_; }
  [[nodiscard]] const std::vector<NetId>& nets() const { return nets_; }

 private:
  std::optional<Time> time_;
  std::vector<NetId> nets_;
};

/// Recorded simulation result. `initial` holds the settled values at time 0;
/// `changes` lists later value changes only.
struct WaveformSet {
  std::string time_unit = "1ns";
  Time end_time = 0;
  std::map<NetId, std::string> names;
  std::map<NetId, Logic> initial;
  std::map<NetId, ChangeList> changes;

  friend bool operator==(const WaveformSet&, const WaveformSet&) = default;
};

/// Event-driven, zero-delay, 3-valued simulation of `region` (whole netlist
/// when empty) from time 0 to `until`. Throws SimulationError on missing
/// drivers, conflicting stimuli or an oscillation beyond the delta cap.
WaveformSet simulate(const Netlist& netlist, const std::optional<std::set<GateId>>& region,
                     const SimulationInput& input, Time until, const SimulationOptions& options = {});

/// Value of every recorded net at `t` (a change at exactly `t` is visible).
/// Throws Error when t exceeds the end time.
std::map<NetId, Logic> state_at(const WaveformSet& waveforms, Time t);
Logic value_at(const WaveformSet& waveforms, NetId net, Time t);

struct VcdOptions {
  std::string module_name = "top";
  std::string date;
  std::string version = "gatescope";
  /// Nets to dump; all recorded nets when empty.
  std::optional<std::set<NetId>> nets;
};

/// VCD identifier for the n-th dumped variable (0-based).
std::string vcd_identifier(std::size_t index);
void write_vcd(const WaveformSet& waveforms, std::ostream& out, const VcdOptions& options = {});

/// Stimulus text format, one directive per line (`#` starts a comment):
///   <net> <time> <value>              value change, value in 0/1/x
///   force <net> <time> <value>        change that overrides the net's driver
///   clock <net> <period> [<high> [<start> [<start_time>]]]
///   init <gate> <value>               flip-flop initial state
/// Nets and gates are referenced by name. Throws ParseError.
SimulationInput parse_stimulus(std::string_view text, const Netlist& netlist, std::string_view source_name = "<stimulus>");

}  // namespace gatescope
