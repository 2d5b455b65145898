#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gatescope/dataflow.hpp"
#include "gatescope/errors.hpp"
#include "gatescope/netlist.hpp"
#include "gatescope/word_level.hpp"

namespace gatescope {

/// Raised inside a pass when its cancel flag is observed.
class PassCancelled : public Error {
 public:
  PassCancelled() : Error("pass cancelled") {}
};

struct PassContext {
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(double)> progress;

  void check() const {
    if (cancel != nullptr && cancel->load()) throw PassCancelled();
  }
  void report(double fraction) const {
    if (progress) progress(fraction);
  }
};

/// Names accepted by run_pass: dataflow, crypto, identify, bitorder.
const std::vector<std::string>& pass_names();

/// Runs one analysis pass and returns its serialized result. `prior` holds
/// stored results of earlier passes (a stored dataflow result is reused by
/// the later passes). `config` is the JSON configuration document; each
/// pass reads the object under its own name plus "equivalence".
///
/// config keys:
///   dataflow:    expected_widths (array), max_rounds
///   crypto:      threads
///   identify:    max_width, fallback_width, registers (array of group names),
///                words (arrays of flip-flop names, each one register candidate)
///   equivalence: brute_force_max_vars, conflict_budget
nlohmann::json run_pass(const std::string& name, const Netlist& netlist,
                        const std::map<std::string, nlohmann::json>& prior, const nlohmann::json& config,
                        const PassContext& context = {});

DataflowConfig dataflow_config(const nlohmann::json& config);
IdentifyConfig identify_config(const nlohmann::json& config);

/// Dataflow graph from a stored result, or freshly recovered.
DataflowGraph dataflow_for(const Netlist& netlist, const std::map<std::string, nlohmann::json>& prior,
                           const nlohmann::json& config);

/// Candidates derived from a dataflow graph: every register's own step
/// function, and the data inputs of every register fed by one or two
/// other registers.
struct NamedCandidate {
  std::string label;
  ModuleCandidate candidate;
};
std::vector<NamedCandidate> dataflow_candidates(const Netlist& netlist, const DataflowGraph& dataflow);

IdentifiedModule identified_from_json(const nlohmann::json& doc);

/// Resolves a register reference: a group name, or the name of a member
/// flip-flop. Throws Error when nothing matches.
std::uint32_t resolve_group(const Netlist& netlist, const DataflowGraph& dataflow, const std::string& ref);

/// Stored results that refer to the output of `pass` and go stale when it
/// is recomputed.
std::vector<std::string> dependent_passes(const std::string& pass);

/// Parses `SRC->DST` highlight requests (register references as accepted
/// by resolve_group). Requests naming no existing edge are appended to
/// `missing`. Throws Error on malformed text or unknown registers.
std::set<GroupEdge> resolve_highlights(const Netlist& netlist, const DataflowGraph& dataflow,
                                       const std::vector<std::string>& requests, std::vector<std::string>* missing);

}  // namespace gatescope
